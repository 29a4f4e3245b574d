// P1 element loops. Each kernel emits local triplets per triangle; the
// parallel path gives every thread a contiguous block of triangles
// (schedule(static)) and concatenates the per-thread buffers in thread order,
// so the triplet list and hence every summed entry is identical to the
// serial path.

#include <omp.h>

#include <complex>
#include <ostream>

#include "pmlwave/fem.hpp"

namespace pmlwave {

namespace {

template <class Scalar>
using Triplets = std::vector<Eigen::Triplet<Scalar, int>>;

template <class Scalar, class Kernel>
SparseMatrix<Scalar> run_element_loop(const Mesh& mesh, int rows, int cols,
                                      Execution execution, const Kernel& kernel) {
  const int nt = mesh.triangle_count();
  Triplets<Scalar> all;
  if (execution == Execution::kSerial) {
    all.reserve(static_cast<std::size_t>(nt) * 9);
    for (int k = 0; k < nt; ++k) kernel(k, all);
  } else {
    std::vector<Triplets<Scalar>> buffers;
#pragma omp parallel
    {
#pragma omp single
      buffers.resize(omp_get_num_threads());
      auto& local = buffers[omp_get_thread_num()];
      local.reserve(static_cast<std::size_t>(nt) * 9 / buffers.size() + 9);
#pragma omp for schedule(static)
      for (int k = 0; k < nt; ++k) kernel(k, local);
    }
    std::size_t total = 0;
    for (const auto& b : buffers) total += b.size();
    all.reserve(total);
    for (const auto& b : buffers) all.insert(all.end(), b.begin(), b.end());
  }
  SparseMatrix<Scalar> matrix(rows, cols);
  matrix.setFromTriplets(all.begin(), all.end());
  return matrix;
}

template <class Scalar>
bool is_zero(const Scalar& v) {
  return v == Scalar(0);
}

}  // namespace

ElementGeometry ElementGeometry::of(const Mesh& mesh, int triangle) {
  ElementGeometry g;
  const auto& t = mesh.triangles[triangle];
  for (int i = 0; i < 3; ++i) g.corners[i] = mesh.vertices[t[i]];
  g.area = mesh.signed_area(triangle);
  const double inv = 1.0 / (2.0 * g.area);
  for (int i = 0; i < 3; ++i) {
    const Point pj = g.corners[(i + 1) % 3], pk = g.corners[(i + 2) % 3];
    g.grad[i] = Eigen::Vector2d((pj.y - pk.y) * inv, (pk.x - pj.x) * inv);
  }
  return g;
}

Point ElementGeometry::at(const std::array<double, 3>& l) const {
  return {l[0] * corners[0].x + l[1] * corners[1].x + l[2] * corners[2].x,
          l[0] * corners[0].y + l[1] * corners[1].y + l[2] * corners[2].y};
}

const std::vector<QuadraturePoint>& quadrature_rule(Quadrature rule) {
  static const std::vector<QuadraturePoint> centroid{{{1.0 / 3, 1.0 / 3, 1.0 / 3}, 1.0}};
  static const std::vector<QuadraturePoint> vertex{
      {{1.0, 0.0, 0.0}, 1.0 / 3}, {{0.0, 1.0, 0.0}, 1.0 / 3}, {{0.0, 0.0, 1.0}, 1.0 / 3}};
  static const std::vector<QuadraturePoint> midpoint{
      {{0.5, 0.5, 0.0}, 1.0 / 3}, {{0.0, 0.5, 0.5}, 1.0 / 3}, {{0.5, 0.0, 0.5}, 1.0 / 3}};
  switch (rule) {
    case Quadrature::kCentroid: return centroid;
    case Quadrature::kVertex: return vertex;
    case Quadrature::kEdgeMidpoint: break;
  }
  return midpoint;
}

template <class Scalar>
SparseMatrix<Scalar> assemble_mass(const Mesh& mesh, const ScalarField<Scalar>& weight,
                                   AssemblyOptions options) {
  const auto& rule = quadrature_rule(options.quadrature);
  const int n = mesh.vertex_count();
  return run_element_loop<Scalar>(mesh, n, n, options.execution, [&](int k, Triplets<Scalar>& out) {
    const auto g = ElementGeometry::of(mesh, k);
    Eigen::Matrix<Scalar, 3, 3> local = Eigen::Matrix<Scalar, 3, 3>::Zero();
    bool any = false;
    for (const auto& q : rule) {
      const Scalar w = weight(g.at(q.lambda), k) * (g.area * q.weight);
      if (is_zero(w)) continue;
      any = true;
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) local(i, j) += w * (q.lambda[i] * q.lambda[j]);
    }
    if (!any) return;
    const auto& t = mesh.triangles[k];
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) out.emplace_back(t[i], t[j], local(i, j));
  });
}

RealSparse assemble_mass(const Mesh& mesh, AssemblyOptions options) {
  return assemble_mass<double>(mesh, [](Point, int) { return 1.0; }, options);
}

template <class Scalar>
SparseMatrix<Scalar> assemble_stiffness(const Mesh& mesh, const TensorField<Scalar>& tensor,
                                        AssemblyOptions options) {
  const auto& rule = quadrature_rule(options.quadrature);
  const int n = mesh.vertex_count();
  return run_element_loop<Scalar>(mesh, n, n, options.execution, [&](int k, Triplets<Scalar>& out) {
    const auto g = ElementGeometry::of(mesh, k);
    Tensor2<Scalar> mean = Tensor2<Scalar>::Zero();
    for (const auto& q : rule) mean += tensor(g.at(q.lambda), k) * Scalar(q.weight);
    const auto& t = mesh.triangles[k];
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        const Scalar v = g.area * (g.grad[i].cast<Scalar>().dot(mean * g.grad[j].cast<Scalar>()));
        out.emplace_back(t[i], t[j], v);
      }
    }
  });
}

RealSparse assemble_stiffness(const Mesh& mesh, AssemblyOptions options) {
  return assemble_stiffness<double>(
      mesh, [](Point, int) -> Tensor2<double> { return Tensor2<double>::Identity(); }, options);
}

template <class Scalar>
SparseMatrix<Scalar> assemble_tensor_mass(const Mesh& mesh, const TensorField<Scalar>& tensor,
                                          AssemblyOptions options) {
  const auto& rule = quadrature_rule(options.quadrature);
  const int n = mesh.vertex_count();
  return run_element_loop<Scalar>(
      mesh, 2 * n, 2 * n, options.execution, [&](int k, Triplets<Scalar>& out) {
        const auto g = ElementGeometry::of(mesh, k);
        std::array<Eigen::Matrix<Scalar, 3, 3>, 4> local;
        for (auto& m : local) m.setZero();
        bool any = false;
        for (const auto& q : rule) {
          const Tensor2<Scalar> T = tensor(g.at(q.lambda), k) * Scalar(g.area * q.weight);
          if (T.isZero(0.0)) continue;
          any = true;
          for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b)
              for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j)
                  local[2 * a + b](i, j) += T(a, b) * (q.lambda[i] * q.lambda[j]);
        }
        if (!any) return;
        const auto& t = mesh.triangles[k];
        for (int a = 0; a < 2; ++a)
          for (int b = 0; b < 2; ++b)
            for (int i = 0; i < 3; ++i)
              for (int j = 0; j < 3; ++j)
                out.emplace_back(a * n + t[i], b * n + t[j], local[2 * a + b](i, j));
      });
}

std::pair<RealSparse, RealSparse> assemble_gradient_coupling(const Mesh& mesh,
                                                             AssemblyOptions options) {
  const int n = mesh.vertex_count();
  auto component = [&](int d) {
    return run_element_loop<double>(mesh, n, n, options.execution, [&](int k, Triplets<double>& out) {
      const auto g = ElementGeometry::of(mesh, k);
      const auto& t = mesh.triangles[k];
      // int phi_j = area / 3 on every P1 hat.
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) out.emplace_back(t[i], t[j], g.area / 3.0 * g.grad[i](d));
    });
  };
  return {component(0), component(1)};
}

template <class Scalar>
void write_coo(std::ostream& out, const SparseMatrix<Scalar>& matrix) {
  out.precision(17);
  out << "# " << matrix.rows() << ' ' << matrix.cols() << ' ' << matrix.nonZeros() << '\n';
  for (int c = 0; c < matrix.outerSize(); ++c) {
    for (typename SparseMatrix<Scalar>::InnerIterator it(matrix, c); it; ++it) {
      out << it.row() << ' ' << it.col() << ' ';
      if constexpr (std::is_same_v<Scalar, double>)
        out << it.value() << '\n';
      else
        out << it.value().real() << ' ' << it.value().imag() << '\n';
    }
  }
}

#define PMLWAVE_INSTANTIATE(S)                                                                  \
  template SparseMatrix<S> assemble_mass<S>(const Mesh&, const ScalarField<S>&, AssemblyOptions); \
  template SparseMatrix<S> assemble_stiffness<S>(const Mesh&, const TensorField<S>&,             \
                                                 AssemblyOptions);                               \
  template SparseMatrix<S> assemble_tensor_mass<S>(const Mesh&, const TensorField<S>&,           \
                                                   AssemblyOptions);                             \
  template void write_coo<S>(std::ostream&, const SparseMatrix<S>&);

PMLWAVE_INSTANTIATE(double)
PMLWAVE_INSTANTIATE(std::complex<double>)

}  // namespace pmlwave
