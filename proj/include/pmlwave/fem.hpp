#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>
#include <complex>
#include <functional>
#include <iosfwd>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "pmlwave/geometry.hpp"

namespace pmlwave {

template <class Scalar>
using SparseMatrix = Eigen::SparseMatrix<Scalar, Eigen::ColMajor, int>;
template <class Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <class Scalar>
using Tensor2 = Eigen::Matrix<Scalar, 2, 2>;

using RealSparse = SparseMatrix<double>;
using ComplexSparse = SparseMatrix<std::complex<double>>;
using RealVector = Vector<double>;
using ComplexVector = Vector<std::complex<double>>;

/// Coefficients are evaluated per quadrature point and also receive the
/// triangle index, so region-dependent data (PML or physical) is unambiguous
/// on the interface.
template <class Scalar>
using ScalarField = std::function<Scalar(Point, int)>;
template <class Scalar>
using TensorField = std::function<Tensor2<Scalar>(Point, int)>;

enum class Quadrature {
  kCentroid,      // 1 point
  kVertex,        // 3 points at the corners (lumped)
  kEdgeMidpoint,  // 3 points, exact for quadratics
};

enum class Execution { kParallel, kSerial };

struct AssemblyOptions {
  Quadrature quadrature = Quadrature::kEdgeMidpoint;
  Execution execution = Execution::kParallel;
};

/// Element geometry of a straight triangle.
struct ElementGeometry {
  double area = 0.0;
  // grad[i] = gradient of the barycentric coordinate of corner i.
  std::array<Eigen::Vector2d, 3> grad;
  std::array<Point, 3> corners;

  static ElementGeometry of(const Mesh& mesh, int triangle);
  Point at(const std::array<double, 3>& lambda) const;
};

struct QuadraturePoint {
  std::array<double, 3> lambda;
  double weight;  // fraction of the element area
};

const std::vector<QuadraturePoint>& quadrature_rule(Quadrature rule);

/// (M)_ij = int w phi_j phi_i
template <class Scalar>
SparseMatrix<Scalar> assemble_mass(const Mesh& mesh, const ScalarField<Scalar>& weight,
                                   AssemblyOptions options = {});
RealSparse assemble_mass(const Mesh& mesh, AssemblyOptions options = {});

/// (K)_ij = int (T grad phi_j) . grad phi_i
template <class Scalar>
SparseMatrix<Scalar> assemble_stiffness(const Mesh& mesh, const TensorField<Scalar>& tensor,
                                        AssemblyOptions options = {});
RealSparse assemble_stiffness(const Mesh& mesh, AssemblyOptions options = {});

/// Mass matrix of a tensor pairing int (T p) . q for P1 vector fields, with the
/// x components first and the y components second (size 2N).
template <class Scalar>
SparseMatrix<Scalar> assemble_tensor_mass(const Mesh& mesh, const TensorField<Scalar>& tensor,
                                          AssemblyOptions options = {});

/// (B_x)_ij = int phi_j d(phi_i)/dx and likewise B_y.
std::pair<RealSparse, RealSparse> assemble_gradient_coupling(const Mesh& mesh,
                                                             AssemblyOptions options = {});

/// Vertex-to-unknown numbering for the four fields (u, p, u*, p*). Constrained
/// u DOFs get no unknown.
class DofMap {
 public:
  explicit DofMap(const Mesh& mesh);
  DofMap(int vertex_count, std::vector<bool> dirichlet_mask);

  int vertex_count() const { return n_; }
  int free_u_count() const { return free_u_; }
  int total() const { return free_u_ + 5 * n_; }
  const std::vector<bool>& dirichlet_mask() const { return mask_; }

  int u(int vertex) const { return u_index_[vertex]; }  // -1 when constrained
  int p(int vertex, int component) const { return free_u_ + component * n_ + vertex; }
  int u_star(int vertex) const { return free_u_ + 2 * n_ + vertex; }
  int p_star(int vertex, int component) const { return free_u_ + 3 * n_ + component * n_ + vertex; }

  int p_offset() const { return free_u_; }
  int u_star_offset() const { return free_u_ + 2 * n_; }
  int p_star_offset() const { return free_u_ + 3 * n_; }

 private:
  int n_ = 0;
  int free_u_ = 0;
  std::vector<bool> mask_;
  std::vector<int> u_index_;
};

/// Symmetric elimination of zero Dirichlet values.
template <class Scalar>
struct ConstrainedSystem {
  SparseMatrix<Scalar> matrix;
  Vector<Scalar> rhs;
  std::vector<int> free_to_full;
  int full_size = 0;

  Vector<Scalar> expand(const Vector<Scalar>& reduced) const;
  Vector<Scalar> restrict_vector(const Vector<Scalar>& full) const;
};

template <class Scalar>
ConstrainedSystem<Scalar> apply_dirichlet(const SparseMatrix<Scalar>& matrix,
                                          const Vector<Scalar>& rhs,
                                          const std::vector<bool>& mask);

/// Keeps rows/cols i with keep[i] true; used to drop constrained DOFs.
template <class Scalar>
SparseMatrix<Scalar> select_rows_cols(const SparseMatrix<Scalar>& matrix,
                                      const std::vector<int>& rows, const std::vector<int>& cols);

/// One block of a composed matrix: scale * matrix placed at (row, col).
template <class Scalar>
struct MatrixBlock {
  int row = 0;
  int col = 0;
  const SparseMatrix<Scalar>* matrix = nullptr;
  Scalar scale = Scalar(1);
};

template <class Scalar>
SparseMatrix<Scalar> compose_blocks(int rows, int cols,
                                    const std::vector<MatrixBlock<Scalar>>& blocks);

class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class SolverKind { kUmfpack, kSparseLU, kBiCGSTAB };

SolverKind parse_solver_kind(const std::string& name);
std::string to_string(SolverKind kind);

struct SolverOptions {
  SolverKind kind = SolverKind::kUmfpack;
  double tolerance = 1e-12;  // iterative only
  int max_iterations = 10000;
  double max_residual = 1e-9;  // direct solves are checked against this
};

/// Factor once, solve many times. solve() is serialized by an internal mutex.
template <class Scalar>
class LinearSolver {
 public:
  explicit LinearSolver(SolverOptions options = {});
  ~LinearSolver();
  LinearSolver(LinearSolver&&) noexcept;
  LinearSolver& operator=(LinearSolver&&) noexcept;

  void factorize(const SparseMatrix<Scalar>& matrix);
  Vector<Scalar> solve(const Vector<Scalar>& rhs) const;
  double last_residual() const { return last_residual_; }
  int size() const { return static_cast<int>(matrix_.rows()); }

 private:
  struct Impl;
  SolverOptions options_;
  SparseMatrix<Scalar> matrix_;
  std::unique_ptr<Impl> impl_;
  mutable std::unique_ptr<std::mutex> mutex_;
  mutable double last_residual_ = 0.0;
};

template <class Scalar>
Vector<Scalar> solve(const SparseMatrix<Scalar>& matrix, const Vector<Scalar>& rhs,
                     SolverOptions options = {});

/// "row col value" lines (0-based); complex values print as "re im".
template <class Scalar>
void write_coo(std::ostream& out, const SparseMatrix<Scalar>& matrix);

}  // namespace pmlwave
