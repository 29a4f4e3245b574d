#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseLU>
#include <Eigen/UmfPackSupport>
#include <complex>
#include <sstream>

#include "pmlwave/fem.hpp"

namespace pmlwave {

DofMap::DofMap(const Mesh& mesh) : DofMap(mesh.vertex_count(), mesh.boundary_vertex_mask()) {}

DofMap::DofMap(int vertex_count, std::vector<bool> dirichlet_mask)
    : n_(vertex_count), mask_(std::move(dirichlet_mask)), u_index_(vertex_count, -1) {
  if (static_cast<int>(mask_.size()) != n_) throw std::invalid_argument("Dirichlet mask size mismatch");
  for (int v = 0; v < n_; ++v)
    if (!mask_[v]) u_index_[v] = free_u_++;
}

template <class Scalar>
SparseMatrix<Scalar> select_rows_cols(const SparseMatrix<Scalar>& matrix,
                                      const std::vector<int>& rows, const std::vector<int>& cols) {
  std::vector<int> new_row(matrix.rows(), -1);
  for (std::size_t i = 0; i < rows.size(); ++i) new_row[rows[i]] = static_cast<int>(i);
  std::vector<Eigen::Triplet<Scalar, int>> trip;
  trip.reserve(matrix.nonZeros());
  for (std::size_t c = 0; c < cols.size(); ++c) {
    for (typename SparseMatrix<Scalar>::InnerIterator it(matrix, cols[c]); it; ++it) {
      const int r = new_row[it.row()];
      if (r >= 0) trip.emplace_back(r, static_cast<int>(c), it.value());
    }
  }
  SparseMatrix<Scalar> out(static_cast<int>(rows.size()), static_cast<int>(cols.size()));
  out.setFromTriplets(trip.begin(), trip.end());
  return out;
}

template <class Scalar>
Vector<Scalar> ConstrainedSystem<Scalar>::expand(const Vector<Scalar>& reduced) const {
  Vector<Scalar> full = Vector<Scalar>::Zero(full_size);
  for (std::size_t i = 0; i < free_to_full.size(); ++i) full[free_to_full[i]] = reduced[i];
  return full;
}

template <class Scalar>
Vector<Scalar> ConstrainedSystem<Scalar>::restrict_vector(const Vector<Scalar>& full) const {
  Vector<Scalar> reduced(free_to_full.size());
  for (std::size_t i = 0; i < free_to_full.size(); ++i) reduced[i] = full[free_to_full[i]];
  return reduced;
}

template <class Scalar>
ConstrainedSystem<Scalar> apply_dirichlet(const SparseMatrix<Scalar>& matrix,
                                          const Vector<Scalar>& rhs,
                                          const std::vector<bool>& mask) {
  const auto n = static_cast<std::size_t>(matrix.rows());
  if (matrix.rows() != matrix.cols() || mask.size() != n || static_cast<std::size_t>(rhs.size()) != n) {
    std::ostringstream err;
    err << "apply_dirichlet: matrix " << matrix.rows() << "x" << matrix.cols() << ", rhs "
        << rhs.size() << ", mask " << mask.size();
    throw std::invalid_argument(err.str());
  }
  ConstrainedSystem<Scalar> sys;
  sys.full_size = static_cast<int>(n);
  for (std::size_t i = 0; i < n; ++i)
    if (!mask[i]) sys.free_to_full.push_back(static_cast<int>(i));
  sys.matrix = select_rows_cols(matrix, sys.free_to_full, sys.free_to_full);
  sys.rhs = sys.restrict_vector(rhs);
  return sys;
}

template <class Scalar>
SparseMatrix<Scalar> compose_blocks(int rows, int cols,
                                    const std::vector<MatrixBlock<Scalar>>& blocks) {
  std::size_t nnz = 0;
  for (const auto& b : blocks) nnz += b.matrix->nonZeros();
  std::vector<Eigen::Triplet<Scalar, int>> trip;
  trip.reserve(nnz);
  for (const auto& b : blocks) {
    if (b.row + b.matrix->rows() > rows || b.col + b.matrix->cols() > cols)
      throw std::invalid_argument("compose_blocks: block does not fit");
    for (int c = 0; c < b.matrix->outerSize(); ++c)
      for (typename SparseMatrix<Scalar>::InnerIterator it(*b.matrix, c); it; ++it)
        trip.emplace_back(b.row + it.row(), b.col + it.col(), b.scale * it.value());
  }
  SparseMatrix<Scalar> out(rows, cols);
  out.setFromTriplets(trip.begin(), trip.end());
  return out;
}

SolverKind parse_solver_kind(const std::string& name) {
  if (name == "umfpack") return SolverKind::kUmfpack;
  if (name == "sparselu") return SolverKind::kSparseLU;
  if (name == "bicgstab") return SolverKind::kBiCGSTAB;
  throw std::invalid_argument("unknown solver '" + name + "' (umfpack, sparselu, bicgstab)");
}

std::string to_string(SolverKind kind) {
  switch (kind) {
    case SolverKind::kUmfpack: return "umfpack";
    case SolverKind::kSparseLU: return "sparselu";
    case SolverKind::kBiCGSTAB: return "bicgstab";
  }
  return "?";
}

template <class Scalar>
struct LinearSolver<Scalar>::Impl {
  using Matrix = SparseMatrix<Scalar>;
  std::unique_ptr<Eigen::UmfPackLU<Matrix>> umfpack;
  std::unique_ptr<Eigen::SparseLU<Matrix, Eigen::COLAMDOrdering<int>>> sparselu;
  std::unique_ptr<Eigen::BiCGSTAB<Matrix, Eigen::IncompleteLUT<Scalar>>> bicgstab;
};

template <class Scalar>
LinearSolver<Scalar>::LinearSolver(SolverOptions options)
    : options_(options), impl_(std::make_unique<Impl>()), mutex_(std::make_unique<std::mutex>()) {}

template <class Scalar>
LinearSolver<Scalar>::~LinearSolver() = default;
template <class Scalar>
LinearSolver<Scalar>::LinearSolver(LinearSolver&&) noexcept = default;
template <class Scalar>
LinearSolver<Scalar>& LinearSolver<Scalar>::operator=(LinearSolver&&) noexcept = default;

template <class Scalar>
void LinearSolver<Scalar>::factorize(const SparseMatrix<Scalar>& matrix) {
  if (matrix.rows() != matrix.cols()) throw SolverError("solver needs a square matrix");
  matrix_ = matrix;
  matrix_.makeCompressed();
  auto fail = [&](const std::string& detail) {
    std::ostringstream err;
    err << to_string(options_.kind) << " factorization failed for a " << matrix_.rows() << "x"
        << matrix_.cols() << " matrix with " << matrix_.nonZeros()
        << " non-zeros: " << detail;
    throw SolverError(err.str());
  };
  switch (options_.kind) {
    case SolverKind::kUmfpack: {
      impl_->umfpack = std::make_unique<Eigen::UmfPackLU<SparseMatrix<Scalar>>>();
      // Refinement is done below only when the residual check asks for it.
      impl_->umfpack->umfpackControl()(UMFPACK_IRSTEP) = 0;
      impl_->umfpack->compute(matrix_);
      if (impl_->umfpack->info() != Eigen::Success) {
        const int status = impl_->umfpack->umfpackFactorizeReturncode();
        fail(status == UMFPACK_WARNING_singular_matrix ? "matrix is singular"
                                                       : "UMFPACK status " + std::to_string(status));
      }
      break;
    }
    case SolverKind::kSparseLU: {
      impl_->sparselu = std::make_unique<Eigen::SparseLU<SparseMatrix<Scalar>, Eigen::COLAMDOrdering<int>>>();
      impl_->sparselu->compute(matrix_);
      if (impl_->sparselu->info() != Eigen::Success) fail(impl_->sparselu->lastErrorMessage());
      break;
    }
    case SolverKind::kBiCGSTAB: {
      impl_->bicgstab =
          std::make_unique<Eigen::BiCGSTAB<SparseMatrix<Scalar>, Eigen::IncompleteLUT<Scalar>>>();
      impl_->bicgstab->setTolerance(options_.tolerance);
      impl_->bicgstab->setMaxIterations(options_.max_iterations);
      impl_->bicgstab->compute(matrix_);
      if (impl_->bicgstab->info() != Eigen::Success) fail("incomplete LU preconditioner failed");
      break;
    }
  }
}

template <class Scalar>
Vector<Scalar> LinearSolver<Scalar>::solve(const Vector<Scalar>& rhs) const {
  if (rhs.size() != matrix_.rows()) {
    std::ostringstream err;
    err << "right-hand side has length " << rhs.size() << ", system has " << matrix_.rows();
    throw SolverError(err.str());
  }
  std::lock_guard<std::mutex> lock(*mutex_);
  const double bnorm = rhs.norm();
  if (bnorm == 0.0) {
    last_residual_ = 0.0;
    return Vector<Scalar>::Zero(rhs.size());
  }
  auto direct = [&](const Vector<Scalar>& b) -> Vector<Scalar> {
    switch (options_.kind) {
      case SolverKind::kUmfpack:
        if (!impl_->umfpack) throw SolverError("solve() before factorize()");
        return impl_->umfpack->solve(b);
      case SolverKind::kSparseLU:
        if (!impl_->sparselu) throw SolverError("solve() before factorize()");
        return impl_->sparselu->solve(b);
      case SolverKind::kBiCGSTAB: {
        if (!impl_->bicgstab) throw SolverError("solve() before factorize()");
        Vector<Scalar> y = impl_->bicgstab->solve(b);
        if (impl_->bicgstab->info() != Eigen::Success) {
          std::ostringstream err;
          err << "BiCGSTAB did not converge: " << impl_->bicgstab->iterations()
              << " iterations, estimated error " << impl_->bicgstab->error();
          throw SolverError(err.str());
        }
        return y;
      }
    }
    return {};
  };
  Vector<Scalar> x = direct(rhs);
  if (!x.allFinite()) throw SolverError("solution contains NaN or Inf");
  const double limit =
      options_.kind == SolverKind::kBiCGSTAB ? std::max(options_.max_residual, 10 * options_.tolerance)
                                             : options_.max_residual;
  Vector<Scalar> r = rhs - matrix_ * x;
  last_residual_ = r.norm() / bnorm;
  // A couple of refinement sweeps before giving up.
  for (int sweep = 0; sweep < 2 && last_residual_ > limit && options_.kind != SolverKind::kBiCGSTAB;
       ++sweep) {
    x += direct(r);
    r = rhs - matrix_ * x;
    last_residual_ = r.norm() / bnorm;
  }
  if (!x.allFinite()) throw SolverError("solution contains NaN or Inf");
  if (last_residual_ > limit) {
    std::ostringstream err;
    err << "relative residual " << last_residual_ << " exceeds " << limit
        << " (matrix nearly singular?)";
    throw SolverError(err.str());
  }
  return x;
}

template <class Scalar>
Vector<Scalar> solve(const SparseMatrix<Scalar>& matrix, const Vector<Scalar>& rhs,
                     SolverOptions options) {
  LinearSolver<Scalar> solver(options);
  solver.factorize(matrix);
  return solver.solve(rhs);
}

#define PMLWAVE_INSTANTIATE(S)                                                                   \
  template SparseMatrix<S> select_rows_cols<S>(const SparseMatrix<S>&, const std::vector<int>&,  \
                                               const std::vector<int>&);                         \
  template struct ConstrainedSystem<S>;                                                          \
  template ConstrainedSystem<S> apply_dirichlet<S>(const SparseMatrix<S>&, const Vector<S>&,     \
                                                   const std::vector<bool>&);                    \
  template SparseMatrix<S> compose_blocks<S>(int, int, const std::vector<MatrixBlock<S>>&);        \
  template class LinearSolver<S>;                                                                \
  template Vector<S> solve<S>(const SparseMatrix<S>&, const Vector<S>&, SolverOptions);

PMLWAVE_INSTANTIATE(double)
PMLWAVE_INSTANTIATE(std::complex<double>)

}  // namespace pmlwave
