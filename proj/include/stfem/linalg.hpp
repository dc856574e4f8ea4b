#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "stfem/common.hpp"

namespace stfem {

/// Square sparse matrix in compressed-row storage with sorted column indices.
struct CsrMatrix {
  int n = 0;
  std::vector<std::int64_t> row_ptr;  ///< n+1 entries
  std::vector<std::int32_t> col;
  std::vector<double> val;

  std::int64_t nnz() const { return static_cast<std::int64_t>(col.size()); }
  void matvec(const double* x, double* y) const;
  std::vector<double> residual(const std::vector<double>& b,
                               const std::vector<double>& x) const;
  /// Pointer to the stored entry (i,j), or nullptr if outside the pattern.
  double* entry(int i, int j);
  const double* entry(int i, int j) const;
};

struct Triplet {
  int row;
  int col;
  double value;
};

/// Builds an n-by-n CSR matrix from coordinate entries, summing duplicates.
/// The triplet buffer is consumed (sorted in place).
CsrMatrix csr_from_triplets(int n, std::vector<Triplet>& entries);

double dot(const std::vector<double>& a, const std::vector<double>& b);
double norm2(const std::vector<double>& a);

enum class Preconditioner { None, Jacobi, Ilu0 };

struct SolveReport {
  int iterations = 0;
  int restarts = 0;
  double initial_residual = 0.0;
  double final_residual = 0.0;  ///< true residual norm ||b - A x||
  bool converged = false;
  /// Set when ILU(0) hit a (near-)zero pivot and Jacobi was used instead.
  bool precond_fallback = false;
};

struct SolverConfig {
  Preconditioner precond = Preconditioner::Ilu0;
  int restart = 50;
  double rel_tol = 1e-8;
  int max_iters = 5000;
};

/// ILU(0): incomplete LU restricted to the sparsity pattern of A.
class Ilu0 {
 public:
  explicit Ilu0(const CsrMatrix& A);
  bool ok() const { return ok_; }
  void apply(const double* r, double* z) const;

 private:
  const CsrMatrix* a_;
  std::vector<double> lu_;
  std::vector<std::int64_t> diag_;  ///< position of the diagonal in each row
  bool ok_ = false;
};

/// Restarted flexible GMRES with right preconditioning. x holds the initial
/// guess on entry and the solution on exit. The convergence test and the
/// reported final residual use the true residual, not the Arnoldi recurrence:
/// on success ||b - A x|| <= rel_tol * ||b - A x0||.
SolveReport gmres(const CsrMatrix& A, const std::vector<double>& b,
                  std::vector<double>& x, const SolverConfig& cfg);

/// Conjugate gradients for symmetric positive definite systems. Throws when
/// negative curvature is detected. Non-converged returns (iteration cap) are
/// reported, not thrown, so a few fixed sweeps can be requested cheaply.
SolveReport cg(const CsrMatrix& A, const std::vector<double>& b,
               std::vector<double>& x, double rel_tol, int max_iters);

/// MatrixMarket coordinate output (general real).
void write_matrix_market(std::ostream& out, const CsrMatrix& A);

}  // namespace stfem
