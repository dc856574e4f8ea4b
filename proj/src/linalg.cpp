#include "stfem/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <ostream>

namespace stfem {

void CsrMatrix::matvec(const double* x, double* y) const {
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::int64_t k = row_ptr[i]; k < row_ptr[i + 1]; ++k) {
      s += val[k] * x[col[k]];
    }
    y[i] = s;
  }
}

std::vector<double> CsrMatrix::residual(const std::vector<double>& b,
                                        const std::vector<double>& x) const {
  if (static_cast<int>(b.size()) != n || static_cast<int>(x.size()) != n) {
    throw InvalidInput("residual: size mismatch");
  }
  std::vector<double> r(n);
  matvec(x.data(), r.data());
  for (int i = 0; i < n; ++i) r[i] = b[i] - r[i];
  return r;
}

double* CsrMatrix::entry(int i, int j) {
  auto first = col.begin() + row_ptr[i];
  auto last = col.begin() + row_ptr[i + 1];
  auto it = std::lower_bound(first, last, j);
  if (it == last || *it != j) return nullptr;
  return val.data() + (it - col.begin());
}

const double* CsrMatrix::entry(int i, int j) const {
  return const_cast<CsrMatrix*>(this)->entry(i, j);
}

CsrMatrix csr_from_triplets(int n, std::vector<Triplet>& entries) {
  for (const Triplet& t : entries) {
    if (t.row < 0 || t.row >= n || t.col < 0 || t.col >= n) {
      throw InvalidInput("csr_from_triplets: index out of range");
    }
  }
  std::stable_sort(entries.begin(), entries.end(),
                   [](const Triplet& a, const Triplet& b) {
                     return a.row != b.row ? a.row < b.row : a.col < b.col;
                   });
  CsrMatrix A;
  A.n = n;
  A.row_ptr.assign(n + 1, 0);
  for (std::size_t k = 0; k < entries.size();) {
    std::size_t e = k + 1;
    double s = entries[k].value;
    while (e < entries.size() && entries[e].row == entries[k].row &&
           entries[e].col == entries[k].col) {
      s += entries[e].value;
      ++e;
    }
    A.col.push_back(entries[k].col);
    A.val.push_back(s);
    ++A.row_ptr[entries[k].row + 1];
    k = e;
  }
  for (int i = 0; i < n; ++i) A.row_ptr[i + 1] += A.row_ptr[i];
  return A;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

Ilu0::Ilu0(const CsrMatrix& A) : a_(&A), lu_(A.val), diag_(A.n, -1) {
  const int n = A.n;
  for (int i = 0; i < n; ++i) {
    for (std::int64_t k = A.row_ptr[i]; k < A.row_ptr[i + 1]; ++k) {
      if (A.col[k] == i) diag_[i] = k;
    }
    if (diag_[i] < 0) return;  // structurally singular, leave ok_ false
  }

  // IKJ sweep confined to the pattern of A. Row i is updated with every
  // already-factored row k < i that appears among its columns.
  for (int i = 0; i < n; ++i) {
    for (std::int64_t kk = A.row_ptr[i]; kk < A.row_ptr[i + 1]; ++kk) {
      const int k = A.col[kk];
      if (k >= i) break;
      const double pivot = lu_[diag_[k]];
      double scale = 1.0;
      for (std::int64_t t = A.row_ptr[k]; t < A.row_ptr[k + 1]; ++t) {
        scale = std::max(scale, std::abs(lu_[t]));
      }
      if (std::abs(pivot) <= 1e-14 * scale) return;
      const double factor = lu_[kk] / pivot;
      lu_[kk] = factor;
      // Subtract factor * (row k, columns > k) wherever row i has an entry.
      std::int64_t p = kk + 1;
      for (std::int64_t t = diag_[k] + 1; t < A.row_ptr[k + 1]; ++t) {
        const int j = A.col[t];
        while (p < A.row_ptr[i + 1] && A.col[p] < j) ++p;
        if (p == A.row_ptr[i + 1]) break;
        if (A.col[p] == j) lu_[p] -= factor * lu_[t];
      }
    }
    double scale = 1.0;
    for (std::int64_t t = A.row_ptr[i]; t < A.row_ptr[i + 1]; ++t) {
      scale = std::max(scale, std::abs(lu_[t]));
    }
    if (std::abs(lu_[diag_[i]]) <= 1e-14 * scale) return;
  }
  ok_ = true;
}

void Ilu0::apply(const double* r, double* z) const {
  const CsrMatrix& A = *a_;
  const int n = A.n;
  // Forward solve with unit lower part.
  for (int i = 0; i < n; ++i) {
    double s = r[i];
    for (std::int64_t k = A.row_ptr[i]; k < diag_[i]; ++k) {
      s -= lu_[k] * z[A.col[k]];
    }
    z[i] = s;
  }
  // Backward solve with the upper part.
  for (int i = n - 1; i >= 0; --i) {
    double s = z[i];
    for (std::int64_t k = diag_[i] + 1; k < A.row_ptr[i + 1]; ++k) {
      s -= lu_[k] * z[A.col[k]];
    }
    z[i] = s / lu_[diag_[i]];
  }
}

namespace {

class Precond {
 public:
  Precond(const CsrMatrix& A, Preconditioner kind, bool* fallback) {
    if (kind == Preconditioner::Ilu0) {
      ilu_ = std::make_unique<Ilu0>(A);
      if (ilu_->ok()) return;
      ilu_.reset();
      kind = Preconditioner::Jacobi;
      *fallback = true;
      std::fprintf(stderr,
                   "warning: ILU(0) factorization hit a zero pivot, "
                   "falling back to Jacobi preconditioning\n");
    }
    if (kind == Preconditioner::Jacobi) {
      invdiag_.assign(A.n, 1.0);
      for (int i = 0; i < A.n; ++i) {
        const double* d = A.entry(i, i);
        if (d != nullptr && *d != 0.0) invdiag_[i] = 1.0 / *d;
      }
    }
  }

  void apply(const std::vector<double>& r, std::vector<double>& z) const {
    if (ilu_) {
      ilu_->apply(r.data(), z.data());
    } else if (!invdiag_.empty()) {
      for (std::size_t i = 0; i < r.size(); ++i) z[i] = invdiag_[i] * r[i];
    } else {
      z = r;
    }
  }

 private:
  std::unique_ptr<Ilu0> ilu_;
  std::vector<double> invdiag_;
};

}  // namespace

SolveReport gmres(const CsrMatrix& A, const std::vector<double>& b,
                  std::vector<double>& x, const SolverConfig& cfg) {
  const int n = A.n;
  if (static_cast<int>(b.size()) != n) throw InvalidInput("gmres: rhs size");
  if (x.empty()) x.assign(n, 0.0);
  if (static_cast<int>(x.size()) != n) throw InvalidInput("gmres: guess size");
  if (cfg.restart < 1 || cfg.max_iters < 1 || cfg.rel_tol <= 0.0) {
    throw InvalidInput("gmres: bad solver parameters");
  }

  SolveReport rep;
  Precond M(A, cfg.precond, &rep.precond_fallback);

  std::vector<double> r = A.residual(b, x);
  rep.initial_residual = norm2(r);
  rep.final_residual = rep.initial_residual;
  const double target = cfg.rel_tol * rep.initial_residual;
  if (rep.initial_residual == 0.0) {
    rep.converged = true;
    return rep;
  }

  const int m = cfg.restart;
  std::vector<std::vector<double>> V(m + 1, std::vector<double>(n));
  std::vector<std::vector<double>> Z(m, std::vector<double>(n));
  std::vector<double> H((m + 1) * m, 0.0);
  std::vector<double> cs(m), sn(m), g(m + 1), y(m), w(n);
  auto h = [&](int i, int j) -> double& { return H[i * m + j]; };

  while (true) {
    double beta = norm2(r);
    if (beta <= target) {
      rep.final_residual = beta;
      rep.converged = true;
      return rep;
    }
    for (int i = 0; i < n; ++i) V[0][i] = r[i] / beta;
    std::fill(g.begin(), g.end(), 0.0);
    g[0] = beta;

    int jused = 0;
    bool breakdown = false;
    for (int j = 0; j < m; ++j) {
      M.apply(V[j], Z[j]);
      A.matvec(Z[j].data(), w.data());
      for (int i = 0; i <= j; ++i) {
        const double hij = dot(w, V[i]);
        h(i, j) = hij;
        for (int q = 0; q < n; ++q) w[q] -= hij * V[i][q];
      }
      const double hnext = norm2(w);
      h(j + 1, j) = hnext;
      if (hnext > 0.0) {
        for (int q = 0; q < n; ++q) V[j + 1][q] = w[q] / hnext;
      }
      // Apply accumulated Givens rotations to the new column, then create
      // the rotation that annihilates the subdiagonal entry.
      for (int i = 0; i < j; ++i) {
        const double t = cs[i] * h(i, j) + sn[i] * h(i + 1, j);
        h(i + 1, j) = -sn[i] * h(i, j) + cs[i] * h(i + 1, j);
        h(i, j) = t;
      }
      const double denom = std::hypot(h(j, j), h(j + 1, j));
      if (denom == 0.0) {
        jused = j + 1;
        breakdown = true;
        break;
      }
      cs[j] = h(j, j) / denom;
      sn[j] = h(j + 1, j) / denom;
      h(j, j) = denom;
      h(j + 1, j) = 0.0;
      g[j + 1] = -sn[j] * g[j];
      g[j] = cs[j] * g[j];
      ++rep.iterations;
      jused = j + 1;
      if (hnext == 0.0) {
        breakdown = true;
        break;
      }
      if (std::abs(g[j + 1]) <= target || rep.iterations >= cfg.max_iters) {
        break;
      }
    }

    // Back-substitute the least-squares system and advance the iterate.
    for (int i = jused - 1; i >= 0; --i) {
      double s = g[i];
      for (int k = i + 1; k < jused; ++k) s -= h(i, k) * y[k];
      y[i] = s / h(i, i);
    }
    for (int i = 0; i < jused; ++i) {
      for (int q = 0; q < n; ++q) x[q] += y[i] * Z[i][q];
    }

    r = A.residual(b, x);
    rep.final_residual = norm2(r);
    if (rep.final_residual <= target || breakdown) {
      rep.converged = rep.final_residual <= target;
      return rep;
    }
    if (rep.iterations >= cfg.max_iters) {
      rep.converged = false;
      return rep;
    }
    ++rep.restarts;
  }
}

SolveReport cg(const CsrMatrix& A, const std::vector<double>& b,
               std::vector<double>& x, double rel_tol, int max_iters) {
  const int n = A.n;
  if (static_cast<int>(b.size()) != n) throw InvalidInput("cg: rhs size");
  if (x.empty()) x.assign(n, 0.0);
  if (static_cast<int>(x.size()) != n) throw InvalidInput("cg: guess size");

  SolveReport rep;
  std::vector<double> r = A.residual(b, x);
  rep.initial_residual = norm2(r);
  rep.final_residual = rep.initial_residual;
  const double target = rel_tol * rep.initial_residual;
  if (rep.initial_residual == 0.0) {
    rep.converged = true;
    return rep;
  }

  std::vector<double> p = r, Ap(n);
  double rr = dot(r, r);
  for (int it = 0; it < max_iters; ++it) {
    A.matvec(p.data(), Ap.data());
    const double pAp = dot(p, Ap);
    if (pAp <= 0.0) {
      throw InvalidInput("cg: matrix is not symmetric positive definite");
    }
    const double alpha = rr / pAp;
    for (int i = 0; i < n; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * Ap[i];
    }
    const double rr_new = dot(r, r);
    ++rep.iterations;
    if (std::sqrt(rr_new) <= target) {
      rr = rr_new;
      break;
    }
    const double omega = rr_new / rr;
    rr = rr_new;
    for (int i = 0; i < n; ++i) p[i] = r[i] + omega * p[i];
  }
  rep.final_residual = norm2(A.residual(b, x));
  rep.converged = rep.final_residual <= target;
  return rep;
}

void write_matrix_market(std::ostream& out, const CsrMatrix& A) {
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << A.n << ' ' << A.n << ' ' << A.nnz() << '\n';
  char buf[64];
  for (int i = 0; i < A.n; ++i) {
    for (std::int64_t k = A.row_ptr[i]; k < A.row_ptr[i + 1]; ++k) {
      std::snprintf(buf, sizeof buf, "%d %d %.17g\n", i + 1, A.col[k] + 1,
                    A.val[k]);
      out << buf;
    }
  }
}

}  // namespace stfem
