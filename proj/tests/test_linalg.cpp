#include <Eigen/Dense>
#include <cmath>
#include <random>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "stfem/linalg.hpp"

using namespace stfem;

namespace {

CsrMatrix from_dense(const Eigen::MatrixXd& D, bool keep_zeros = false) {
  std::vector<Triplet> trip;
  for (int i = 0; i < D.rows(); ++i) {
    for (int j = 0; j < D.cols(); ++j) {
      if (D(i, j) != 0.0 || (keep_zeros && i == j)) {
        trip.push_back({i, j, D(i, j)});
      }
    }
  }
  return csr_from_triplets(static_cast<int>(D.rows()), trip);
}

Eigen::MatrixXd to_dense(const CsrMatrix& A) {
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(A.n, A.n);
  for (int i = 0; i < A.n; ++i) {
    for (std::int64_t k = A.row_ptr[i]; k < A.row_ptr[i + 1]; ++k) {
      D(i, A.col[k]) += A.val[k];
    }
  }
  return D;
}

// Five-point Laplacian on an m-by-m interior grid of the unit square.
CsrMatrix poisson2d(int m) {
  std::vector<Triplet> trip;
  auto id = [m](int i, int j) { return i * m + j; };
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) {
      trip.push_back({id(i, j), id(i, j), 4.0});
      if (i > 0) trip.push_back({id(i, j), id(i - 1, j), -1.0});
      if (i < m - 1) trip.push_back({id(i, j), id(i + 1, j), -1.0});
      if (j > 0) trip.push_back({id(i, j), id(i, j - 1), -1.0});
      if (j < m - 1) trip.push_back({id(i, j), id(i, j + 1), -1.0});
    }
  }
  return csr_from_triplets(m * m, trip);
}

std::vector<double> random_vector(int n, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = u(rng);
  return v;
}

}  // namespace

TEST_CASE("triplet assembly sums duplicates and sorts columns") {
  std::vector<Triplet> trip = {
      {2, 0, 5.0}, {0, 1, 2.0}, {0, 0, 1.0}, {1, 1, 3.0},
      {0, 1, 0.5}, {2, 2, 7.0}, {1, 1, -1.0},
  };
  CsrMatrix A = csr_from_triplets(3, trip);
  REQUIRE(A.n == 3);
  REQUIRE(A.nnz() == 5);
  CHECK(A.row_ptr == std::vector<std::int64_t>({0, 2, 3, 5}));
  CHECK(A.col == std::vector<std::int32_t>({0, 1, 1, 0, 2}));
  CHECK(A.val[0] == 1.0);
  CHECK(A.val[1] == 2.5);
  CHECK(A.val[2] == 2.0);
  CHECK(A.val[3] == 5.0);
  CHECK(A.val[4] == 7.0);

  CHECK(*A.entry(0, 1) == 2.5);
  CHECK(A.entry(1, 0) == nullptr);
  CHECK(A.entry(2, 1) == nullptr);

  std::vector<Triplet> bad = {{0, 3, 1.0}};
  CHECK_THROWS_AS(csr_from_triplets(3, bad), InvalidInput);
}

TEST_CASE("matvec and residual against dense arithmetic") {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  Eigen::MatrixXd D(4, 4);
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) D(i, j) = (i + j) % 3 == 0 ? u(rng) : 0.0;
  }
  CsrMatrix A = from_dense(D);
  std::vector<double> x = random_vector(4, 3), y(4);
  A.matvec(x.data(), y.data());
  Eigen::Map<Eigen::VectorXd> xe(x.data(), 4);
  Eigen::VectorXd ye = D * xe;
  for (int i = 0; i < 4; ++i) CHECK(y[i] == doctest::Approx(ye(i)).epsilon(1e-14));

  std::vector<double> b = random_vector(4, 5);
  std::vector<double> r = A.residual(b, x);
  for (int i = 0; i < 4; ++i) {
    CHECK(r[i] == doctest::Approx(b[i] - ye(i)).epsilon(1e-14));
  }
}

TEST_CASE("ILU(0) is the exact factorization of a tridiagonal matrix") {
  const int n = 40;
  std::vector<Triplet> trip;
  for (int i = 0; i < n; ++i) {
    trip.push_back({i, i, 2.0 + 0.05 * i});
    if (i > 0) trip.push_back({i, i - 1, -1.0});
    if (i < n - 1) trip.push_back({i, i + 1, -1.3});
  }
  CsrMatrix A = csr_from_triplets(n, trip);
  Ilu0 ilu(A);
  REQUIRE(ilu.ok());

  std::vector<double> b = random_vector(n, 17), z(n);
  ilu.apply(b.data(), z.data());
  Eigen::MatrixXd D = to_dense(A);
  Eigen::Map<Eigen::VectorXd> be(b.data(), n);
  Eigen::VectorXd ze = D.fullPivLu().solve(be);
  for (int i = 0; i < n; ++i) {
    CHECK(z[i] == doctest::Approx(ze(i)).epsilon(1e-12));
  }

  // With an exact preconditioner one Krylov step suffices.
  SolverConfig cfg;
  std::vector<double> x;
  SolveReport rep = gmres(A, b, x, cfg);
  CHECK(rep.converged);
  CHECK(rep.iterations == 1);
  CHECK(rep.restarts == 0);
}

TEST_CASE("gmres matches a dense solve on a nonsymmetric system") {
  const int n = 80;
  std::mt19937 rng(23);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    D(i, i) = 6.0 + u(rng);
    for (int rep = 0; rep < 4; ++rep) {
      int j = static_cast<int>(rng() % n);
      if (j != i) D(i, j) += u(rng);
    }
  }
  CsrMatrix A = from_dense(D, true);
  std::vector<double> b = random_vector(n, 29);
  Eigen::Map<Eigen::VectorXd> be(b.data(), n);
  Eigen::VectorXd xe = D.fullPivLu().solve(be);

  for (Preconditioner p :
       {Preconditioner::None, Preconditioner::Jacobi, Preconditioner::Ilu0}) {
    SolverConfig cfg;
    cfg.precond = p;
    std::vector<double> x;
    SolveReport rep = gmres(A, b, x, cfg);
    CHECK(rep.converged);
    CHECK_FALSE(rep.precond_fallback);
    CHECK(rep.final_residual <= cfg.rel_tol * rep.initial_residual);
    // The reported residual must be the true one.
    CHECK(norm2(A.residual(b, x)) ==
          doctest::Approx(rep.final_residual).epsilon(1e-12));
    for (int i = 0; i < n; ++i) {
      CHECK(x[i] == doctest::Approx(xe(i)).epsilon(1e-6));
    }
  }
}

TEST_CASE("gmres restarts and still converges") {
  CsrMatrix A = poisson2d(15);
  std::vector<double> b = random_vector(A.n, 41);
  SolverConfig cfg;
  cfg.precond = Preconditioner::None;
  cfg.restart = 5;
  std::vector<double> x;
  SolveReport rep = gmres(A, b, x, cfg);
  CHECK(rep.converged);
  CHECK(rep.restarts >= 1);
  CHECK(rep.iterations > cfg.restart);
  CHECK(norm2(A.residual(b, x)) <= cfg.rel_tol * norm2(b));
}

TEST_CASE("gmres honors the iteration cap") {
  CsrMatrix A = poisson2d(15);
  std::vector<double> b = random_vector(A.n, 43);
  SolverConfig cfg;
  cfg.precond = Preconditioner::None;
  cfg.restart = 5;
  cfg.max_iters = 7;
  std::vector<double> x;
  SolveReport rep = gmres(A, b, x, cfg);
  CHECK_FALSE(rep.converged);
  CHECK(rep.iterations == 7);
  CHECK(rep.final_residual < rep.initial_residual);
}

TEST_CASE("gmres handles trivial cases") {
  Eigen::MatrixXd D = Eigen::MatrixXd::Identity(6, 6);
  CsrMatrix A = from_dense(D);
  SolverConfig cfg;
  cfg.precond = Preconditioner::None;

  std::vector<double> b = random_vector(6, 7), x;
  SolveReport rep = gmres(A, b, x, cfg);
  CHECK(rep.converged);
  CHECK(rep.iterations == 1);
  for (int i = 0; i < 6; ++i) CHECK(x[i] == doctest::Approx(b[i]));

  // Zero right-hand side with a zero guess needs no work at all.
  std::vector<double> zero(6, 0.0), x0;
  rep = gmres(A, zero, x0, cfg);
  CHECK(rep.converged);
  CHECK(rep.iterations == 0);
  CHECK(rep.final_residual == 0.0);

  // An exact initial guess is recognized immediately.
  std::vector<double> xg = b;
  rep = gmres(A, b, xg, cfg);
  CHECK(rep.converged);
  CHECK(rep.iterations == 0);
}

TEST_CASE("ILU(0) zero pivot falls back to Jacobi with a report flag") {
  Eigen::MatrixXd D(2, 2);
  D << 0.0, 1.0, 1.0, 0.0;
  CsrMatrix A = from_dense(D, true);
  SolverConfig cfg;
  std::vector<double> b = {1.0, 2.0}, x;
  SolveReport rep = gmres(A, b, x, cfg);
  CHECK(rep.precond_fallback);
  CHECK(rep.converged);
  CHECK(x[0] == doctest::Approx(2.0));
  CHECK(x[1] == doctest::Approx(1.0));
}

TEST_CASE("cg agrees with a dense solve and reports true residuals") {
  CsrMatrix A = poisson2d(12);
  const int n = A.n;
  std::vector<double> b = random_vector(n, 53), x;
  SolveReport rep = cg(A, b, x, 1e-10, 2000);
  CHECK(rep.converged);
  CHECK(norm2(A.residual(b, x)) ==
        doctest::Approx(rep.final_residual).epsilon(1e-10));

  Eigen::MatrixXd D = to_dense(A);
  Eigen::Map<Eigen::VectorXd> be(b.data(), n);
  Eigen::VectorXd xe = D.llt().solve(be);
  for (int i = 0; i < n; ++i) {
    CHECK(x[i] == doctest::Approx(xe(i)).epsilon(1e-7));
  }
}

TEST_CASE("cg with a fixed iteration budget reduces the residual") {
  CsrMatrix A = poisson2d(12);
  std::vector<double> b = random_vector(A.n, 59), x;
  SolveReport rep = cg(A, b, x, 1e-14, 3);
  CHECK_FALSE(rep.converged);
  CHECK(rep.iterations == 3);
  CHECK(rep.final_residual < rep.initial_residual);
}

TEST_CASE("cg rejects indefinite matrices") {
  Eigen::MatrixXd D(2, 2);
  D << 1.0, 0.0, 0.0, -1.0;
  CsrMatrix A = from_dense(D, true);
  std::vector<double> b = {0.0, 1.0}, x;
  CHECK_THROWS_AS(cg(A, b, x, 1e-8, 100), InvalidInput);
}

TEST_CASE("matrix market output lists one-based coordinates") {
  std::vector<Triplet> trip = {{0, 0, 1.5}, {1, 0, -2.0}, {1, 1, 4.0}};
  CsrMatrix A = csr_from_triplets(2, trip);
  std::ostringstream out;
  write_matrix_market(out, A);
  CHECK(out.str() ==
        "%%MatrixMarket matrix coordinate real general\n"
        "2 2 3\n"
        "1 1 1.5\n"
        "2 1 -2\n"
        "2 2 4\n");
}
