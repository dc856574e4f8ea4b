#include "stfem/problems.hpp"

#include <cmath>

namespace stfem {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

double box_friedrichs_constant(
    const std::vector<std::pair<double, double>>& extents, int d) {
  double s = 0.0;
  for (int i = 0; i < d; ++i) {
    const double len = extents[i].second - extents[i].first;
    if (!(len > 0.0))
      throw InvalidInput("box_friedrichs_constant: empty extent");
    s += 1.0 / (len * len);
  }
  return 1.0 / (kPi * std::sqrt(s));
}

Benchmark moving_peak(int d) {
  if (d != 1 && d != 2) throw InvalidInput("moving_peak: d must be 1 or 2");

  Benchmark b;
  b.name = "moving_peak";
  b.d = d;
  for (int i = 0; i <= d; ++i) b.extents.push_back({0.0, 1.0});
  b.default_subdivisions.assign(d + 1, d == 1 ? 8 : 4);
  b.quad_bump = 2;  // the exp(-100 r^2) profile is steep

  ProblemData& pr = b.problem;
  pr.d = d;
  pr.nu = [](const Point&, int) { return 1.0; };
  pr.nu_elementwise_constant = true;
  pr.nu_low = pr.nu_up = 1.0;
  pr.c_friedrichs = box_friedrichs_constant(b.extents, d);
  pr.bc_kind = BcKind::Dirichlet;
  pr.initial = [](const Point&) { return 0.0; };

  const auto value = [d](const Point& x) {
    const double t = x[d];
    double poly = 1.0, e = 0.0;
    for (int i = 0; i < d; ++i) {
      poly *= x[i] * x[i] - x[i];
      e += sqr(x[i] - t);
    }
    return poly * (t * t - t) * std::exp(-100.0 * e);
  };
  const auto grad = [d](const Point& x, double* g) {
    const double t = x[d];
    const double tau = t * t - t;
    double poly = 1.0, e = 0.0;
    for (int i = 0; i < d; ++i) {
      poly *= x[i] * x[i] - x[i];
      e += sqr(x[i] - t);
    }
    const double G = std::exp(-100.0 * e);
    for (int i = 0; i < d; ++i) {
      double pi = 2.0 * x[i] - 1.0;
      for (int j = 0; j < d; ++j)
        if (j != i) pi *= x[j] * x[j] - x[j];
      g[i] = tau * G * (pi - 200.0 * poly * (x[i] - t));
    }
  };
  const auto dt = [d](const Point& x) {
    const double t = x[d];
    double poly = 1.0, e = 0.0, s = 0.0;
    for (int i = 0; i < d; ++i) {
      poly *= x[i] * x[i] - x[i];
      e += sqr(x[i] - t);
      s += x[i] - t;
    }
    const double G = std::exp(-100.0 * e);
    return poly * G * ((2.0 * t - 1.0) + 200.0 * (t * t - t) * s);
  };
  const auto laplace = [d](const Point& x) {
    const double t = x[d];
    const double tau = t * t - t;
    double poly = 1.0, e = 0.0;
    for (int i = 0; i < d; ++i) {
      poly *= x[i] * x[i] - x[i];
      e += sqr(x[i] - t);
    }
    const double G = std::exp(-100.0 * e);
    double lap = 0.0;
    for (int i = 0; i < d; ++i) {
      double pii = 2.0, pi = 2.0 * x[i] - 1.0;
      for (int j = 0; j < d; ++j)
        if (j != i) {
          pii *= x[j] * x[j] - x[j];
          pi *= x[j] * x[j] - x[j];
        }
      const double si = x[i] - t;
      lap += tau * G *
             (pii - 400.0 * pi * si + poly * (40000.0 * si * si - 200.0));
    }
    return lap;
  };

  pr.source = [dt, laplace](const Point& x, int) { return dt(x) - laplace(x); };
  pr.exact = ExactSolution{value, grad, dt};
  return b;
}

Benchmark circular_arc(double scale) {
  if (!(scale > 0.0)) throw InvalidInput("circular_arc: scale must be > 0");

  Benchmark b;
  b.name = "circular_arc";
  b.d = 2;
  b.extents = {{0.0, 10.0}, {0.0, 10.0}, {0.0, 5.0}};
  b.default_subdivisions = {4, 4, 2};
  b.quad_bump = 2;

  ProblemData& pr = b.problem;
  pr.d = 2;
  pr.nu = [](const Point&, int) { return 1.0; };
  pr.nu_elementwise_constant = true;
  pr.nu_low = pr.nu_up = 1.0;
  pr.c_friedrichs = box_friedrichs_constant(b.extents, 2);
  pr.bc_kind = BcKind::NeumannZero;
  pr.initial = [](const Point&) { return 20.0; };

  const double amp = 2.97e5 * scale;
  pr.source = [amp](const Point& x, int) {
    const double arg = kPi * (5.0 + 2.0 * x[2]) / 20.0;
    const double cx = 5.0 * (1.0 + std::cos(arg));
    const double cy = 3.0 + 5.0 * std::sin(arg);
    return amp * std::exp(-100.0 * (sqr(x[0] - cx) + sqr(x[1] - cy)));
  };
  return b;
}

namespace {

constexpr double kKelloggR = 161.4476387975884;
constexpr double kGamma = 0.1;
const double kRho = kPi / 4.0;
const double kSigma = -19.0 * kPi / 4.0;

// Angular factor of the checkerboard singular solution and its derivative.
double kellogg_mu(double phi) {
  if (phi < 0.5 * kPi)
    return std::cos((0.5 * kPi - kSigma) * kGamma) *
           std::cos((phi - 0.5 * kPi + kRho) * kGamma);
  if (phi < kPi)
    return std::cos(kRho * kGamma) * std::cos((phi - kPi + kSigma) * kGamma);
  if (phi < 1.5 * kPi)
    return std::cos(kSigma * kGamma) * std::cos((phi - kPi - kRho) * kGamma);
  return std::cos((0.5 * kPi - kRho) * kGamma) *
         std::cos((phi - 1.5 * kPi - kSigma) * kGamma);
}

double kellogg_dmu(double phi) {
  if (phi < 0.5 * kPi)
    return -kGamma * std::cos((0.5 * kPi - kSigma) * kGamma) *
           std::sin((phi - 0.5 * kPi + kRho) * kGamma);
  if (phi < kPi)
    return -kGamma * std::cos(kRho * kGamma) *
           std::sin((phi - kPi + kSigma) * kGamma);
  if (phi < 1.5 * kPi)
    return -kGamma * std::cos(kSigma * kGamma) *
           std::sin((phi - kPi - kRho) * kGamma);
  return -kGamma * std::cos((0.5 * kPi - kRho) * kGamma) *
         std::sin((phi - 1.5 * kPi - kSigma) * kGamma);
}

double angle_of(const Point& x) {
  double phi = std::atan2(x[1], x[0]);
  if (phi < 0.0) phi += 2.0 * kPi;
  return phi;
}

}  // namespace

Benchmark kellogg() {
  Benchmark b;
  b.name = "kellogg";
  b.d = 2;
  b.extents = {{-1.0, 1.0}, {-1.0, 1.0}, {0.0, 1.0}};
  b.default_subdivisions = {2, 2, 1};

  ProblemData& pr = b.problem;
  pr.d = 2;
  pr.n_subdomains = 4;
  pr.subdomain = [](const Point& x) {
    if (x[0] > 0.0) return x[1] > 0.0 ? 1 : 4;
    return x[1] > 0.0 ? 2 : 3;
  };
  pr.nu = [](const Point& x, int subdomain) {
    const double t = x[2];
    const double nu13 = kKelloggR * t + (1.0 - t);
    if (subdomain == 1 || subdomain == 3) return nu13;
    return nu13 / kKelloggR;  // (1-t)/R + t
  };
  pr.nu_elementwise_constant = false;
  pr.nu_time_dependent = true;
  pr.nu_low = 1.0 / kKelloggR;
  pr.nu_up = kKelloggR;
  pr.c_friedrichs = box_friedrichs_constant(b.extents, 2);
  pr.bc_kind = BcKind::Dirichlet;
  pr.initial = [](const Point&) { return 0.0; };

  const auto value = [](const Point& x) {
    const double r = std::hypot(x[0], x[1]);
    if (r == 0.0) return 0.0;
    return x[2] * std::pow(r, kGamma) * kellogg_mu(angle_of(x));
  };
  const auto grad = [](const Point& x, double* g) {
    const double r = std::hypot(x[0], x[1]);
    if (r == 0.0) {
      g[0] = g[1] = 0.0;
      return;
    }
    const double phi = angle_of(x);
    const double mu = kellogg_mu(phi), dmu = kellogg_dmu(phi);
    const double c = x[0] / r, s = x[1] / r;
    const double f = x[2] * std::pow(r, kGamma - 1.0);
    g[0] = f * (kGamma * mu * c - dmu * s);
    g[1] = f * (kGamma * mu * s + dmu * c);
  };
  const auto dt = [](const Point& x) {
    const double r = std::hypot(x[0], x[1]);
    if (r == 0.0) return 0.0;
    return std::pow(r, kGamma) * kellogg_mu(angle_of(x));
  };

  // The angular factor solves mu'' = -gamma^2 mu on each quadrant with the
  // transmission conditions built in, so div_x(nu grad_x u) vanishes and the
  // right-hand side reduces to the time derivative.
  pr.source = [dt](const Point& x, int) { return dt(x); };
  pr.dirichlet = value;
  pr.exact = ExactSolution{value, grad, dt};
  return b;
}

Benchmark polynomial_patch(int p, int d) {
  if (p < 1 || p > 4) throw InvalidInput("polynomial_patch: p must be in [1,4]");
  if (d != 1 && d != 2) throw InvalidInput("polynomial_patch: d must be 1 or 2");

  Benchmark b;
  b.name = "polynomial_patch";
  b.d = d;
  for (int i = 0; i <= d; ++i) b.extents.push_back({0.0, 1.0});
  b.default_subdivisions.assign(d + 1, 2);

  ProblemData& pr = b.problem;
  pr.d = d;
  pr.nu = [](const Point&, int) { return 1.0; };
  pr.nu_elementwise_constant = true;
  pr.nu_low = pr.nu_up = 1.0;
  pr.c_friedrichs = box_friedrichs_constant(b.extents, d);
  pr.bc_kind = BcKind::Dirichlet;

  std::function<double(const Point&)> value;
  std::function<void(const Point&, double*)> grad;
  std::function<double(const Point&)> dt;
  std::function<double(const Point&)> f;

  if (d == 1) {
    switch (p) {
      case 1:
        value = [](const Point& x) { return x[0]; };
        grad = [](const Point&, double* g) { g[0] = 1.0; };
        dt = [](const Point&) { return 0.0; };
        f = [](const Point&) { return 0.0; };
        break;
      case 2:
        value = [](const Point& x) { return x[0] * (1.0 - x[0]) + x[0] * x[1]; };
        grad = [](const Point& x, double* g) { g[0] = 1.0 - 2.0 * x[0] + x[1]; };
        dt = [](const Point& x) { return x[0]; };
        f = [](const Point& x) { return x[0] + 2.0; };
        break;
      case 3:
        value = [](const Point& x) { return x[0] * (1.0 - x[0]) * (1.0 + x[1]); };
        grad = [](const Point& x, double* g) {
          g[0] = (1.0 - 2.0 * x[0]) * (1.0 + x[1]);
        };
        dt = [](const Point& x) { return x[0] * (1.0 - x[0]); };
        f = [](const Point& x) {
          return x[0] * (1.0 - x[0]) + 2.0 * (1.0 + x[1]);
        };
        break;
      default:
        value = [](const Point& x) {
          return sqr(x[0]) * sqr(1.0 - x[0]) + x[0] * (1.0 - x[0]) * sqr(x[1]);
        };
        grad = [](const Point& x, double* g) {
          g[0] = 2.0 * x[0] - 6.0 * sqr(x[0]) + 4.0 * x[0] * sqr(x[0]) +
                 (1.0 - 2.0 * x[0]) * sqr(x[1]);
        };
        dt = [](const Point& x) { return 2.0 * x[1] * x[0] * (1.0 - x[0]); };
        f = [](const Point& x) {
          const double uxx = 2.0 - 12.0 * x[0] + 12.0 * sqr(x[0]) - 2.0 * sqr(x[1]);
          return 2.0 * x[1] * x[0] * (1.0 - x[0]) - uxx;
        };
        break;
    }
  } else {
    switch (p) {
      case 1:
        value = [](const Point& x) { return x[0] + x[1]; };
        grad = [](const Point&, double* g) { g[0] = g[1] = 1.0; };
        dt = [](const Point&) { return 0.0; };
        f = [](const Point&) { return 0.0; };
        break;
      case 2:
        value = [](const Point& x) { return x[0] * x[1] + x[0] * x[2]; };
        grad = [](const Point& x, double* g) {
          g[0] = x[1] + x[2];
          g[1] = x[0];
        };
        dt = [](const Point& x) { return x[0]; };
        f = [](const Point& x) { return x[0]; };
        break;
      case 3:
        value = [](const Point& x) {
          return x[0] * (1.0 - x[0]) * x[1] + x[0] * x[1] * x[2];
        };
        grad = [](const Point& x, double* g) {
          g[0] = (1.0 - 2.0 * x[0]) * x[1] + x[1] * x[2];
          g[1] = x[0] * (1.0 - x[0]) + x[0] * x[2];
        };
        dt = [](const Point& x) { return x[0] * x[1]; };
        f = [](const Point& x) { return x[0] * x[1] + 2.0 * x[1]; };
        break;
      default:
        value = [](const Point& x) {
          return x[0] * (1.0 - x[0]) * x[1] * (1.0 - x[1]) +
                 x[0] * (1.0 - x[0]) * x[1] * x[2];
        };
        grad = [](const Point& x, double* g) {
          g[0] = (1.0 - 2.0 * x[0]) * (x[1] * (1.0 - x[1]) + x[1] * x[2]);
          g[1] = x[0] * (1.0 - x[0]) * (1.0 - 2.0 * x[1] + x[2]);
        };
        dt = [](const Point& x) { return x[0] * (1.0 - x[0]) * x[1]; };
        f = [](const Point& x) {
          const double lap = -2.0 * (x[1] * (1.0 - x[1]) + x[1] * x[2]) -
                             2.0 * x[0] * (1.0 - x[0]);
          return x[0] * (1.0 - x[0]) * x[1] - lap;
        };
        break;
    }
  }

  pr.source = [f](const Point& x, int) { return f(x); };
  pr.initial = [value, d](const Point& x) {
    Point x0 = x;
    x0[d] = 0.0;
    return value(x0);
  };
  pr.dirichlet = value;
  pr.exact = ExactSolution{value, grad, dt};
  return b;
}

Benchmark smooth_sine(int d) {
  if (d != 1 && d != 2) throw InvalidInput("smooth_sine: d must be 1 or 2");

  Benchmark b;
  b.name = "smooth_sine";
  b.d = d;
  for (int i = 0; i <= d; ++i) b.extents.push_back({0.0, 1.0});
  b.default_subdivisions.assign(d + 1, 2);

  ProblemData& pr = b.problem;
  pr.d = d;
  pr.nu = [](const Point&, int) { return 1.0; };
  pr.nu_elementwise_constant = true;
  pr.nu_low = pr.nu_up = 1.0;
  pr.c_friedrichs = box_friedrichs_constant(b.extents, d);
  pr.bc_kind = BcKind::Dirichlet;

  const auto value = [d](const Point& x) {
    double v = std::exp(-x[d]);
    for (int i = 0; i < d; ++i) v *= std::sin(kPi * x[i]);
    return v;
  };
  pr.exact = ExactSolution{
      value,
      [d, value](const Point& x, double* g) {
        for (int i = 0; i < d; ++i) {
          double v = std::exp(-x[d]) * kPi * std::cos(kPi * x[i]);
          for (int j = 0; j < d; ++j)
            if (j != i) v *= std::sin(kPi * x[j]);
          g[i] = v;
        }
      },
      [value](const Point& x) { return -value(x); }};
  pr.source = [d, value](const Point& x, int) {
    return (d * kPi * kPi - 1.0) * value(x);
  };
  pr.initial = [value, d](const Point& x) {
    Point x0 = x;
    x0[d] = 0.0;
    return value(x0);
  };
  return b;
}

Benchmark make_benchmark(const std::string& name, int d, int degree,
                         double scale) {
  if (name == "moving_peak") return moving_peak(d);
  if (name == "circular_arc") return circular_arc(scale);
  if (name == "kellogg") return kellogg();
  if (name == "polynomial_patch") return polynomial_patch(degree, d);
  if (name == "smooth_sine") return smooth_sine(d);
  throw ConfigError("unknown benchmark: " + name);
}

}  // namespace stfem
