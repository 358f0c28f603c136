#include "bbdyn/solvers.hpp"

#include <cmath>
#include <limits>

#include "bbdyn/error.hpp"
#include "bbdyn/io.hpp"

namespace bbdyn {
namespace {

using std::abs;
using std::frexp;
using std::isnan;
using std::ldexp;
using std::sqrt;

/// The quadratic's operator carried in working precision `Real`.
template <class Real>
struct Operator {
  std::size_t n = 0;
  std::vector<Real> a;  // row-major n x n
  std::vector<Real> v;  // row-major n x n, columns are eigenvectors
  std::vector<Real> c;
  bool single_eigenvalue = false;

  std::vector<Real> times(std::span<const Real> x) const {
    std::vector<Real> out(n);
    for (std::size_t i = 0; i < n; ++i) {
      Real s = 0;
      for (std::size_t j = 0; j < n; ++j) s += a[i * n + j] * x[j];
      out[i] = s;
    }
    return out;
  }

  std::vector<Real> coefficients(std::span<const Real> g) const {
    std::vector<Real> out(n);
    for (std::size_t j = 0; j < n; ++j) {
      Real s = 0;
      for (std::size_t i = 0; i < n; ++i) s += v[i * n + j] * g[i];
      out[j] = s;
    }
    return out;
  }
};

template <class Real>
Operator<Real> make_operator(const SpectralProblem& p) {
  const std::size_t n = p.dim();
  Operator<Real> op;
  op.n = n;
  op.single_eigenvalue = p.single_eigenvalue();
  op.c.assign(p.c().begin(), p.c().end());
  op.v.resize(n * n);
  op.a.resize(n * n);
  if constexpr (std::is_same_v<Real, double>) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        op.v[i * n + j] = p.basis()(i, j);
        op.a[i * n + j] = p.matrix()(i, j);
      }
  } else {
    // A binary64 basis is orthogonal only to ~1e-16; restore orthogonality at
    // working precision before rebuilding A = V·diag(λ)·Vᵀ.
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) op.v[i * n + j] = p.basis()(i, j);
    for (std::size_t j = 0; j < n; ++j) {
      for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t k = 0; k < j; ++k) {
          Real proj = 0;
          for (std::size_t i = 0; i < n; ++i) proj += op.v[i * n + k] * op.v[i * n + j];
          for (std::size_t i = 0; i < n; ++i) op.v[i * n + j] -= proj * op.v[i * n + k];
        }
      }
      Real norm = 0;
      for (std::size_t i = 0; i < n; ++i) norm += op.v[i * n + j] * op.v[i * n + j];
      norm = sqrt(norm);
      for (std::size_t i = 0; i < n; ++i) op.v[i * n + j] /= norm;
    }
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        Real s = 0;
        for (std::size_t k = 0; k < n; ++k) s += op.v[i * n + k] * Real(p.eigenvalues()[k]) * op.v[j * n + k];
        op.a[i * n + j] = s;
      }
  }
  return op;
}

template <class Real>
bool all_zero(std::span<const Real> v) {
  for (const Real& x : v)
    if (x != 0) return false;
  return true;
}

template <class Real>
Real norm_of(std::span<const Real> v) {
  Real scale = 0;
  for (const Real& x : v) scale = std::max<Real>(scale, abs(x));
  if (scale == 0) return scale;
  Real s = 0;
  for (const Real& x : v) {
    const Real y = x / scale;
    s += y * y;
  }
  return scale * sqrt(s);
}

/// gᵀg / gᵀ(Ag) after rescaling both vectors by the same power of two, which
/// is exact and keeps the quotient clear of underflow for tiny gradients.
template <class Real>
Real rayleigh_inverse(std::span<const Real> g, std::span<const Real> ag) {
  Real scale = 0;
  for (const Real& x : g) scale = std::max<Real>(scale, abs(x));
  if (scale == 0) throw Error(ErrorCode::ZeroGradient, "stepsize of a zero gradient is 0/0");
  int exponent = 0;
  (void)frexp(scale, &exponent);
  Real gg = 0;
  Real gag = 0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Real gi = ldexp(g[i], -exponent);
    gg += gi * gi;
    gag += gi * ldexp(ag[i], -exponent);
  }
  return gg / gag;
}

template <class Real>
BasicSolverTrajectory<Real> run(Method method, const SpectralProblem& p, std::span<const double> x0,
                                const SolverConfig& cfg) {
  cfg.validate();
  if (x0.size() != p.dim()) throw Error(ErrorCode::DimensionMismatch, "initial point has wrong length");
  const Operator<Real> op = make_operator<Real>(p);

  BasicSolverTrajectory<Real> out;
  out.method = method;
  out.records.reserve(static_cast<std::size_t>(std::min(cfg.max_iters, 100000)) + 1);

  auto push = [&](int k, std::vector<Real> x, std::vector<Real> g) {
    BasicIterationRecord<Real> rec;
    rec.k = k;
    rec.grad_norm = norm_of<Real>(g);
    rec.alpha = std::numeric_limits<Real>::quiet_NaN();
    if (cfg.record_coefficients) rec.d = op.coefficients(g);
    rec.x = std::move(x);
    rec.g = std::move(g);
    out.records.push_back(std::move(rec));
  };

  std::vector<Real> x_start(x0.begin(), x0.end());
  std::vector<Real> g_start = op.times(x_start);
  for (std::size_t i = 0; i < g_start.size(); ++i) g_start[i] -= op.c[i];
  push(0, std::move(x_start), std::move(g_start));
  const Real g0_norm = out.records.front().grad_norm;

  std::vector<Real> ag_prev;
  for (int k = 0;; ++k) {
    const BasicIterationRecord<Real>& cur = out.records.back();
    if (all_zero<Real>(cur.g)) {
      out.reason = TerminationReason::ExactZeroGradient;
      break;
    }
    if (k > 0 && cur.grad_norm <= Real(cfg.grad_tol) * g0_norm) {
      out.reason = TerminationReason::Converged;
      break;
    }
    if (cur.grad_norm > Real(kDivergenceFactor) * g0_norm) {
      out.reason = TerminationReason::Diverged;
      break;
    }
    if (k >= cfg.max_iters) {
      out.reason = TerminationReason::MaxIters;
      break;
    }

    std::vector<Real> ag = op.times(cur.g);
    Real alpha = 0;
    if (method == Method::SD || k == 0) {
      alpha = rayleigh_inverse<Real>(cur.g, ag);
    } else {
      const std::vector<Real>& g_prev = out.records[out.records.size() - 2].g;
      alpha = rayleigh_inverse<Real>(g_prev, ag_prev);
    }

    std::vector<Real> x_next = cur.x;
    std::vector<Real> g_next(cur.g.size(), Real(0));
    for (std::size_t i = 0; i < x_next.size(); ++i) {
      x_next[i] -= alpha * cur.g[i];
      // With A = λI the first step lands on the minimizer; keep that exact.
      if (!op.single_eigenvalue) g_next[i] = cur.g[i] - alpha * ag[i];
    }
    out.records.back().alpha = alpha;
    ag_prev = std::move(ag);
    push(k + 1, std::move(x_next), std::move(g_next));
  }
  return out;
}

}  // namespace

void SolverConfig::validate() const {
  if (max_iters < 1) throw Error(ErrorCode::Config, "max_iters must be at least 1");
  if (!(grad_tol >= 0.0)) throw Error(ErrorCode::Config, "grad_tol must be nonnegative");
}

std::string_view to_string(TerminationReason reason) {
  switch (reason) {
    case TerminationReason::Converged: return "Converged";
    case TerminationReason::MaxIters: return "MaxIters";
    case TerminationReason::ExactZeroGradient: return "ExactZeroGradient";
    case TerminationReason::Diverged: return "Diverged";
  }
  return "Unknown";
}

std::string_view to_string(Method method) { return method == Method::BB ? "bb" : "sd"; }

template <class Real>
std::vector<Real> BasicSolverTrajectory<Real>::grad_norms() const {
  std::vector<Real> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(r.grad_norm);
  return out;
}

template <class Real>
std::vector<std::vector<Real>> BasicSolverTrajectory<Real>::coefficients() const {
  std::vector<std::vector<Real>> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(r.d);
  return out;
}

template struct BasicSolverTrajectory<double>;
template struct BasicSolverTrajectory<Extended>;

double bb_step_size(const SpectralProblem& p, std::span<const double> g_prev) {
  const Vector ag = hessian_times(p, g_prev);
  return rayleigh_inverse<double>(g_prev, ag);
}

double cauchy_step_size(const SpectralProblem& p, std::span<const double> g) { return bb_step_size(p, g); }

template <class Real>
BasicSolverTrajectory<Real> run_bb_in(const SpectralProblem& p, std::span<const double> x0,
                                      const SolverConfig& cfg) {
  return run<Real>(Method::BB, p, x0, cfg);
}

template <class Real>
BasicSolverTrajectory<Real> run_sd_in(const SpectralProblem& p, std::span<const double> x0,
                                      const SolverConfig& cfg) {
  return run<Real>(Method::SD, p, x0, cfg);
}

template BasicSolverTrajectory<double> run_bb_in<double>(const SpectralProblem&, std::span<const double>,
                                                         const SolverConfig&);
template BasicSolverTrajectory<Extended> run_bb_in<Extended>(const SpectralProblem&,
                                                             std::span<const double>, const SolverConfig&);
template BasicSolverTrajectory<double> run_sd_in<double>(const SpectralProblem&, std::span<const double>,
                                                         const SolverConfig&);
template BasicSolverTrajectory<Extended> run_sd_in<Extended>(const SpectralProblem&,
                                                             std::span<const double>, const SolverConfig&);

SolverTrajectory run_bb(const SpectralProblem& p, std::span<const double> x0, const SolverConfig& cfg) {
  return run<double>(Method::BB, p, x0, cfg);
}

SolverTrajectory run_sd(const SpectralProblem& p, std::span<const double> x0, const SolverConfig& cfg) {
  return run<double>(Method::SD, p, x0, cfg);
}

SolverTrajectory run_solver(Method method, const SpectralProblem& p, std::span<const double> x0,
                            const SolverConfig& cfg, Precision precision) {
  if (precision == Precision::Extended) return to_binary64(run<Extended>(method, p, x0, cfg));
  return run<double>(method, p, x0, cfg);
}

SolverTrajectory to_binary64(const BasicSolverTrajectory<Extended>& t) {
  const auto convert = [](const std::vector<Extended>& v) {
    Vector out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = to_double(v[i]);
    return out;
  };
  SolverTrajectory out;
  out.method = t.method;
  out.reason = t.reason;
  out.records.reserve(t.records.size());
  for (const auto& r : t.records) {
    out.records.push_back({r.k, convert(r.x), convert(r.g), to_double(r.grad_norm), to_double(r.alpha),
                           convert(r.d)});
  }
  return out;
}

std::string trajectory_csv(const SolverTrajectory& t) {
  std::string out = "k,grad_norm,alpha";
  const std::size_t n = t.records.empty() ? 0 : t.records.front().d.size();
  for (std::size_t i = 1; i <= n; ++i) out += ",d_" + std::to_string(i);
  out += '\n';
  for (const auto& r : t.records) {
    out += std::to_string(r.k);
    out += ',' + io::format_double(r.grad_norm);
    out += ',';
    if (!std::isnan(r.alpha)) out += io::format_double(r.alpha);
    for (double d : r.d) out += ',' + io::format_double(d);
    out += '\n';
  }
  return out;
}

nlohmann::json trajectory_json(const SolverTrajectory& t) {
  nlohmann::json records = nlohmann::json::array();
  for (const auto& r : t.records) {
    nlohmann::json rec{{"k", r.k}, {"grad_norm", r.grad_norm}};
    rec["alpha"] = std::isnan(r.alpha) ? nlohmann::json(nullptr) : nlohmann::json(r.alpha);
    if (!r.d.empty()) rec["d"] = r.d;
    records.push_back(std::move(rec));
  }
  return {{"method", to_string(t.method)},
          {"termination", to_string(t.reason)},
          {"iterations", t.iterations()},
          {"records", std::move(records)}};
}

}  // namespace bbdyn
