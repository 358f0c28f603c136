#include "bbdyn/worst_case.hpp"

#include <cctype>
#include <cmath>
#include <limits>

#include "bbdyn/coeff_dynamics.hpp"
#include "bbdyn/error.hpp"
#include "bbdyn/io.hpp"

namespace bbdyn {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr mp_bitcnt_t kFloatBits = 512;

mpf_class sqrt_of(const mpq_class& q) {
  mpf_class f(q, kFloatBits);
  mpf_class out(0, kFloatBits);
  mpf_sqrt(out.get_mpf_t(), f.get_mpf_t());
  return out;
}

}  // namespace

std::string_view to_string(OrbitMode mode) {
  return mode == OrbitMode::Float64 ? "float64" : "exact";
}

Vector worst_case_x0(const SpectralProblem& p) {
  const std::size_t n = p.dim();
  if (n < 2) throw Error(ErrorCode::DimensionTooSmall, "worst-case initializer needs n >= 2");
  // Vᵀ(c + v_1 + v_n) = Vᵀc + e_1 + e_n, then divide by λ and map back.
  Vector coeff = to_coefficients(p, p.c());
  coeff.front() += 1.0;
  coeff.back() += 1.0;
  for (std::size_t i = 0; i < n; ++i) coeff[i] /= p.eigenvalues()[i];
  return from_coefficients(p, coeff);
}

Vector TwoModeOrbit::grad_norms() const {
  Vector out;
  out.reserve(points.size());
  if (mode == OrbitMode::ExactRational) {
    for (std::size_t k = 0; k < a_exact.size(); ++k) {
      const mpq_class sq = a_exact[k] * a_exact[k] + b_exact[k] * b_exact[k];
      out.push_back(sqrt_of(sq).get_d());
    }
  } else {
    for (const auto& pt : points) out.push_back(std::hypot(pt.a, pt.b));
  }
  return out;
}

mpq_class parse_rational(std::string_view text) {
  const auto bad = [&] { return Error(ErrorCode::Config, "not a rational number: '" + std::string(text) + "'"); };
  if (text.empty()) throw bad();
  try {
    if (text.find('/') != std::string_view::npos) {
      mpq_class q(std::string(text), 10);
      if (q.get_den() == 0) throw bad();
      q.canonicalize();
      return q;
    }
  } catch (const std::invalid_argument&) {
    throw bad();
  }

  std::size_t pos = 0;
  bool negative = false;
  if (text[pos] == '+' || text[pos] == '-') negative = text[pos++] == '-';
  std::string digits;
  long frac_digits = 0;
  bool seen_dot = false;
  for (; pos < text.size() && text[pos] != 'e' && text[pos] != 'E'; ++pos) {
    const char ch = text[pos];
    if (ch == '.') {
      if (seen_dot) throw bad();
      seen_dot = true;
    } else if (std::isdigit(static_cast<unsigned char>(ch))) {
      digits += ch;
      if (seen_dot) ++frac_digits;
    } else {
      throw bad();
    }
  }
  if (digits.empty()) throw bad();
  long exponent = 0;
  if (pos < text.size()) {
    const std::string exp_text(text.substr(pos + 1));
    std::size_t used = 0;
    try {
      exponent = std::stol(exp_text, &used);
    } catch (const std::exception&) {
      throw bad();
    }
    if (used != exp_text.size()) throw bad();
  }

  mpz_class numerator(digits, 10);
  mpz_class ten_pow;
  const long shift = exponent - frac_digits;
  mpz_ui_pow_ui(ten_pow.get_mpz_t(), 10, static_cast<unsigned long>(std::labs(shift)));
  mpq_class q = shift >= 0 ? mpq_class(numerator * ten_pow) : mpq_class(numerator, ten_pow);
  q.canonicalize();
  return negative ? mpq_class(-q) : q;
}

std::string decimal_string(const mpq_class& q, int digits) {
  if (q == 0) return "0";
  const mpf_class f(q, kFloatBits);
  std::string buf(static_cast<std::size_t>(digits) + 32, '\0');
  const int len = gmp_snprintf(buf.data(), buf.size(), "%.*Fe", digits - 1, f.get_mpf_t());
  buf.resize(static_cast<std::size_t>(len));
  return buf;
}

TwoModeOrbit run_orbit_exact(const mpq_class& lo, const mpq_class& hi, int iters) {
  if (iters < 1) throw Error(ErrorCode::Config, "iters must be at least 1");
  if (!(lo > 0) || !(lo < hi)) {
    throw Error(ErrorCode::DegenerateSpectrum, "exact orbit needs 0 < lambda_lo < lambda_hi");
  }
  TwoModeOrbit orbit;
  orbit.lambda_lo = lo.get_d();
  orbit.lambda_hi = hi.get_d();
  orbit.mode = OrbitMode::ExactRational;

  orbit.a_exact.emplace_back(1);
  orbit.b_exact.emplace_back(1);
  const mpq_class gap = hi - lo;
  for (int k = 0; k < iters; ++k) {
    // The multipliers read the previous pair; the first step reads d_0 itself.
    const std::size_t prev = k == 0 ? 0 : static_cast<std::size_t>(k - 1);
    const mpq_class a2 = orbit.a_exact[prev] * orbit.a_exact[prev];
    const mpq_class b2 = orbit.b_exact[prev] * orbit.b_exact[prev];
    const mpq_class denom = lo * a2 + hi * b2;
    mpq_class a_next = orbit.a_exact.back() * gap * b2 / denom;
    mpq_class b_next = -orbit.b_exact.back() * gap * a2 / denom;
    a_next.canonicalize();
    b_next.canonicalize();
    orbit.a_exact.push_back(std::move(a_next));
    orbit.b_exact.push_back(std::move(b_next));
  }

  mpq_class prev_sq;
  for (std::size_t k = 0; k < orbit.a_exact.size(); ++k) {
    const mpq_class sq = orbit.a_exact[k] * orbit.a_exact[k] + orbit.b_exact[k] * orbit.b_exact[k];
    OrbitPoint pt;
    pt.k = static_cast<int>(k);
    pt.a = orbit.a_exact[k].get_d();
    pt.b = orbit.b_exact[k].get_d();
    pt.grad_norm_ratio = k == 0 ? kNaN : sqrt_of(mpq_class(sq / prev_sq)).get_d();
    orbit.points.push_back(pt);
    prev_sq = sq;
  }
  return orbit;
}

TwoModeOrbit run_orbit(double lo, double hi, int iters, OrbitMode mode) {
  if (mode == OrbitMode::ExactRational) {
    if (!std::isfinite(lo) || !std::isfinite(hi)) {
      throw Error(ErrorCode::BadSpectrum, "eigenvalues must be finite");
    }
    return run_orbit_exact(mpq_class(lo), mpq_class(hi), iters);
  }
  if (iters < 1) throw Error(ErrorCode::Config, "iters must be at least 1");
  if (!(lo > 0.0) || !(lo < hi)) {
    throw Error(ErrorCode::DegenerateSpectrum, "orbit needs 0 < lambda_lo < lambda_hi");
  }

  TwoModeOrbit orbit;
  orbit.lambda_lo = lo;
  orbit.lambda_hi = hi;
  orbit.mode = OrbitMode::Float64;
  const Vector lambda{lo, hi};
  const double rate = (hi - lo) / (hi + lo);

  CoefficientState s = first_step(lambda, Vector{1.0, 1.0});
  auto record = [&](int k, const Vector& d, double ratio) {
    orbit.points.push_back({k, d[0], d[1], ratio});
    if (!orbit.symmetry_break && d[0] * d[0] != d[1] * d[1]) orbit.symmetry_break = k;
    const double closed = std::pow(rate, k);
    if (!orbit.closed_form_departure && std::abs(std::abs(d[0]) - closed) > 1e-6 * closed) {
      orbit.closed_form_departure = k;
    }
  };
  record(0, s.d_prev, kNaN);
  record(1, s.d_curr, std::hypot(s.d_curr[0], s.d_curr[1]) / std::hypot(s.d_prev[0], s.d_prev[1]));
  while (s.k < iters && (s.d_curr[0] != 0.0 || s.d_curr[1] != 0.0)) {
    s = step(s);
    record(s.k, s.d_curr,
           std::hypot(s.d_curr[0], s.d_curr[1]) / std::hypot(s.d_prev[0], s.d_prev[1]));
  }
  return orbit;
}

std::string orbit_csv(const TwoModeOrbit& orbit) {
  std::string out = "k,a,b,grad_norm_ratio\n";
  const bool exact = orbit.mode == OrbitMode::ExactRational;
  mpq_class prev_sq;
  for (std::size_t k = 0; k < orbit.points.size(); ++k) {
    const OrbitPoint& pt = orbit.points[k];
    out += std::to_string(pt.k) + ',';
    if (exact) {
      const mpq_class& a = orbit.a_exact[k];
      const mpq_class& b = orbit.b_exact[k];
      const mpq_class sq = a * a + b * b;
      out += decimal_string(a) + ',' + decimal_string(b) + ',';
      if (k > 0) {
        const mpf_class ratio = sqrt_of(mpq_class(sq / prev_sq));
        std::string buf(80, '\0');
        const int len = gmp_snprintf(buf.data(), buf.size(), "%.39Fe", ratio.get_mpf_t());
        buf.resize(static_cast<std::size_t>(len));
        out += buf;
      }
      prev_sq = sq;
    } else {
      out += io::format_double(pt.a) + ',' + io::format_double(pt.b) + ',';
      if (k > 0) out += io::format_double(pt.grad_norm_ratio);
    }
    out += '\n';
  }
  return out;
}

EmbeddedOrbitCheck embed_orbit_check(const SpectralProblem& p, int iters) {
  const std::size_t n = p.dim();
  const Vector x0 = worst_case_x0(p);

  SolverConfig cfg;
  cfg.max_iters = iters;
  cfg.grad_tol = 0.0;
  cfg.record_coefficients = true;

  EmbeddedOrbitCheck out;
  out.trajectory = run_bb(p, x0, cfg);
  const auto& recs = out.trajectory.records;

  if (p.single_eigenvalue()) {
    out.degenerate = true;
    out.report = check_degenerate(CoefficientTrace::from_solver(p, out.trajectory));
    return out;
  }

  const double rate = (p.lambda_max() - p.lambda_min()) / (p.lambda_max() + p.lambda_min());
  out.horizon = static_cast<int>(recs.size());
  for (const auto& r : recs) {
    const double a2 = r.d.front() * r.d.front();
    const double b2 = r.d.back() * r.d.back();
    if (std::abs(a2 - b2) > kSymmetryBreakThreshold * (a2 + b2)) {
      out.horizon = r.k;
      out.symmetry_broken = true;
      break;
    }
  }

  std::vector<CheckEntry> interior;
  std::vector<CheckEntry> rate_entries;
  const double g0 = recs.front().grad_norm;
  const double d0_scale = norm_inf(recs.front().d);
  for (const auto& r : recs) {
    if (r.k >= out.horizon) break;
    for (std::size_t j = 1; j + 1 < n; ++j) {
      const double mag = std::abs(r.d[j]);
      out.max_interior = std::max(out.max_interior, mag);
      const double rhs = kInteriorTolerance * d0_scale;
      interior.push_back({kOrbitInterior, j + 1, r.k, mag, rhs, mag <= rhs});
    }
    {
      const double closed = std::pow(rate, r.k);
      const double lhs = std::abs(r.grad_norm / g0 - closed);
      const double rhs = kOrbitRateTolerance * closed;
      rate_entries.push_back({kOrbitRate, 0, r.k, lhs, rhs, lhs <= rhs});
    }
  }
  out.report.add_family(kOrbitInterior, std::move(interior));
  out.report.add_family(kOrbitRate, std::move(rate_entries));
  return out;
}

}  // namespace bbdyn
