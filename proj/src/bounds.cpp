#include "bbdyn/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "bbdyn/error.hpp"
#include "bbdyn/io.hpp"

namespace bbdyn {
namespace {

void require_trace(const CoefficientTrace& trace) {
  if (trace.d.size() < 2) {
    throw Error(ErrorCode::InsufficientTrajectory, "need coefficient vectors for k = 0 and k = 1");
  }
  for (const Vector& d : trace.d) {
    if (d.size() != trace.lambda.size()) {
      throw Error(ErrorCode::InsufficientTrajectory, "trajectory lacks recorded coefficients");
    }
  }
}

bool passes(double lhs, double rhs, double scale, const CheckOptions& opts) {
  return lhs <= rhs * (1.0 + opts.rel_slack) + opts.abs_floor + opts.noise_floor * scale;
}

CheckEntry make_entry(const char* family, std::size_t i, int k, double lhs, double rhs, double scale,
                      const CheckOptions& opts) {
  return CheckEntry{family, i + 1, k, lhs, rhs, passes(lhs, rhs, scale, opts)};
}

// Size of the rounding a gradient step and two projections can inject into
// one coefficient: the step multiplies by at most κ.
double step_noise_scale(const Vector& cur, const Vector& next, const BoundLedger& lg) {
  return (1.0 + lg.kappa) * norm_inf(cur) + norm_inf(next);
}

bool close(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) return false;
  const double scale = std::max(norm_inf(a), norm_inf(b));
  for (std::size_t i = 0; i < a.size(); ++i)
    if (std::abs(a[i] - b[i]) > 1e-12 * scale) return false;
  return true;
}

}  // namespace

BoundLedger ledger(std::span<const double> lambda, std::span<const double> d0,
                   std::span<const double> d1) {
  const std::size_t n = lambda.size();
  if (n == 0 || d0.size() != n || d1.size() != n) {
    throw Error(ErrorCode::DimensionMismatch, "ledger inputs must share the spectrum's length");
  }
  const double lo = lambda.front();
  const double hi = lambda.back();
  if (!(lo > 0.0)) throw Error(ErrorCode::BadSpectrum, "eigenvalues must be positive");

  BoundLedger out;
  out.kappa = hi / lo;
  out.theta = 1.0 - lo / hi;
  out.d0.assign(d0.begin(), d0.end());
  out.d1.assign(d1.begin(), d1.end());
  out.c.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.c[i] = std::max(lambda[i] / lo - 1.0, 1.0 - lambda[i] / hi);
  }
  if (n >= 2 && out.theta == 0.0) {
    throw Error(ErrorCode::DegenerateSpectrum, "kappa = 1 leaves theta = 0");
  }

  out.f.resize(n);
  out.f[0] = std::abs(d0[0]);
  double sum_sq = out.f[0] * out.f[0];
  for (std::size_t i = 1; i < n; ++i) {
    const double ci = out.c[i];
    const double growth = ci * ci / (out.theta * out.theta) * std::sqrt(sum_sq);
    out.f[i] = std::max({std::abs(d0[i]), std::abs(d1[i]) / out.theta, growth});
    sum_sq += out.f[i] * out.f[i];
  }
  return out;
}

CoefficientTrace CoefficientTrace::from_solver(const SpectralProblem& p, const SolverTrajectory& t) {
  CoefficientTrace out{p.eigenvalues(), t.coefficients()};
  require_trace(out);
  return out;
}

CoefficientTrace CoefficientTrace::from_simulation(std::span<const double> lambda,
                                                   const std::vector<SimulationRecord>& records) {
  CoefficientTrace out;
  out.lambda.assign(lambda.begin(), lambda.end());
  for (const auto& r : records) out.d.push_back(r.d);
  return out;
}

void VerificationReport::add_family(const std::string& name, std::vector<CheckEntry> family_entries,
                                    std::size_t skipped) {
  FamilySummary s;
  s.family = name;
  s.skipped = skipped;
  s.worst_margin = std::numeric_limits<double>::infinity();
  for (const auto& e : family_entries) {
    ++s.checked;
    if (e.pass) ++s.passed;
    if (e.margin() < s.worst_margin) {
      s.worst_margin = e.margin();
      s.argmin_i = e.i;
      s.argmin_k = e.k;
    }
  }
  families.push_back(std::move(s));
  entries.insert(entries.end(), std::make_move_iterator(family_entries.begin()),
                 std::make_move_iterator(family_entries.end()));
}

void VerificationReport::merge(const VerificationReport& other) {
  entries.insert(entries.end(), other.entries.begin(), other.entries.end());
  for (const auto& theirs : other.families) {
    auto it = std::find_if(families.begin(), families.end(),
                           [&](const FamilySummary& f) { return f.family == theirs.family; });
    if (it == families.end()) {
      families.push_back(theirs);
      continue;
    }
    it->checked += theirs.checked;
    it->passed += theirs.passed;
    it->skipped += theirs.skipped;
    if (theirs.worst_margin < it->worst_margin) {
      it->worst_margin = theirs.worst_margin;
      it->argmin_i = theirs.argmin_i;
      it->argmin_k = theirs.argmin_k;
    }
  }
}

const FamilySummary* VerificationReport::family(const std::string& name) const {
  for (const auto& f : families)
    if (f.family == name) return &f;
  return nullptr;
}

std::size_t VerificationReport::failures() const {
  std::size_t n = 0;
  for (const auto& f : families) n += f.failed();
  return n;
}

nlohmann::json VerificationReport::summary_json() const {
  nlohmann::json fams = nlohmann::json::array();
  for (const auto& f : families) {
    nlohmann::json j{{"family", f.family},
                     {"checked", f.checked},
                     {"passed", f.passed},
                     {"failed", f.failed()},
                     {"skipped", f.skipped}};
    if (f.checked > 0) {
      j["worst_margin"] = f.worst_margin;
      j["argmin"] = {{"i", f.argmin_i}, {"k", f.argmin_k}};
    } else {
      j["worst_margin"] = nullptr;
      j["argmin"] = nullptr;
    }
    fams.push_back(std::move(j));
  }
  return {{"families", std::move(fams)}, {"failures", failures()}, {"all_passed", all_passed()}};
}

std::string VerificationReport::entries_csv() const {
  std::string out = "family,i,k,lhs,rhs,margin,pass\n";
  for (const auto& e : entries) {
    out += e.family + ',' + std::to_string(e.i) + ',' + std::to_string(e.k) + ',' +
           io::format_double(e.lhs) + ',' + io::format_double(e.rhs) + ',' +
           io::format_double(e.margin()) + ',' + (e.pass ? "1" : "0") + '\n';
  }
  return out;
}

VerificationReport check_general_ratio(const CoefficientTrace& trace, const BoundLedger& lg,
                                       const CheckOptions& opts) {
  require_trace(trace);
  std::vector<CheckEntry> entries;
  for (std::size_t k = 1; k + 1 < trace.d.size(); ++k) {
    const Vector& cur = trace.d[k];
    const Vector& next = trace.d[k + 1];
    const double scale = step_noise_scale(cur, next, lg);
    for (std::size_t i = 0; i < cur.size(); ++i) {
      entries.push_back(make_entry(kGeneralRatio, i, static_cast<int>(k), std::abs(next[i]),
                                   lg.c[i] * std::abs(cur[i]), scale, opts));
    }
  }
  VerificationReport r;
  r.add_family(kGeneralRatio, std::move(entries));
  return r;
}

VerificationReport check_conditional_contraction(const CoefficientTrace& trace, const BoundLedger& lg,
                                                 const CheckOptions& opts) {
  require_trace(trace);
  std::vector<CheckEntry> entries;
  std::size_t skipped = 0;
  for (std::size_t k = 1; k + 1 < trace.d.size(); ++k) {
    const Vector& older = trace.d[k - 1];
    const Vector& cur = trace.d[k];
    const Vector& next = trace.d[k + 1];
    const double scale = step_noise_scale(cur, next, lg);

    // Squares after a common power-of-two rescale; only comparisons matter.
    int exponent = 0;
    std::frexp(norm_inf(older), &exponent);
    double lower_mass = 0.0;
    for (std::size_t i = 0; i < cur.size(); ++i) {
      const double di = std::ldexp(older[i], -exponent);
      const double sq = di * di;
      const bool shrinking = classify_mode(trace.lambda, older, i) == Mode::Shrinking;
      const bool dominant = sq >= lower_mass;
      lower_mass += sq;
      if (!shrinking && !dominant) {
        ++skipped;
        continue;
      }
      entries.push_back(make_entry(kConditionalContraction, i, static_cast<int>(k), std::abs(next[i]),
                                   lg.theta * std::abs(cur[i]), scale, opts));
    }
  }
  VerificationReport r;
  r.add_family(kConditionalContraction, std::move(entries), skipped);
  return r;
}

VerificationReport check_envelope(const CoefficientTrace& trace, const BoundLedger& lg,
                                  const CheckOptions& opts) {
  require_trace(trace);
  if (!close(trace.d[0], lg.d0) || !close(trace.d[1], lg.d1)) {
    throw Error(ErrorCode::LedgerMismatch, "ledger was built from different d_0/d_1");
  }
  std::vector<CheckEntry> entries;
  for (std::size_t k = 1; k < trace.d.size(); ++k) {
    const Vector& d = trace.d[k];
    const double decay = std::pow(lg.theta, static_cast<double>(k));
    const double scale = norm_inf(d);
    for (std::size_t i = 0; i < d.size(); ++i) {
      entries.push_back(
          make_entry(kEnvelope, i, static_cast<int>(k), std::abs(d[i]), lg.f[i] * decay, scale, opts));
    }
  }
  VerificationReport r;
  r.add_family(kEnvelope, std::move(entries));
  return r;
}

VerificationReport check_degenerate(const CoefficientTrace& trace, const CheckOptions& opts) {
  require_trace(trace);
  std::vector<CheckEntry> entries;
  for (std::size_t k = 1; k < trace.d.size(); ++k) {
    for (std::size_t i = 0; i < trace.d[k].size(); ++i) {
      entries.push_back(
          make_entry(kDegenerate, i, static_cast<int>(k), std::abs(trace.d[k][i]), 0.0, 0.0, opts));
    }
  }
  VerificationReport r;
  r.add_family(kDegenerate, std::move(entries));
  return r;
}

VerificationReport verify_trace(const CoefficientTrace& trace, const CheckOptions& opts) {
  require_trace(trace);
  const bool degenerate = trace.lambda.size() >= 2 && trace.lambda.front() == trace.lambda.back();
  if (degenerate) return check_degenerate(trace, opts);

  const BoundLedger lg = ledger(trace.lambda, trace.d[0], trace.d[1]);
  VerificationReport report = check_general_ratio(trace, lg, opts);
  report.merge(check_conditional_contraction(trace, lg, opts));
  report.merge(check_envelope(trace, lg, opts));
  return report;
}

double empirical_rate(std::span<const double> grad_norms) {
  if (grad_norms.size() < 10) {
    throw Error(ErrorCode::InsufficientTrajectory, "need at least 10 gradient norms");
  }
  const double n = static_cast<double>(grad_norms.size());
  double mean_k = 0.0;
  double mean_y = 0.0;
  Vector logs(grad_norms.size());
  for (std::size_t k = 0; k < grad_norms.size(); ++k) {
    if (!(grad_norms[k] > 0.0)) {
      throw Error(ErrorCode::NonPositiveNorm, "gradient norm at k = " + std::to_string(k));
    }
    logs[k] = std::log(grad_norms[k]);
    mean_k += static_cast<double>(k);
    mean_y += logs[k];
  }
  mean_k /= n;
  mean_y /= n;
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t k = 0; k < logs.size(); ++k) {
    const double dk = static_cast<double>(k) - mean_k;
    sxy += dk * (logs[k] - mean_y);
    sxx += dk * dk;
  }
  return std::exp(sxy / sxx);
}

}  // namespace bbdyn
