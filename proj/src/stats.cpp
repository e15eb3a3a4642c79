#include "qlab/stats.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <json.hpp>

#include "qlab/error.hpp"

namespace qlab {

const char* trial_status_name(TrialStatus s) {
  switch (s) {
    case TrialStatus::kPass: return "pass";
    case TrialStatus::kFail: return "fail";
    case TrialStatus::kReportOnly: return "report-only";
    case TrialStatus::kError: return "error";
  }
  return "unknown";
}

Interval wilson_interval(std::int64_t successes, std::int64_t n, double z) {
  require(n > 0 && successes >= 0 && successes <= n, ErrorCode::kInvalidArgument,
          "wilson_interval: bad counts");
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(successes) / nn;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nn;
  const double center = (p + z2 / (2.0 * nn)) / denom;
  const double spread = z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
  return {std::max(0.0, center - spread), std::min(1.0, center + spread)};
}

void settle(TrialReport& rep) {
  rep.pass = rep.empirical <= rep.bound + rep.half_width;
  if (rep.n < kMinTrialsForVerdict) {
    rep.status = TrialStatus::kReportOnly;
  } else {
    rep.status = rep.pass ? TrialStatus::kPass : TrialStatus::kFail;
  }
}

TrialReport frequency_report(const std::string& claim, std::int64_t k,
                             std::int64_t n, double bound) {
  TrialReport rep;
  rep.claim = claim;
  rep.n = n;
  if (n > 0) {
    rep.empirical = static_cast<double>(k) / static_cast<double>(n);
    rep.half_width = wilson_interval(k, n).hi - rep.empirical;
  }
  rep.bound = bound;
  rep.extra["count"] = static_cast<double>(k);
  settle(rep);
  return rep;
}

void MeanAccumulator::add(double x) {
  ++n;
  const double delta = x - mean;
  mean += delta / static_cast<double>(n);
  m2 += delta * (x - mean);
}

double MeanAccumulator::variance() const {
  return n > 1 ? m2 / static_cast<double>(n - 1) : 0.0;
}

double MeanAccumulator::stderr_of_mean() const {
  return n > 0 ? std::sqrt(variance() / static_cast<double>(n)) : 0.0;
}

double ks_statistic(std::vector<double> a, std::vector<double> b) {
  require(!a.empty() && !b.empty(), ErrorCode::kInvalidArgument,
          "ks_statistic: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

double ks_critical(std::size_t n, std::size_t m, double alpha) {
  const double c = std::sqrt(-0.5 * std::log(alpha / 2.0));
  const double nn = static_cast<double>(n);
  const double mm = static_cast<double>(m);
  return c * std::sqrt((nn + mm) / (nn * mm));
}

double normal_quantile(double p) {
  require(p > 0.0 && p < 1.0, ErrorCode::kOutOfRange, "normal_quantile: p outside (0,1)");
  double lo = -40.0, hi = 40.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double cdf = 0.5 * std::erfc(-mid / std::sqrt(2.0));
    (cdf < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double simultaneous_z(std::int64_t m) {
  const double alpha = std::erfc(3.0 / std::sqrt(2.0));  // two-sided 3σ
  return normal_quantile(1.0 - alpha / (2.0 * static_cast<double>(std::max<std::int64_t>(m, 1))));
}

double quantile(std::vector<double> x, double q) {
  require(!x.empty(), ErrorCode::kInvalidArgument, "quantile: empty sample");
  std::sort(x.begin(), x.end());
  const double pos = q * static_cast<double>(x.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = static_cast<std::size_t>(std::ceil(pos));
  return x[lo] + (pos - static_cast<double>(lo)) * (x[hi] - x[lo]);
}

double median(std::vector<double> x) { return quantile(std::move(x), 0.5); }

std::pair<double, double> linear_fit(const std::vector<double>& x,
                                     const std::vector<double>& y) {
  require(x.size() == y.size() && x.size() >= 2, ErrorCode::kInvalidArgument,
          "linear_fit: need at least two points");
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double denom = n * sxx - sx * sx;
  require(denom != 0.0, ErrorCode::kNumericalFailure, "linear_fit: degenerate x");
  const double b = (n * sxy - sx * sy) / denom;
  return {(sy - b * sx) / n, b};
}

std::string trial_report_json(const TrialReport& rep) {
  nlohmann::json j;
  j["claim"] = rep.claim;
  j["n"] = rep.n;
  j["empirical"] = rep.empirical;
  j["bound"] = rep.bound;
  j["halfwidth"] = rep.half_width;
  j["pass"] = rep.pass;
  j["status"] = trial_status_name(rep.status);
  j["excluded"] = rep.excluded;
  j["exclusion_rate"] = rep.exclusion_rate;
  j["note"] = rep.note;
  j["extra"] = rep.extra;
  return j.dump();
}

std::string summary_csv_header() { return "claim,n,empirical,bound,halfwidth,pass"; }

std::string summary_csv_row(const TrialReport& rep) {
  std::ostringstream os;
  os.precision(10);
  os << rep.claim << ',' << rep.n << ',' << rep.empirical << ',' << rep.bound
     << ',' << rep.half_width << ',';
  if (rep.status == TrialStatus::kReportOnly) {
    os << "report-only";
  } else if (rep.status == TrialStatus::kError) {
    os << "error";
  } else {
    os << (rep.pass ? "true" : "false");
  }
  return os.str();
}

}  // namespace qlab
