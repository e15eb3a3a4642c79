// Monte Carlo summaries shared by the trial harnesses.
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace qlab {

enum class TrialStatus { kPass, kFail, kReportOnly, kError };

const char* trial_status_name(TrialStatus s);

inline constexpr double kWilsonZ = 3.0;
inline constexpr std::int64_t kMinTrialsForVerdict = 30;

struct TrialReport {
  std::string claim;
  std::int64_t n = 0;
  double empirical = 0.0;   // frequency or error statistic
  double bound = 0.0;
  double half_width = 0.0;
  bool pass = false;
  TrialStatus status = TrialStatus::kReportOnly;
  std::int64_t excluded = 0;
  double exclusion_rate = 0.0;
  std::string note;
  std::map<std::string, double> extra;
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

Interval wilson_interval(std::int64_t successes, std::int64_t n,
                         double z = kWilsonZ);

// Sets pass/status from empirical ≤ bound + half_width, honoring the
// minimum-trials rule.
void settle(TrialReport& rep);

// Frequency report: empirical = k/n, half-width = Wilson upper - k/n.
TrialReport frequency_report(const std::string& claim, std::int64_t k,
                             std::int64_t n, double bound);

struct MeanAccumulator {
  std::int64_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;
  void add(double x);
  double variance() const;  // unbiased
  double stderr_of_mean() const;
};

// Two-sample Kolmogorov-Smirnov statistic.
double ks_statistic(std::vector<double> a, std::vector<double> b);
// Asymptotic critical value c(α)·sqrt((n+m)/(nm)).
double ks_critical(std::size_t n, std::size_t m, double alpha);

// Φ⁻¹(p) for p in (0,1).
double normal_quantile(double p);
// Two-sided z for a family of m simultaneous comparisons at the 3σ level.
double simultaneous_z(std::int64_t m);

double median(std::vector<double> x);
double quantile(std::vector<double> x, double q);

// Ordinary least squares y = a + b x; returns {a, b}.
std::pair<double, double> linear_fit(const std::vector<double>& x,
                                     const std::vector<double>& y);

std::string trial_report_json(const TrialReport& rep);
std::string summary_csv_header();
std::string summary_csv_row(const TrialReport& rep);

}  // namespace qlab
