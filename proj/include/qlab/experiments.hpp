// Config-driven drivers behind the gen / sweep / verify / report commands.
#pragma once

#include <string>
#include <vector>

#include "qlab/config.hpp"
#include "qlab/stats.hpp"

namespace qlab {

struct SweepCell {
  std::string solver;
  Index d = 0;
  Index r = 0;
  double gap = 0.0;
  Index budget = 0;
  Index batch = 1;
  std::vector<double> queries;  // per seed; censored entries hold the budget
  Index censored = 0;
  double median = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
  bool median_censored = false;
};

struct SweepFit {
  std::string solver;
  Index d = 0;
  Index r = 0;
  Index budget = 0;
  Index batch = 1;
  Index points = 0;     // uncensored cells used
  double alpha = 0.0;   // T ∝ gap^{-α}; NaN with fewer than 3 points
  std::string note;
};

struct SweepRatio {
  std::string solver;
  Index d = 0;
  double gap = 0.0;
  Index r = 0;
  double ratio_to_r1 = 0.0;
};

struct SweepResult {
  std::vector<SweepCell> cells;
  std::vector<SweepFit> fits;
  std::vector<SweepRatio> ratios;
};

SweepResult run_sweep(const ExperimentConfig& cfg);
// Fit α over the gap grid from finished cells.
std::vector<SweepFit> fit_sweep(const std::vector<SweepCell>& cells);

struct VerifySummary {
  std::vector<TrialReport> reports;
  int hard_failures = 0;  // fail or error statuses
};

std::vector<std::string> registered_claims();
// `only` empty runs cfg.claims (or every claim when that is empty too).
VerifySummary run_verify(const ExperimentConfig& cfg, const std::string& only = "");

// Writers; every table starts with a "# config_hash=... seed=..." line.
void write_sweep_outputs(const ExperimentConfig& cfg, const SweepResult& res,
                         const std::string& dir);
void write_verify_outputs(const ExperimentConfig& cfg, const VerifySummary& res,
                          const std::string& dir);

// Writes one instance per (d, r, gap) grid point plus a manifest.
std::vector<std::string> run_gen(const ExperimentConfig& cfg, const std::string& dir);

// Renders the CSV tables found in `dir` into report.md and returns its text.
std::string run_report(const ExperimentConfig& cfg, const std::string& dir);

}  // namespace qlab
