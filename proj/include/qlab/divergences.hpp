// Generalized f-divergences between finite, possibly unnormalized measures.
#pragma once

#include <string>
#include <vector>

#include "qlab/linalg.hpp"

namespace qlab {

class FiniteMeasure {
 public:
  FiniteMeasure() = default;
  explicit FiniteMeasure(std::vector<double> weights);

  std::size_t size() const { return w_.size(); }
  double operator[](std::size_t i) const { return w_[i]; }
  const std::vector<double>& weights() const { return w_; }
  double mass() const;
  FiniteMeasure scaled(double c) const;

 private:
  std::vector<double> w_;
};

// Convex f on (0, ∞) with f(0) := lim_{t→0+} f(t) and f'(∞) := lim f(t)/t.
// Every kind supports the transform t ↦ outer·f(inner·t) + shift.
class DivergenceFunction {
 public:
  enum class Kind { kPower, kKl, kChi2, kTabulated };

  static DivergenceFunction power(double eta);  // t^{1+η}
  static DivergenceFunction kl();               // t log t
  static DivergenceFunction chi2();             // (t-1)²
  // Piecewise-linear interpolation through knots (t strictly increasing,
  // t_0 > 0), extended linearly on both sides. Rejects non-convex tables
  // after 10⁴ random midpoint checks.
  static DivergenceFunction tabulated(std::vector<double> t, std::vector<double> f);

  Kind kind() const { return kind_; }
  double eta() const { return eta_; }

  double operator()(double t) const;  // t >= 0; t = 0 gives the limit
  double at_zero() const { return (*this)(0.0); }
  double slope_at_infinity() const;   // may be +inf

  // β·f + α.
  DivergenceFunction affine(double beta, double alpha) const;
  // f(·; p, q) = q·f((p/q)·t).
  DivergenceFunction normalized(double p, double q) const;

  // Midpoint convexity spot check at `samples` random triples in (0, t_max).
  bool spot_check_convex(int samples, unsigned seed, double t_max = 50.0) const;

  // True if t·f(1/t) is non-increasing on a log grid.
  bool conjugate_non_increasing() const;

 private:
  double base(double t) const;
  double base_slope_inf() const;

  Kind kind_ = Kind::kPower;
  double eta_ = 1.0;
  std::vector<double> knots_t_;
  std::vector<double> knots_f_;
  double outer_ = 1.0;
  double inner_ = 1.0;
  double shift_ = 0.0;
};

double f_divergence(const FiniteMeasure& mu, const FiniteMeasure& nu,
                    const DivergenceFunction& f);

// b f(a/b) + (q-b) f((p-a)/(q-b)) with the b ∈ {0, q} limits.
double phi_f(double a, double b, double p, double q, const DivergenceFunction& f);

// Row-stochastic matrix: rows index the source support, columns the target.
class Channel {
 public:
  explicit Channel(Matrix kernel);
  static Channel identity(std::size_t n);
  static Channel deterministic(const std::vector<std::size_t>& map,
                               std::size_t n_target);

  std::size_t source_size() const { return static_cast<std::size_t>(k_.rows()); }
  std::size_t target_size() const { return static_cast<std::size_t>(k_.cols()); }
  const Matrix& kernel() const { return k_; }

 private:
  Matrix k_;
};

FiniteMeasure pushforward(const FiniteMeasure& mu, const Channel& ch);

FiniteMeasure truncate(const FiniteMeasure& prob, const std::vector<bool>& event);

struct BayesBoundResult {
  double lhs = 0.0;
  double rhs = 0.0;
  double v_opt = 0.0;
  double v0 = 0.0;
  bool holds = false;
};

// prior over Θ, family[θ] over 𝒳, nu over 𝒳, indicator[a][θ] ∈ {0,1}.
BayesBoundResult bayes_bound_check(const std::vector<double>& prior,
                                   const std::vector<FiniteMeasure>& family,
                                   const FiniteMeasure& nu, std::size_t n_actions,
                                   const std::vector<std::vector<int>>& indicator,
                                   const DivergenceFunction& f);

// E_Q[(dP/dQ)^{1+η}] for P = N(μ₁, Σ), Q = N(μ₂, Σ).
double gaussian_power_moment(const Vector& mu1, const Vector& mu2,
                             const Matrix& sigma, double eta);

std::string measure_to_json(const FiniteMeasure& mu);
FiniteMeasure measure_from_json(const std::string& text);
std::string channel_to_json(const Channel& ch);
Channel channel_from_json(const std::string& text);

}  // namespace qlab
