#include "qlab/divergences.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <json.hpp>

#include "qlab/error.hpp"

namespace qlab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// x * slope with the convention 0 * inf = 0.
double mass_times(double x, double slope) { return x == 0.0 ? 0.0 : x * slope; }

}  // namespace

FiniteMeasure::FiniteMeasure(std::vector<double> weights) : w_(std::move(weights)) {
  for (double x : w_) {
    require(x >= 0.0 && std::isfinite(x), ErrorCode::kInvalidArgument,
            "measure weights must be finite and nonnegative");
  }
}

double FiniteMeasure::mass() const {
  double s = 0.0;
  for (double x : w_) s += x;
  return s;
}

FiniteMeasure FiniteMeasure::scaled(double c) const {
  std::vector<double> w = w_;
  for (double& x : w) x *= c;
  return FiniteMeasure(std::move(w));
}

DivergenceFunction DivergenceFunction::power(double eta) {
  require(eta >= 0.0, ErrorCode::kOutOfRange, "power divergence needs eta >= 0");
  DivergenceFunction f;
  f.kind_ = Kind::kPower;
  f.eta_ = eta;
  return f;
}

DivergenceFunction DivergenceFunction::kl() {
  DivergenceFunction f;
  f.kind_ = Kind::kKl;
  return f;
}

DivergenceFunction DivergenceFunction::chi2() {
  DivergenceFunction f;
  f.kind_ = Kind::kChi2;
  return f;
}

DivergenceFunction DivergenceFunction::tabulated(std::vector<double> t,
                                                 std::vector<double> fv) {
  require(t.size() == fv.size() && t.size() >= 2, ErrorCode::kInvalidArgument,
          "tabulated divergence needs at least two knots");
  require(t.front() > 0.0, ErrorCode::kInvalidArgument, "knots must be positive");
  for (std::size_t i = 1; i < t.size(); ++i) {
    require(t[i] > t[i - 1], ErrorCode::kInvalidArgument,
            "knots must be strictly increasing");
  }
  DivergenceFunction f;
  f.kind_ = Kind::kTabulated;
  f.knots_t_ = std::move(t);
  f.knots_f_ = std::move(fv);
  require(f.spot_check_convex(10000, 12345u, 2.0 * f.knots_t_.back()),
          ErrorCode::kInvalidArgument, "tabulated divergence is not convex");
  return f;
}

double DivergenceFunction::base(double t) const {
  switch (kind_) {
    case Kind::kPower:
      return t == 0.0 ? 0.0 : std::pow(t, 1.0 + eta_);
    case Kind::kKl:
      return t == 0.0 ? 0.0 : t * std::log(t);
    case Kind::kChi2:
      return (t - 1.0) * (t - 1.0);
    case Kind::kTabulated: {
      const auto& xs = knots_t_;
      const auto& ys = knots_f_;
      std::size_t i;
      if (t <= xs.front()) {
        i = 0;
      } else if (t >= xs.back()) {
        i = xs.size() - 2;
      } else {
        i = static_cast<std::size_t>(std::upper_bound(xs.begin(), xs.end(), t) -
                                     xs.begin()) - 1;
      }
      const double slope = (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i]);
      return ys[i] + slope * (t - xs[i]);
    }
  }
  return 0.0;
}

double DivergenceFunction::base_slope_inf() const {
  switch (kind_) {
    case Kind::kPower: return eta_ == 0.0 ? 1.0 : kInf;
    case Kind::kKl: return kInf;
    case Kind::kChi2: return kInf;
    case Kind::kTabulated: {
      const std::size_t n = knots_t_.size();
      return (knots_f_[n - 1] - knots_f_[n - 2]) / (knots_t_[n - 1] - knots_t_[n - 2]);
    }
  }
  return kInf;
}

double DivergenceFunction::operator()(double t) const {
  require(t >= 0.0, ErrorCode::kOutOfRange, "divergence function: t < 0");
  return outer_ * base(inner_ * t) + shift_;
}

double DivergenceFunction::slope_at_infinity() const {
  if (inner_ == 0.0) return 0.0;
  const double s = base_slope_inf();
  if (std::isinf(s)) return s;
  return outer_ * inner_ * s;
}

DivergenceFunction DivergenceFunction::affine(double beta, double alpha) const {
  require(beta > 0.0, ErrorCode::kOutOfRange, "affine: beta must be > 0");
  DivergenceFunction g = *this;
  g.outer_ = beta * outer_;
  g.shift_ = beta * shift_ + alpha;
  return g;
}

DivergenceFunction DivergenceFunction::normalized(double p, double q) const {
  require(p >= 0.0 && q > 0.0, ErrorCode::kOutOfRange,
          "normalized: need p >= 0, q > 0");
  DivergenceFunction g = *this;
  g.outer_ = q * outer_;
  g.shift_ = q * shift_;
  g.inner_ = inner_ * p / q;
  return g;
}

bool DivergenceFunction::spot_check_convex(int samples, unsigned seed,
                                           double t_max) const {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, t_max);
  for (int i = 0; i < samples; ++i) {
    const double x = u(rng);
    const double y = u(rng);
    const double mid = (*this)(0.5 * (x + y));
    const double avg = 0.5 * ((*this)(x) + (*this)(y));
    if (mid > avg + 1e-12 * (1.0 + std::abs(avg))) return false;
  }
  return true;
}

bool DivergenceFunction::conjugate_non_increasing() const {
  double prev = kInf;
  for (int i = 0; i <= 480; ++i) {
    const double t = std::pow(10.0, -6.0 + 12.0 * i / 480.0);
    const double g = t * (*this)(1.0 / t);
    if (g > prev + 1e-12 * (1.0 + std::abs(prev))) return false;
    prev = g;
  }
  return true;
}

double f_divergence(const FiniteMeasure& mu, const FiniteMeasure& nu,
                    const DivergenceFunction& f) {
  require(mu.size() == nu.size(), ErrorCode::kInvalidDimension,
          "f_divergence: supports differ");
  double acc = 0.0;
  const double slope = f.slope_at_infinity();
  for (std::size_t i = 0; i < mu.size(); ++i) {
    if (nu[i] > 0.0) {
      acc += nu[i] * f(mu[i] / nu[i]);
    } else {
      acc += mass_times(mu[i], slope);
    }
  }
  return acc;
}

double phi_f(double a, double b, double p, double q, const DivergenceFunction& f) {
  constexpr double tol = 1e-12;
  require(a >= -tol && a <= p + tol && b >= -tol && b <= q + tol,
          ErrorCode::kOutOfRange, "phi_f: need 0 <= a <= p, 0 <= b <= q");
  a = std::clamp(a, 0.0, p);
  b = std::clamp(b, 0.0, q);
  const double slope = f.slope_at_infinity();
  const double t1 = b > 0.0 ? b * f(a / b) : mass_times(a, slope);
  const double rb = q - b;
  const double ra = p - a;
  const double t2 = rb > 0.0 ? rb * f(ra / rb) : mass_times(ra, slope);
  return t1 + t2;
}

Channel::Channel(Matrix kernel) : k_(std::move(kernel)) {
  require(k_.rows() >= 1 && k_.cols() >= 1, ErrorCode::kInvalidDimension,
          "channel: empty kernel");
  require(k_.minCoeff() >= 0.0, ErrorCode::kInvalidArgument,
          "channel: negative entry");
  for (Index i = 0; i < k_.rows(); ++i) {
    require(std::abs(k_.row(i).sum() - 1.0) <= 1e-12, ErrorCode::kInvalidArgument,
            "channel: rows must sum to 1");
  }
}

Channel Channel::identity(std::size_t n) {
  return Channel(Matrix::Identity(static_cast<Index>(n), static_cast<Index>(n)));
}

Channel Channel::deterministic(const std::vector<std::size_t>& map,
                               std::size_t n_target) {
  Matrix k = Matrix::Zero(static_cast<Index>(map.size()), static_cast<Index>(n_target));
  for (std::size_t i = 0; i < map.size(); ++i) {
    require(map[i] < n_target, ErrorCode::kOutOfRange, "channel: target out of range");
    k(static_cast<Index>(i), static_cast<Index>(map[i])) = 1.0;
  }
  return Channel(std::move(k));
}

FiniteMeasure pushforward(const FiniteMeasure& mu, const Channel& ch) {
  require(mu.size() == ch.source_size(), ErrorCode::kInvalidDimension,
          "pushforward: measure and channel disagree");
  std::vector<double> out(ch.target_size(), 0.0);
  const Matrix& k = ch.kernel();
  for (std::size_t i = 0; i < mu.size(); ++i) {
    if (mu[i] == 0.0) continue;
    for (std::size_t j = 0; j < out.size(); ++j) {
      out[j] += mu[i] * k(static_cast<Index>(i), static_cast<Index>(j));
    }
  }
  return FiniteMeasure(std::move(out));
}

FiniteMeasure truncate(const FiniteMeasure& prob, const std::vector<bool>& event) {
  require(event.size() == prob.size(), ErrorCode::kInvalidDimension,
          "truncate: mask size differs from support");
  require(std::abs(prob.mass() - 1.0) <= 1e-9, ErrorCode::kPrecondition,
          "truncate: input must be a probability measure");
  std::vector<double> w(prob.size(), 0.0);
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = event[i] ? prob[i] : 0.0;
  return FiniteMeasure(std::move(w));
}

BayesBoundResult bayes_bound_check(const std::vector<double>& prior,
                                   const std::vector<FiniteMeasure>& family,
                                   const FiniteMeasure& nu, std::size_t n_actions,
                                   const std::vector<std::vector<int>>& indicator,
                                   const DivergenceFunction& f) {
  const std::size_t n_theta = prior.size();
  const std::size_t n_x = nu.size();
  require(n_theta >= 1 && family.size() == n_theta, ErrorCode::kInvalidDimension,
          "bayes_bound: prior and family sizes differ");
  require(n_actions >= 1 && indicator.size() == n_actions,
          ErrorCode::kInvalidDimension, "bayes_bound: indicator needs |A| rows");
  double prior_mass = 0.0;
  for (double p : prior) {
    require(p >= 0.0, ErrorCode::kPrecondition, "bayes_bound: negative prior");
    prior_mass += p;
  }
  require(std::abs(prior_mass - 1.0) <= 1e-9, ErrorCode::kPrecondition,
          "bayes_bound: prior must sum to 1");
  for (const auto& m : family) {
    require(m.size() == n_x, ErrorCode::kInvalidDimension,
            "bayes_bound: family support differs from nu");
    require(m.mass() <= 1.0 + 1e-12, ErrorCode::kPrecondition,
            "bayes_bound: family members must have mass <= 1");
  }
  for (const auto& row : indicator) {
    require(row.size() == n_theta, ErrorCode::kInvalidDimension,
            "bayes_bound: indicator needs |Theta| columns");
  }
  const double nu_mass = nu.mass();
  require(nu_mass <= 1.0 + 1e-12, ErrorCode::kPrecondition,
          "bayes_bound: nu must have mass <= 1");
  require(std::abs(nu_mass - 1.0) <= 1e-12 || f.conjugate_non_increasing(),
          ErrorCode::kPrecondition,
          "bayes_bound: need |nu| = 1 or t f(1/t) non-increasing");
  require(f.at_zero() >= -1e-12 && f.spot_check_convex(1000, 7u),
          ErrorCode::kPrecondition, "bayes_bound: f must be nonnegative and convex");
  for (int i = 0; i <= 200; ++i) {
    require(f(std::pow(10.0, -4.0 + 8.0 * i / 200.0)) >= -1e-12,
            ErrorCode::kPrecondition, "bayes_bound: f must be nonnegative");
  }

  double rules = 1.0;
  for (std::size_t x = 0; x < n_x; ++x) {
    rules *= static_cast<double>(n_actions);
    require(rules <= 1e6, ErrorCode::kCombinatorialGuard,
            "bayes_bound: more than 1e6 decision rules");
  }

  // score[x][a] = Σ_θ P(θ) μ_θ(x) I(a, θ)
  std::vector<std::vector<double>> score(n_x, std::vector<double>(n_actions, 0.0));
  for (std::size_t x = 0; x < n_x; ++x)
    for (std::size_t a = 0; a < n_actions; ++a)
      for (std::size_t t = 0; t < n_theta; ++t)
        if (indicator[a][t]) score[x][a] += prior[t] * family[t][x];

  BayesBoundResult res;
  const auto n_rules = static_cast<std::size_t>(rules);
  std::vector<std::size_t> digit(n_x, 0);
  for (std::size_t rule = 0; rule < n_rules; ++rule) {
    double value = 0.0;
    for (std::size_t x = 0; x < n_x; ++x) value += score[x][digit[x]];
    res.v_opt = std::max(res.v_opt, value);
    for (std::size_t x = 0; x < n_x; ++x) {
      if (++digit[x] < n_actions) break;
      digit[x] = 0;
    }
  }
  for (std::size_t a = 0; a < n_actions; ++a) {
    double v = 0.0;
    for (std::size_t t = 0; t < n_theta; ++t)
      if (indicator[a][t]) v += prior[t];
    res.v0 = std::max(res.v0, v);
  }
  for (std::size_t t = 0; t < n_theta; ++t) {
    if (prior[t] > 0.0) res.lhs += prior[t] * f_divergence(family[t], nu, f);
  }
  if (res.v0 > 0.0) {
    res.rhs = res.v0 * f(res.v_opt / res.v0);
  } else {
    res.rhs = mass_times(res.v_opt, f.slope_at_infinity());
  }
  res.holds = res.lhs >= res.rhs - 1e-12 * std::max(1.0, std::abs(res.rhs));
  return res;
}

double gaussian_power_moment(const Vector& mu1, const Vector& mu2,
                             const Matrix& sigma, double eta) {
  require(mu1.size() == mu2.size() && sigma.rows() == mu1.size() &&
              sigma.cols() == mu1.size(),
          ErrorCode::kInvalidDimension, "gaussian_power_moment: dimension mismatch");
  require(eta > -1.0, ErrorCode::kOutOfRange, "gaussian_power_moment: eta <= -1");
  const Matrix pinv = pseudo_inverse_symmetric(0.5 * (sigma + sigma.transpose()));
  const Matrix proj = Matrix::Identity(sigma.rows(), sigma.cols()) - sigma * pinv;
  require((proj * mu1).norm() < 1e-8 && (proj * mu2).norm() < 1e-8,
          ErrorCode::kPrecondition, "gaussian_power_moment: mean outside range(Sigma)");
  const Vector diff = mu1 - mu2;
  return std::exp(0.5 * eta * (1.0 + eta) * diff.dot(pinv * diff));
}

std::string measure_to_json(const FiniteMeasure& mu) {
  return nlohmann::json(mu.weights()).dump();
}

FiniteMeasure measure_from_json(const std::string& text) {
  try {
    return FiniteMeasure(nlohmann::json::parse(text).get<std::vector<double>>());
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kParse, std::string("measure: ") + e.what());
  }
}

std::string channel_to_json(const Channel& ch) {
  nlohmann::json rows = nlohmann::json::array();
  const Matrix& k = ch.kernel();
  for (Index i = 0; i < k.rows(); ++i) {
    std::vector<double> row(static_cast<std::size_t>(k.cols()));
    for (Index j = 0; j < k.cols(); ++j) row[static_cast<std::size_t>(j)] = k(i, j);
    rows.push_back(row);
  }
  return rows.dump();
}

Channel channel_from_json(const std::string& text) {
  std::vector<std::vector<double>> rows;
  try {
    rows = nlohmann::json::parse(text).get<std::vector<std::vector<double>>>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kParse, std::string("channel: ") + e.what());
  }
  require(!rows.empty() && !rows.front().empty(), ErrorCode::kParse,
          "channel: empty kernel");
  Matrix k(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    require(rows[i].size() == rows.front().size(), ErrorCode::kParse,
            "channel: ragged rows");
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      k(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
    }
  }
  return Channel(std::move(k));
}

}  // namespace qlab
