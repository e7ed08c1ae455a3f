#include "volleymc/model_core.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "volleymc/priors.hpp"

namespace volleymc {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
// exp overflows just above 709.78; anything this large is a rejected state.
constexpr double kMaxLogIntensity = 700.0;
}  // namespace

Eigen::MatrixXd apply_sum_to_zero(const Eigen::MatrixXd& stars) {
  Eigen::MatrixXd centered = stars;
  for (Eigen::Index j = 0; j < stars.cols(); ++j) {
    centered.col(j).array() -= stars.col(j).mean();
  }
  return centered;
}

Eigen::MatrixXd effective_alpha_star(const ParameterState& state) {
  if (const auto* h = std::get_if<HyperScaledIW>(&state.hyper)) {
    return state.alpha_star * h->xi_alpha.asDiagonal();
  }
  return state.alpha_star;
}

Eigen::MatrixXd effective_beta_star(const ParameterState& state) {
  if (const auto* h = std::get_if<HyperScaledIW>(&state.hyper)) {
    return state.beta_star * h->xi_beta.asDiagonal();
  }
  return state.beta_star;
}

CenteredEffects centered_effects(const ParameterState& state) {
  return {apply_sum_to_zero(effective_alpha_star(state)),
          apply_sum_to_zero(effective_beta_star(state))};
}

LogIntensities log_scoring_intensity(double mu, double lambda,
                                     const CenteredEffects& effects,
                                     const MatchRecord& match) {
  const int h = match.home - 1;
  const int a = match.away - 1;
  const auto& al = effects.alpha;
  const auto& be = effects.beta;
  const double attack_home = al(h, 0) + al(h, 1) * match.eff_home.attack +
                             al(h, 2) * match.eff_home.serve;
  const double attack_away = al(a, 0) + al(a, 1) * match.eff_away.attack +
                             al(a, 2) * match.eff_away.serve;
  const double defence_home = be(h, 0) + be(h, 1) * match.eff_home.defence +
                              be(h, 2) * match.eff_home.block;
  const double defence_away = be(a, 0) + be(a, 1) * match.eff_away.defence +
                              be(a, 2) * match.eff_away.block;
  return {mu + lambda + attack_home + defence_away,
          mu + attack_away + defence_home};
}

ScoringIntensities scoring_intensity(const ParameterState& state,
                                     const MatchRecord& match) {
  const CenteredEffects effects = centered_effects(state);
  const LogIntensities li = log_scoring_intensity(state.mu, state.lambda, effects, match);
  if (li.log_theta_h > kMaxLogIntensity || li.log_theta_a > kMaxLogIntensity) {
    throw std::overflow_error(
        "log scoring intensity " +
        std::to_string(std::max(li.log_theta_h, li.log_theta_a)) +
        " would overflow exp");
  }
  return {std::exp(li.log_theta_h), std::exp(li.log_theta_a)};
}

double loglik_points(const ScoringIntensities& theta, long y_h, long y_a) {
  auto lpmf = [](long y, double th) {
    return static_cast<double>(y) * std::log(th) - th - std::lgamma(static_cast<double>(y) + 1.0);
  };
  return lpmf(y_h, theta.theta_h) + lpmf(y_a, theta.theta_a);
}

double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double inv_logit(double x) {
  double p;
  if (x >= 0.0) {
    p = 1.0 / (1.0 + std::exp(-x));
  } else {
    const double e = std::exp(x);
    p = e / (1.0 + e);
  }
  // Keep strictly inside (0, 1) even where exp underflows.
  constexpr double lo = std::numeric_limits<double>::denorm_min();
  const double hi = 1.0 - std::numeric_limits<double>::epsilon() / 2.0;
  return std::min(std::max(p, lo), hi);
}

double bernoulli_logit_lpmf(double d, double logit_p) {
  return d * logit_p - softplus(logit_p);
}

double prob_five_sets(const Eigen::Vector3d& gamma, long y_h, long y_a) {
  return inv_logit(gamma[0] + gamma[1] * static_cast<double>(y_h) +
                   gamma[2] * static_cast<double>(y_a));
}

double prob_home_win(const Eigen::Vector4d& eta, long y_h, long y_a, double d_s) {
  return inv_logit(eta[0] + eta[1] * static_cast<double>(y_h) +
                   eta[2] * static_cast<double>(y_a) + eta[3] * d_s);
}

double joint_log_posterior(const ParameterState& state, const SeasonData& data,
                           const PriorSpec& prior) {
  double lp = log_prior(state, prior);
  if (!std::isfinite(lp)) return -kInf;

  const CenteredEffects effects = centered_effects(state);
  for (const auto& m : data.matches) {
    const LogIntensities li = log_scoring_intensity(state.mu, state.lambda, effects, m);
    if (li.log_theta_h > kMaxLogIntensity || li.log_theta_a > kMaxLogIntensity) {
      return -kInf;
    }
    lp += loglik_points({std::exp(li.log_theta_h), std::exp(li.log_theta_a)}, m.y_h, m.y_a);

    const double logit_s = state.gamma[0] + state.gamma[1] * static_cast<double>(m.y_h) +
                           state.gamma[2] * static_cast<double>(m.y_a);
    lp += bernoulli_logit_lpmf(m.d_s, logit_s);

    const double logit_m = state.eta[0] + state.eta[1] * static_cast<double>(m.y_h) +
                           state.eta[2] * static_cast<double>(m.y_a) +
                           state.eta[3] * m.d_s;
    lp += bernoulli_logit_lpmf(m.d_m, logit_m);
  }
  return lp;
}

}  // namespace volleymc
