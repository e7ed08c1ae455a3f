#pragma once

#include <Eigen/Dense>
#include <variant>

#include "volleymc/match_data.hpp"

namespace volleymc {

struct PriorSpec;  // priors.hpp

// Hyper-parameters of the exchangeable ("basic") hierarchy: independent
// Normal(mu_j, tau_j) priors on each column of the star coefficients.
struct HyperBasic {
  Eigen::Vector3d mu_alpha = Eigen::Vector3d::Zero();
  Eigen::Vector3d tau_alpha = Eigen::Vector3d::Ones();  // precisions
  Eigen::Vector3d mu_beta = Eigen::Vector3d::Zero();
  Eigen::Vector3d tau_beta = Eigen::Vector3d::Ones();
};

// Hyper-parameters of the scaled inverse-Wishart hierarchy: rows of the raw
// coefficient matrices are trivariate Normal(mu_raw, Lambda); the effective
// coefficients are the raw ones scaled per-column by xi, so the implied
// covariance is Diag(xi) * Lambda * Diag(xi).
struct HyperScaledIW {
  Eigen::Vector3d mu_raw_alpha = Eigen::Vector3d::Zero();
  Eigen::Vector3d mu_raw_beta = Eigen::Vector3d::Zero();
  Eigen::Vector3d xi_alpha = Eigen::Vector3d::Ones();
  Eigen::Vector3d xi_beta = Eigen::Vector3d::Ones();
  Eigen::Matrix3d lambda_alpha = Eigen::Matrix3d::Identity();
  Eigen::Matrix3d lambda_beta = Eigen::Matrix3d::Identity();
};

using HyperState = std::variant<HyperBasic, HyperScaledIW>;

// Full parameter state of one chain.  alpha_star / beta_star are the
// unconstrained K x 3 coefficient matrices (columns: intercept, first and
// second covariate slope); under the scaled inverse-Wishart hierarchy they
// hold the raw, unscaled coefficients.
struct ParameterState {
  double mu = 0.0;      // log-scale scoring constant
  double lambda = 0.0;  // home advantage on the log scale
  Eigen::MatrixXd alpha_star;  // K x 3 attack coefficients
  Eigen::MatrixXd beta_star;   // K x 3 defence coefficients
  Eigen::Vector3d gamma = Eigen::Vector3d::Zero();  // five-set regression
  Eigen::Vector4d eta = Eigen::Vector4d::Zero();    // home-win regression
  HyperState hyper = HyperBasic{};
};

// Column-demeaned coefficient matrices; every column sums to zero.
struct CenteredEffects {
  Eigen::MatrixXd alpha;  // K x 3
  Eigen::MatrixXd beta;   // K x 3
};

struct ScoringIntensities {
  double theta_h = 0.0;
  double theta_a = 0.0;
};

// Subtracts each column's mean: the sum-to-zero constraint applied to
// unconstrained draws.
Eigen::MatrixXd apply_sum_to_zero(const Eigen::MatrixXd& stars);

// Star matrices with the scaled inverse-Wishart column scales applied (the
// basic hierarchy scales by 1).
Eigen::MatrixXd effective_alpha_star(const ParameterState& state);
Eigen::MatrixXd effective_beta_star(const ParameterState& state);

CenteredEffects centered_effects(const ParameterState& state);

// Log intensities before exponentiation; exposed for evaluation code that
// must avoid overflow.
//   log theta_h = mu + lambda + attack(home) + defence(away)
//   log theta_a = mu          + attack(away) + defence(home)
// where attack(t) = alpha_t0 + alpha_t1 * att_eff + alpha_t2 * ser_eff and
// defence(t) = beta_t0 + beta_t1 * def_eff + beta_t2 * blo_eff, evaluated at
// the team's own covariates in this match.
struct LogIntensities {
  double log_theta_h = 0.0;
  double log_theta_a = 0.0;
};
LogIntensities log_scoring_intensity(double mu, double lambda,
                                     const CenteredEffects& effects,
                                     const MatchRecord& match);

// Throws std::overflow_error (message carries the offending log intensity)
// when exp would overflow.
ScoringIntensities scoring_intensity(const ParameterState& state,
                                     const MatchRecord& match);

// Poisson log likelihood of one match's point totals, exact lgamma
// normalisation included.
double loglik_points(const ScoringIntensities& theta, long y_h, long y_a);

// logit^-1 probabilities of the two Bernoulli modules, clamped to the open
// unit interval and stable across the whole double range.
double prob_five_sets(const Eigen::Vector3d& gamma, long y_h, long y_a);
double prob_home_win(const Eigen::Vector4d& eta, long y_h, long y_a, double d_s);

// log(1 + exp(x)) without overflow.
double softplus(double x);
double inv_logit(double x);

// Bernoulli log pmf with a logit-scale parameter; d must be 0 or 1.
double bernoulli_logit_lpmf(double d, double logit_p);

// Log prior (priors.hpp) plus the likelihood of all three modules over the
// season.  Returns -inf (no exception) when the state violates a prior
// support constraint or a log intensity would overflow exp.
double joint_log_posterior(const ParameterState& state, const SeasonData& data,
                           const PriorSpec& prior);

}  // namespace volleymc
