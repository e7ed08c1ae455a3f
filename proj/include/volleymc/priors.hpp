#pragma once

#include <Eigen/Dense>
#include <string>

#include "volleymc/model_core.hpp"
#include "volleymc/rng.hpp"

namespace volleymc {

enum class PriorVariant { basic, scaled_iw };
enum class XiPrior { uniform, normal };

std::string to_string(PriorVariant v);
PriorVariant prior_variant_from_string(const std::string& s);

struct PriorSpec {
  PriorVariant variant = PriorVariant::basic;

  // Normal(0, precision) on mu, lambda and the hyper means.
  double normal_fixed_precision = 1e-6;
  // Gamma(shape, rate) on the basic hierarchy's precisions.
  double gamma_shape = 0.01;
  double gamma_rate = 0.01;
  // Normal(0, precision) on the logistic regression coefficients gamma, eta.
  double logistic_precision = 1e-4;

  // Scaled inverse-Wishart hierarchy.
  double iw_nu = 4.0;
  Eigen::Matrix3d iw_scale = Eigen::Matrix3d::Identity();
  XiPrior xi_prior = XiPrior::uniform;
  double xi_upper = 100.0;    // Uniform(0, xi_upper)
  double xi_normal_sd = 10.0;  // alternative Normal(0, sd) scale prior

  // Throws std::invalid_argument when a field is out of range (nonpositive
  // precisions, iw_nu < 4, non-SPD iw_scale, ...).
  void validate() const;
};

// JSON round-trip (object with the field names above; variant and xi_prior as
// strings "basic"/"scaled-iw" and "uniform"/"normal").
std::string prior_spec_to_json(const PriorSpec& spec);
PriorSpec prior_spec_from_json(const std::string& json_text);

// Fully normalised log prior density of the state.  Returns -inf when a
// support constraint fails: nonpositive precision, xi outside a uniform
// prior's range, Lambda not SPD, or any non-finite coordinate.  Throws
// std::invalid_argument when the state's hyper block does not match
// spec.variant.
double log_prior(const ParameterState& state, const PriorSpec& spec);

// --- Conjugate updates ------------------------------------------------------
// The *_params helpers expose the posterior parameters the draws use, so the
// update arithmetic can be pinned independently of any sampling.

struct NormalParams {
  double mean = 0.0;
  double precision = 0.0;
};

// Coefficients iid Normal(mean, tau) with a Normal(0, prior_precision) prior
// on the mean: posterior precision = prior_precision + K * tau, posterior
// mean = tau * sum(coeffs) / posterior precision.
NormalParams hyper_mean_posterior(const Eigen::VectorXd& coeffs, double tau,
                                  double prior_precision);
double gibbs_update_hyper_mean(const Eigen::VectorXd& coeffs, double tau,
                               double prior_precision, Rng& rng);

struct GammaParams {
  double shape = 0.0;
  double rate = 0.0;
};

// Coefficients iid Normal(mu, tau) with a Gamma(shape0, rate0) prior on tau:
// posterior shape = shape0 + K/2, rate = rate0 + sum((c - mu)^2) / 2.
GammaParams hyper_precision_posterior(const Eigen::VectorXd& coeffs, double mu,
                                      double shape0, double rate0);
double gibbs_update_hyper_precision(const Eigen::VectorXd& coeffs, double mu,
                                    double shape0, double rate0, Rng& rng);

struct InvWishartParams {
  double nu = 0.0;
  Eigen::Matrix3d scale = Eigen::Matrix3d::Identity();
};

// Rows of `rows` iid trivariate Normal(M row, Lambda) with an
// Inv-Wishart(nu, scale) prior on Lambda: posterior is
// Inv-Wishart(nu + K, scale + sum of residual outer products).
InvWishartParams wishart_posterior(const Eigen::MatrixXd& rows,
                                   const Eigen::MatrixXd& M, double nu,
                                   const Eigen::Matrix3d& scale);
Eigen::Matrix3d gibbs_update_wishart(const Eigen::MatrixXd& rows,
                                     const Eigen::MatrixXd& M, double nu,
                                     const Eigen::Matrix3d& scale, Rng& rng);

struct MvnParams {
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  Eigen::Matrix3d precision = Eigen::Matrix3d::Identity();
};

// Rows iid trivariate Normal(m, Lambda) with independent Normal(0,
// prior_precision) priors on m's components: posterior precision =
// prior_precision * I + K * Lambda^-1, mean = posterior_cov * Lambda^-1 *
// column sums.
MvnParams mvn_mean_posterior(const Eigen::MatrixXd& rows,
                             const Eigen::Matrix3d& lambda,
                             double prior_precision);
Eigen::Vector3d gibbs_update_mvn_mean(const Eigen::MatrixXd& rows,
                                      const Eigen::Matrix3d& lambda,
                                      double prior_precision, Rng& rng);

// Direct draws, used by the conjugate updates and the tests.
Eigen::Matrix3d draw_wishart(double nu, const Eigen::Matrix3d& scale, Rng& rng);
Eigen::Matrix3d draw_inverse_wishart(double nu, const Eigen::Matrix3d& scale, Rng& rng);

// --- Covariance reconstruction ---------------------------------------------

struct CovarianceSummary {
  Eigen::Matrix3d sigma = Eigen::Matrix3d::Identity();  // Diag(xi) Lambda Diag(xi)
  Eigen::Vector3d sigma2 = Eigen::Vector3d::Ones();     // xi_j^2 * Lambda_jj
  // Pairwise correlations (0,1), (0,2), (1,2); the xi scales cancel.
  Eigen::Vector3d rho = Eigen::Vector3d::Zero();
};

CovarianceSummary reconstruct_covariance(const Eigen::Vector3d& xi,
                                         const Eigen::Matrix3d& lambda);

}  // namespace volleymc
