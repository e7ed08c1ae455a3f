#include "volleymc/priors.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include <json.hpp>

namespace volleymc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kLog2Pi = 1.8378770664093454836;  // log(2*pi)

double log_normal_prec(double x, double mean, double precision) {
  if (precision <= 0.0) return -kInf;
  const double r = x - mean;
  return 0.5 * (std::log(precision) - kLog2Pi) - 0.5 * precision * r * r;
}

double log_gamma_rate(double x, double shape, double rate) {
  if (x <= 0.0) return -kInf;
  return shape * std::log(rate) - std::lgamma(shape) + (shape - 1.0) * std::log(x) -
         rate * x;
}

// log of the trivariate gamma function.
double lmgamma3(double a) {
  return 1.5 * std::log(std::numbers::pi) + std::lgamma(a) + std::lgamma(a - 0.5) +
         std::lgamma(a - 1.0);
}

// Cholesky with SPD check; returns false on failure.
bool cholesky(const Eigen::Matrix3d& m, Eigen::LLT<Eigen::Matrix3d>& llt) {
  llt.compute(m);
  return llt.info() == Eigen::Success;
}

double log_inv_wishart(const Eigen::Matrix3d& lambda, double nu,
                       const Eigen::Matrix3d& scale) {
  constexpr int p = 3;
  Eigen::LLT<Eigen::Matrix3d> llt_lambda, llt_scale;
  if (!cholesky(lambda, llt_lambda)) return -kInf;
  if (!cholesky(scale, llt_scale)) {
    throw std::invalid_argument("inverse-Wishart scale matrix is not SPD");
  }
  const double logdet_lambda =
      2.0 * llt_lambda.matrixL().toDenseMatrix().diagonal().array().log().sum();
  const double logdet_scale =
      2.0 * llt_scale.matrixL().toDenseMatrix().diagonal().array().log().sum();
  const double trace = llt_lambda.solve(scale).trace();
  return 0.5 * nu * logdet_scale - 0.5 * nu * p * std::log(2.0) - lmgamma3(0.5 * nu) -
         0.5 * (nu + p + 1) * logdet_lambda - 0.5 * trace;
}

double log_mvn3(const Eigen::Vector3d& x, const Eigen::Vector3d& mean,
                const Eigen::LLT<Eigen::Matrix3d>& llt, double logdet) {
  const Eigen::Vector3d r = x - mean;
  const double quad = r.dot(llt.solve(r));
  return -1.5 * kLog2Pi - 0.5 * logdet - 0.5 * quad;
}

double log_xi_prior(const Eigen::Vector3d& xi, const PriorSpec& spec) {
  double lp = 0.0;
  for (int j = 0; j < 3; ++j) {
    if (spec.xi_prior == XiPrior::uniform) {
      if (xi[j] <= 0.0 || xi[j] >= spec.xi_upper) return -kInf;
      lp -= std::log(spec.xi_upper);
    } else {
      const double sd = spec.xi_normal_sd;
      lp += log_normal_prec(xi[j], 0.0, 1.0 / (sd * sd));
    }
  }
  return lp;
}

bool all_finite(const Eigen::MatrixXd& m) { return m.allFinite(); }

}  // namespace

std::string to_string(PriorVariant v) {
  return v == PriorVariant::basic ? "basic" : "scaled-iw";
}

PriorVariant prior_variant_from_string(const std::string& s) {
  if (s == "basic") return PriorVariant::basic;
  if (s == "scaled-iw") return PriorVariant::scaled_iw;
  throw std::invalid_argument("unknown prior variant '" + s + "'");
}

void PriorSpec::validate() const {
  if (normal_fixed_precision <= 0.0 || logistic_precision <= 0.0) {
    throw std::invalid_argument("prior precisions must be positive");
  }
  if (gamma_shape <= 0.0 || gamma_rate <= 0.0) {
    throw std::invalid_argument("gamma hyper-prior needs positive shape and rate");
  }
  if (iw_nu < 4.0) {
    throw std::invalid_argument("inverse-Wishart needs nu >= 4 for 3x3 matrices");
  }
  Eigen::LLT<Eigen::Matrix3d> llt;
  if (!cholesky(iw_scale, llt)) {
    throw std::invalid_argument("inverse-Wishart scale matrix must be SPD");
  }
  if (xi_upper <= 0.0 || xi_normal_sd <= 0.0) {
    throw std::invalid_argument("xi prior scale must be positive");
  }
}

std::string prior_spec_to_json(const PriorSpec& spec) {
  nlohmann::ordered_json j;
  j["variant"] = to_string(spec.variant);
  j["normal_fixed_precision"] = spec.normal_fixed_precision;
  j["gamma_shape"] = spec.gamma_shape;
  j["gamma_rate"] = spec.gamma_rate;
  j["logistic_precision"] = spec.logistic_precision;
  j["iw_nu"] = spec.iw_nu;
  nlohmann::ordered_json scale = nlohmann::ordered_json::array();
  for (int r = 0; r < 3; ++r) {
    scale.push_back({spec.iw_scale(r, 0), spec.iw_scale(r, 1), spec.iw_scale(r, 2)});
  }
  j["iw_scale"] = scale;
  j["xi_prior"] = spec.xi_prior == XiPrior::uniform ? "uniform" : "normal";
  j["xi_upper"] = spec.xi_upper;
  j["xi_normal_sd"] = spec.xi_normal_sd;
  return j.dump();
}

PriorSpec prior_spec_from_json(const std::string& json_text) {
  const auto j = nlohmann::json::parse(json_text);
  PriorSpec spec;
  if (j.contains("variant")) spec.variant = prior_variant_from_string(j["variant"]);
  auto load = [&](const char* key, double& field) {
    if (j.contains(key)) field = j[key].get<double>();
  };
  load("normal_fixed_precision", spec.normal_fixed_precision);
  load("gamma_shape", spec.gamma_shape);
  load("gamma_rate", spec.gamma_rate);
  load("logistic_precision", spec.logistic_precision);
  load("iw_nu", spec.iw_nu);
  if (j.contains("iw_scale")) {
    const auto& scale = j["iw_scale"];
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) spec.iw_scale(r, c) = scale.at(r).at(c).get<double>();
  }
  if (j.contains("xi_prior")) {
    const std::string s = j["xi_prior"];
    if (s == "uniform") {
      spec.xi_prior = XiPrior::uniform;
    } else if (s == "normal") {
      spec.xi_prior = XiPrior::normal;
    } else {
      throw std::invalid_argument("unknown xi prior '" + s + "'");
    }
  }
  load("xi_upper", spec.xi_upper);
  load("xi_normal_sd", spec.xi_normal_sd);
  spec.validate();
  return spec;
}

double log_prior(const ParameterState& state, const PriorSpec& spec) {
  const bool state_basic = std::holds_alternative<HyperBasic>(state.hyper);
  if (state_basic != (spec.variant == PriorVariant::basic)) {
    throw std::invalid_argument("state hyper block does not match the prior variant");
  }
  if (!std::isfinite(state.mu) || !std::isfinite(state.lambda) ||
      !all_finite(state.alpha_star) || !all_finite(state.beta_star) ||
      !state.gamma.allFinite() || !state.eta.allFinite()) {
    return -kInf;
  }

  const double tau0 = spec.normal_fixed_precision;
  double lp = log_normal_prec(state.mu, 0.0, tau0) +
              log_normal_prec(state.lambda, 0.0, tau0);
  for (int s = 0; s < 3; ++s) {
    lp += log_normal_prec(state.gamma[s], 0.0, spec.logistic_precision);
  }
  for (int k = 0; k < 4; ++k) {
    lp += log_normal_prec(state.eta[k], 0.0, spec.logistic_precision);
  }

  if (state_basic) {
    const auto& h = std::get<HyperBasic>(state.hyper);
    for (int j = 0; j < 3; ++j) {
      if (h.tau_alpha[j] <= 0.0 || h.tau_beta[j] <= 0.0) return -kInf;
      lp += log_normal_prec(h.mu_alpha[j], 0.0, tau0) +
            log_normal_prec(h.mu_beta[j], 0.0, tau0);
      lp += log_gamma_rate(h.tau_alpha[j], spec.gamma_shape, spec.gamma_rate) +
            log_gamma_rate(h.tau_beta[j], spec.gamma_shape, spec.gamma_rate);
      for (Eigen::Index t = 0; t < state.alpha_star.rows(); ++t) {
        lp += log_normal_prec(state.alpha_star(t, j), h.mu_alpha[j], h.tau_alpha[j]);
        lp += log_normal_prec(state.beta_star(t, j), h.mu_beta[j], h.tau_beta[j]);
      }
    }
    return lp;
  }

  const auto& h = std::get<HyperScaledIW>(state.hyper);
  if (!h.mu_raw_alpha.allFinite() || !h.mu_raw_beta.allFinite() ||
      !h.xi_alpha.allFinite() || !h.xi_beta.allFinite() ||
      !h.lambda_alpha.allFinite() || !h.lambda_beta.allFinite()) {
    return -kInf;
  }
  for (int j = 0; j < 3; ++j) {
    lp += log_normal_prec(h.mu_raw_alpha[j], 0.0, tau0) +
          log_normal_prec(h.mu_raw_beta[j], 0.0, tau0);
  }
  const double lp_xi = log_xi_prior(h.xi_alpha, spec) + log_xi_prior(h.xi_beta, spec);
  if (!std::isfinite(lp_xi)) return -kInf;
  lp += lp_xi;

  const double lp_iw_a = log_inv_wishart(h.lambda_alpha, spec.iw_nu, spec.iw_scale);
  const double lp_iw_b = log_inv_wishart(h.lambda_beta, spec.iw_nu, spec.iw_scale);
  if (!std::isfinite(lp_iw_a) || !std::isfinite(lp_iw_b)) return -kInf;
  lp += lp_iw_a + lp_iw_b;

  Eigen::LLT<Eigen::Matrix3d> llt_a, llt_b;
  if (!cholesky(h.lambda_alpha, llt_a) || !cholesky(h.lambda_beta, llt_b)) return -kInf;
  const double logdet_a =
      2.0 * llt_a.matrixL().toDenseMatrix().diagonal().array().log().sum();
  const double logdet_b =
      2.0 * llt_b.matrixL().toDenseMatrix().diagonal().array().log().sum();
  for (Eigen::Index t = 0; t < state.alpha_star.rows(); ++t) {
    lp += log_mvn3(state.alpha_star.row(t).transpose(), h.mu_raw_alpha, llt_a, logdet_a);
    lp += log_mvn3(state.beta_star.row(t).transpose(), h.mu_raw_beta, llt_b, logdet_b);
  }
  return lp;
}

NormalParams hyper_mean_posterior(const Eigen::VectorXd& coeffs, double tau,
                                  double prior_precision) {
  if (tau <= 0.0 || prior_precision <= 0.0) {
    throw std::invalid_argument("hyper mean update needs positive precisions");
  }
  const double k = static_cast<double>(coeffs.size());
  const double post_prec = prior_precision + k * tau;
  return {tau * coeffs.sum() / post_prec, post_prec};
}

double gibbs_update_hyper_mean(const Eigen::VectorXd& coeffs, double tau,
                               double prior_precision, Rng& rng) {
  const NormalParams p = hyper_mean_posterior(coeffs, tau, prior_precision);
  return rng.normal(p.mean, 1.0 / std::sqrt(p.precision));
}

GammaParams hyper_precision_posterior(const Eigen::VectorXd& coeffs, double mu,
                                      double shape0, double rate0) {
  if (shape0 <= 0.0 || rate0 <= 0.0) {
    throw std::invalid_argument("precision update needs a proper gamma prior");
  }
  const double rss = (coeffs.array() - mu).square().sum();
  return {shape0 + 0.5 * static_cast<double>(coeffs.size()), rate0 + 0.5 * rss};
}

double gibbs_update_hyper_precision(const Eigen::VectorXd& coeffs, double mu,
                                    double shape0, double rate0, Rng& rng) {
  const GammaParams p = hyper_precision_posterior(coeffs, mu, shape0, rate0);
  return rng.gamma(p.shape, p.rate);
}

Eigen::Matrix3d draw_wishart(double nu, const Eigen::Matrix3d& scale, Rng& rng) {
  constexpr int p = 3;
  if (nu <= p - 1) throw std::invalid_argument("Wishart needs nu > p - 1");
  Eigen::LLT<Eigen::Matrix3d> llt;
  if (!cholesky(scale, llt)) {
    throw std::runtime_error("Wishart scale matrix is not SPD");
  }
  // Bartlett decomposition: lower-triangular A with chi distributed diagonal
  // and standard normal subdiagonal, W = L A A' L'.
  Eigen::Matrix3d a = Eigen::Matrix3d::Zero();
  for (int i = 0; i < p; ++i) {
    a(i, i) = std::sqrt(rng.chi_squared(nu - i));
    for (int j = 0; j < i; ++j) a(i, j) = rng.normal();
  }
  const Eigen::Matrix3d la = llt.matrixL() * a;
  Eigen::Matrix3d w = la * la.transpose();
  return 0.5 * (w + w.transpose());
}

Eigen::Matrix3d draw_inverse_wishart(double nu, const Eigen::Matrix3d& scale, Rng& rng) {
  Eigen::LLT<Eigen::Matrix3d> llt;
  if (!cholesky(scale, llt)) {
    throw std::runtime_error("inverse-Wishart scale matrix is not SPD");
  }
  const Eigen::Matrix3d scale_inv = llt.solve(Eigen::Matrix3d::Identity());
  const Eigen::Matrix3d w = draw_wishart(nu, 0.5 * (scale_inv + scale_inv.transpose()), rng);
  Eigen::LLT<Eigen::Matrix3d> llt_w;
  if (!cholesky(w, llt_w)) {
    throw std::runtime_error("Wishart draw lost positive definiteness");
  }
  const Eigen::Matrix3d inv = llt_w.solve(Eigen::Matrix3d::Identity());
  return 0.5 * (inv + inv.transpose());
}

InvWishartParams wishart_posterior(const Eigen::MatrixXd& rows,
                                   const Eigen::MatrixXd& M, double nu,
                                   const Eigen::Matrix3d& scale) {
  if (rows.rows() != M.rows() || rows.cols() != 3 || M.cols() != 3) {
    throw std::invalid_argument("wishart update needs K x 3 rows and matching means");
  }
  Eigen::Matrix3d scatter = Eigen::Matrix3d::Zero();
  for (Eigen::Index t = 0; t < rows.rows(); ++t) {
    const Eigen::Vector3d r = (rows.row(t) - M.row(t)).transpose();
    scatter += r * r.transpose();
  }
  return {nu + static_cast<double>(rows.rows()), scale + scatter};
}

Eigen::Matrix3d gibbs_update_wishart(const Eigen::MatrixXd& rows,
                                     const Eigen::MatrixXd& M, double nu,
                                     const Eigen::Matrix3d& scale, Rng& rng) {
  const InvWishartParams p = wishart_posterior(rows, M, nu, scale);
  return draw_inverse_wishart(p.nu, p.scale, rng);
}

MvnParams mvn_mean_posterior(const Eigen::MatrixXd& rows,
                             const Eigen::Matrix3d& lambda,
                             double prior_precision) {
  if (rows.cols() != 3) throw std::invalid_argument("mvn mean update needs K x 3 rows");
  Eigen::LLT<Eigen::Matrix3d> llt;
  if (!cholesky(lambda, llt)) {
    throw std::runtime_error("mvn mean update: covariance is not SPD");
  }
  const Eigen::Matrix3d lambda_inv = llt.solve(Eigen::Matrix3d::Identity());
  const double k = static_cast<double>(rows.rows());
  MvnParams p;
  p.precision = prior_precision * Eigen::Matrix3d::Identity() + k * lambda_inv;
  const Eigen::Vector3d colsum = rows.colwise().sum().transpose();
  Eigen::LLT<Eigen::Matrix3d> llt_post(p.precision);
  p.mean = llt_post.solve(lambda_inv * colsum);
  return p;
}

Eigen::Vector3d gibbs_update_mvn_mean(const Eigen::MatrixXd& rows,
                                      const Eigen::Matrix3d& lambda,
                                      double prior_precision, Rng& rng) {
  const MvnParams p = mvn_mean_posterior(rows, lambda, prior_precision);
  // x = mean + L^-T z with P = L L' gives covariance P^-1.
  Eigen::LLT<Eigen::Matrix3d> llt(p.precision);
  if (llt.info() != Eigen::Success) {
    throw std::runtime_error("mvn mean update: posterior precision is not SPD");
  }
  const Eigen::Vector3d z{rng.normal(), rng.normal(), rng.normal()};
  const Eigen::Matrix3d l = llt.matrixL();
  return p.mean + l.transpose().triangularView<Eigen::Upper>().solve(z);
}

CovarianceSummary reconstruct_covariance(const Eigen::Vector3d& xi,
                                         const Eigen::Matrix3d& lambda) {
  CovarianceSummary out;
  out.sigma = xi.asDiagonal() * lambda * xi.asDiagonal();
  for (int j = 0; j < 3; ++j) out.sigma2[j] = xi[j] * xi[j] * lambda(j, j);
  const int pairs[3][2] = {{0, 1}, {0, 2}, {1, 2}};
  for (int i = 0; i < 3; ++i) {
    const int j = pairs[i][0], l = pairs[i][1];
    out.rho[i] = lambda(j, l) / std::sqrt(lambda(j, j) * lambda(l, l));
  }
  return out;
}

}  // namespace volleymc
