#include "volleymc/mcmc.hpp"
#include <cstdio>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace volleymc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kMaxLogIntensity = 700.0;

// Unnormalised Normal log density; the constants cancel inside every
// accept ratio this file computes.
double normal_quad(double x, double mean, double precision) {
  const double r = x - mean;
  return -0.5 * precision * r * r;
}

// Accept rule handling -inf ends without producing NaN deltas.
bool accept_move(double cand_lp, double cur_lp, Rng& rng) {
  if (!(cand_lp > -kInf)) return false;  // rejects NaN as well
  if (!(cur_lp > -kInf)) return true;
  const double delta = cand_lp - cur_lp;
  if (delta >= 0.0) return true;
  return std::log(rng.uniform()) < delta;
}

// Flat arrays of the season, laid out for tight likelihood loops.
struct SeasonArrays {
  int n = 0;
  int n_teams = 0;
  std::vector<int> home, away;  // 0-based
  std::vector<double> yh, ya, ds, dm;
  std::vector<double> att_h, ser_h, def_h, blo_h;
  std::vector<double> att_a, ser_a, def_a, blo_a;
  double ybar_h = 0.0, ybar_a = 0.0, dbar_s = 0.0;

  explicit SeasonArrays(const SeasonData& season) {
    n = static_cast<int>(season.matches.size());
    n_teams = season.teams.size();
    home.reserve(n);
    for (const auto& m : season.matches) {
      home.push_back(m.home - 1);
      away.push_back(m.away - 1);
      yh.push_back(static_cast<double>(m.y_h));
      ya.push_back(static_cast<double>(m.y_a));
      ds.push_back(m.d_s);
      dm.push_back(m.d_m);
      att_h.push_back(m.eff_home.attack);
      ser_h.push_back(m.eff_home.serve);
      def_h.push_back(m.eff_home.defence);
      blo_h.push_back(m.eff_home.block);
      att_a.push_back(m.eff_away.attack);
      ser_a.push_back(m.eff_away.serve);
      def_a.push_back(m.eff_away.defence);
      blo_a.push_back(m.eff_away.block);
      ybar_h += yh.back();
      ybar_a += ya.back();
      dbar_s += m.d_s;
    }
    if (n > 0) {
      ybar_h /= n;
      ybar_a /= n;
      dbar_s /= n;
    }
  }
};

class Sampler {
 public:
  Sampler(const SeasonData& season, const PriorSpec& spec, const SamplerConfig& cfg,
          int chain_id)
      : arr_(season),
        season_(season),
        spec_(spec),
        cfg_(cfg),
        chain_id_(chain_id),
        scaled_(spec.variant == PriorVariant::scaled_iw),
        rng_(Rng::derive_seed(cfg.seed, static_cast<std::uint64_t>(chain_id))) {
    st_ = initialize_chain(season, spec, cfg, rng_);
    build_coords();
    refresh_caches();
  }

  ChainTrace run() {
    ChainTrace trace;
    trace.meta.master_seed = cfg_.seed;
    trace.meta.chain_seed = Rng::derive_seed(cfg_.seed, static_cast<std::uint64_t>(chain_id_));
    trace.meta.chain_id = chain_id_;
    trace.meta.variant = spec_.variant;
    trace.meta.teams = season_.teams.names();
    trace.meta.covariate_means = season_.covariate_means;
    trace.meta.config_hash = sampler_config_hash(cfg_, spec_);
    trace.names = trace_column_names(spec_.variant, arr_.n_teams);
    trace.data.reserve((cfg_.n_iter - cfg_.burn_in + cfg_.thin - 1) / cfg_.thin);

    for (int iter = 0; iter < cfg_.n_iter; ++iter) {
      try {
        const bool adapting = iter < cfg_.burn_in;
        post_phase_ = !adapting;
        sweep();
        if (adapting && (iter + 1) % cfg_.adapt_window == 0) adapt();
        if (iter >= cfg_.burn_in && (iter - cfg_.burn_in) % cfg_.thin == 0) {
          trace.data.push_back(flatten_state(st_, spec_.variant));
        }
      } catch (const std::exception& e) {
        throw std::runtime_error("chain " + std::to_string(chain_id_) + " iteration " +
                                 std::to_string(iter) + ": " + e.what());
      }
    }
    for (std::size_t i = 0; i < coord_names_.size(); ++i) {
      trace.accept_rates[coord_names_[i]] =
          try_post_[i] > 0 ? static_cast<double>(acc_post_[i]) / try_post_[i] : 0.0;
    }
    return trace;
  }

 private:
  // --- coordinate bookkeeping ---
  void build_coords() {
    auto add = [&](const std::string& name, double step) {
      coord_names_.push_back(name);
      steps_.push_back(step);
    };
    add("mu", 0.1);
    add("lambda", 0.1);
    for (int t = 1; t <= arr_.n_teams; ++t) {
      for (int j = 0; j < 3; ++j) {
        add("alpha_star[" + std::to_string(t) + "][" + std::to_string(j) + "]", 0.1);
      }
    }
    for (int t = 1; t <= arr_.n_teams; ++t) {
      for (int j = 0; j < 3; ++j) {
        add("beta_star[" + std::to_string(t) + "][" + std::to_string(j) + "]", 0.1);
      }
    }
    if (scaled_) {
      for (int j = 0; j < 3; ++j) add("xi_alpha[" + std::to_string(j) + "]", 0.1);
      for (int j = 0; j < 3; ++j) add("xi_beta[" + std::to_string(j) + "]", 0.1);
    }
    // The logistic intercepts absorb slope moves (see move_gamma); slopes act
    // on a roughly 1/y scale.
    add("gamma[0]", 0.5);
    add("gamma[1]", 0.02);
    add("gamma[2]", 0.02);
    add("eta[0]", 0.5);
    add("eta[1]", 0.02);
    add("eta[2]", 0.02);
    add("eta[3]", 0.5);
    acc_window_.assign(coord_names_.size(), 0);
    try_window_.assign(coord_names_.size(), 0);
    acc_post_.assign(coord_names_.size(), 0);
    try_post_.assign(coord_names_.size(), 0);
  }

  void record(std::size_t coord, bool accepted) {
    ++try_window_[coord];
    if (accepted) ++acc_window_[coord];
    if (post_phase_) {
      ++try_post_[coord];
      if (accepted) ++acc_post_[coord];
    }
  }

  void adapt() {
    ++window_count_;
    const double gain = std::min(1.0, 3.0 / std::sqrt(static_cast<double>(window_count_)));
    for (std::size_t i = 0; i < steps_.size(); ++i) {
      if (try_window_[i] == 0) continue;
      const double rate = static_cast<double>(acc_window_[i]) / try_window_[i];
      steps_[i] = std::clamp(adapt_step_size(steps_[i], rate, cfg_.target_accept, gain),
                             1e-8, 1e3);
      acc_window_[i] = 0;
      try_window_[i] = 0;
    }
  }

  // --- cached quantities ---
  void refresh_caches() {
    aC_ = apply_sum_to_zero(effective_alpha_star(st_));
    bC_ = apply_sum_to_zero(effective_beta_star(st_));
    pois_ = pois_loglik(aC_, bC_, st_.mu, st_.lambda);
    sets_ = sets_loglik(st_.gamma);
    match_ = match_loglik(st_.eta);
    if (scaled_) refresh_lambda_caches();
  }

  void refresh_lambda_caches() {
    const auto& h = std::get<HyperScaledIW>(st_.hyper);
    Eigen::LLT<Eigen::Matrix3d> llt_a(h.lambda_alpha);
    Eigen::LLT<Eigen::Matrix3d> llt_b(h.lambda_beta);
    if (llt_a.info() != Eigen::Success || llt_b.info() != Eigen::Success) {
      throw std::runtime_error("Lambda lost positive definiteness");
    }
    lam_alpha_inv_ = llt_a.solve(Eigen::Matrix3d::Identity());
    lam_beta_inv_ = llt_b.solve(Eigen::Matrix3d::Identity());
  }

  double pois_loglik(const Eigen::MatrixXd& aC, const Eigen::MatrixXd& bC, double mu,
                     double lambda) const {
    // y * log(theta) - theta summed over both sides of every match; the
    // lgamma(y + 1) normalisation is constant in the parameters and cancels
    // from every ratio, so it is left out here (joint_log_posterior keeps it).
    double s = 0.0;
    for (int i = 0; i < arr_.n; ++i) {
      const int h = arr_.home[i], a = arr_.away[i];
      const double lh = mu + lambda + aC(h, 0) + aC(h, 1) * arr_.att_h[i] +
                        aC(h, 2) * arr_.ser_h[i] + bC(a, 0) + bC(a, 1) * arr_.def_a[i] +
                        bC(a, 2) * arr_.blo_a[i];
      const double la = mu + aC(a, 0) + aC(a, 1) * arr_.att_a[i] +
                        aC(a, 2) * arr_.ser_a[i] + bC(h, 0) + bC(h, 1) * arr_.def_h[i] +
                        bC(h, 2) * arr_.blo_h[i];
      if (lh > kMaxLogIntensity || la > kMaxLogIntensity) return -kInf;
      s += arr_.yh[i] * lh - std::exp(lh) + arr_.ya[i] * la - std::exp(la);
    }
    return s;
  }

  double sets_loglik(const Eigen::Vector3d& gamma) const {
    double s = 0.0;
    for (int i = 0; i < arr_.n; ++i) {
      const double g = gamma[0] + gamma[1] * arr_.yh[i] + gamma[2] * arr_.ya[i];
      s += arr_.ds[i] * g - softplus(g);
    }
    return s;
  }

  double match_loglik(const Eigen::Vector4d& eta) const {
    double s = 0.0;
    for (int i = 0; i < arr_.n; ++i) {
      const double g = eta[0] + eta[1] * arr_.yh[i] + eta[2] * arr_.ya[i] +
                       eta[3] * arr_.ds[i];
      s += arr_.dm[i] * g - softplus(g);
    }
    return s;
  }

  // --- moves ---
  void move_mu() {
    const std::size_t c = 0;
    const double cand = st_.mu + steps_[c] * rng_.normal();
    const double cand_pois = pois_loglik(aC_, bC_, cand, st_.lambda);
    const double tau0 = spec_.normal_fixed_precision;
    const bool ok = accept_move(cand_pois + normal_quad(cand, 0.0, tau0),
                                pois_ + normal_quad(st_.mu, 0.0, tau0), rng_);
    if (ok) {
      st_.mu = cand;
      pois_ = cand_pois;
    }
    record(c, ok);
  }

  void move_lambda() {
    const std::size_t c = 1;
    const double cand = st_.lambda + steps_[c] * rng_.normal();
    const double cand_pois = pois_loglik(aC_, bC_, st_.mu, cand);
    const double tau0 = spec_.normal_fixed_precision;
    const bool ok = accept_move(cand_pois + normal_quad(cand, 0.0, tau0),
                                pois_ + normal_quad(st_.lambda, 0.0, tau0), rng_);
    if (ok) {
      st_.lambda = cand;
      pois_ = cand_pois;
    }
    record(c, ok);
  }

  // One entry of a star matrix.  Because the effects are column-demeaned, the
  // move shifts the whole centered column by -scale*delta/K and the moved
  // team by an extra scale*delta.
  void move_star(bool alpha_side, int t, int j) {
    const std::size_t c = star_coord(alpha_side, t, j);
    Eigen::MatrixXd& star = alpha_side ? st_.alpha_star : st_.beta_star;
    Eigen::MatrixXd& centered = alpha_side ? aC_ : bC_;
    const double delta = steps_[c] * rng_.normal();
    const double cand = star(t, j) + delta;

    double scale = 1.0;
    if (scaled_) {
      const auto& h = std::get<HyperScaledIW>(st_.hyper);
      scale = alpha_side ? h.xi_alpha[j] : h.xi_beta[j];
    }
    Eigen::MatrixXd cand_centered = centered;
    cand_centered.col(j).array() -= scale * delta / arr_.n_teams;
    cand_centered(t, j) += scale * delta;
    const double cand_pois = alpha_side
                                 ? pois_loglik(cand_centered, bC_, st_.mu, st_.lambda)
                                 : pois_loglik(aC_, cand_centered, st_.mu, st_.lambda);

    double prior_cur, prior_cand;
    if (!scaled_) {
      const auto& h = std::get<HyperBasic>(st_.hyper);
      const double mean = alpha_side ? h.mu_alpha[j] : h.mu_beta[j];
      const double tau = alpha_side ? h.tau_alpha[j] : h.tau_beta[j];
      prior_cur = normal_quad(star(t, j), mean, tau);
      prior_cand = normal_quad(cand, mean, tau);
    } else {
      const auto& h = std::get<HyperScaledIW>(st_.hyper);
      const Eigen::Vector3d& mean = alpha_side ? h.mu_raw_alpha : h.mu_raw_beta;
      const Eigen::Matrix3d& prec = alpha_side ? lam_alpha_inv_ : lam_beta_inv_;
      Eigen::Vector3d row = star.row(t).transpose();
      const Eigen::Vector3d r_cur = row - mean;
      prior_cur = -0.5 * r_cur.dot(prec * r_cur);
      row[j] = cand;
      const Eigen::Vector3d r_cand = row - mean;
      prior_cand = -0.5 * r_cand.dot(prec * r_cand);
    }

    const bool ok = accept_move(cand_pois + prior_cand, pois_ + prior_cur, rng_);
    if (ok) {
      star(t, j) = cand;
      centered.swap(cand_centered);
      pois_ = cand_pois;
    }
    record(c, ok);
  }

  void move_xi(bool alpha_side, int j) {
    const std::size_t c = xi_coord(alpha_side, j);
    auto& h = std::get<HyperScaledIW>(st_.hyper);
    Eigen::Vector3d& xi = alpha_side ? h.xi_alpha : h.xi_beta;
    const double cand = xi[j] + steps_[c] * rng_.normal();

    double prior_cur = 0.0, prior_cand = 0.0;
    if (spec_.xi_prior == XiPrior::uniform) {
      if (cand <= 0.0 || cand >= spec_.xi_upper) {
        record(c, false);
        return;
      }
    } else {
      const double prec = 1.0 / (spec_.xi_normal_sd * spec_.xi_normal_sd);
      prior_cur = normal_quad(xi[j], 0.0, prec);
      prior_cand = normal_quad(cand, 0.0, prec);
    }

    const Eigen::MatrixXd& star = alpha_side ? st_.alpha_star : st_.beta_star;
    Eigen::MatrixXd& centered = alpha_side ? aC_ : bC_;
    Eigen::MatrixXd cand_centered = centered;
    Eigen::VectorXd col = star.col(j);
    col.array() -= col.mean();
    cand_centered.col(j) = cand * col;
    const double cand_pois = alpha_side
                                 ? pois_loglik(cand_centered, bC_, st_.mu, st_.lambda)
                                 : pois_loglik(aC_, cand_centered, st_.mu, st_.lambda);

    const bool ok = accept_move(cand_pois + prior_cand, pois_ + prior_cur, rng_);
    if (ok) {
      xi[j] = cand;
      centered.swap(cand_centered);
      pois_ = cand_pois;
    }
    record(c, ok);
  }

  // Logistic-regression coordinates.  Slope proposals shift the intercept by
  // -delta * covariate-mean so the proposal moves along the decorrelated
  // direction; the shear has unit Jacobian, so the usual accept ratio stands.
  void move_gamma(int s) {
    const std::size_t c = gamma_coord(s);
    Eigen::Vector3d cand = st_.gamma;
    const double delta = steps_[c] * rng_.normal();
    cand[s] += delta;
    if (s == 1) cand[0] -= delta * arr_.ybar_h;
    if (s == 2) cand[0] -= delta * arr_.ybar_a;

    const double cand_sets = sets_loglik(cand);
    double prior_cur = 0.0, prior_cand = 0.0;
    for (int i = 0; i < 3; ++i) {
      prior_cur += normal_quad(st_.gamma[i], 0.0, spec_.logistic_precision);
      prior_cand += normal_quad(cand[i], 0.0, spec_.logistic_precision);
    }
    const bool ok = accept_move(cand_sets + prior_cand, sets_ + prior_cur, rng_);
    if (ok) {
      st_.gamma = cand;
      sets_ = cand_sets;
    }
    record(c, ok);
  }

  void move_eta(int k) {
    const std::size_t c = eta_coord(k);
    Eigen::Vector4d cand = st_.eta;
    const double delta = steps_[c] * rng_.normal();
    cand[k] += delta;
    if (k == 1) cand[0] -= delta * arr_.ybar_h;
    if (k == 2) cand[0] -= delta * arr_.ybar_a;
    if (k == 3) cand[0] -= delta * arr_.dbar_s;

    const double cand_match = match_loglik(cand);
    double prior_cur = 0.0, prior_cand = 0.0;
    for (int i = 0; i < 4; ++i) {
      prior_cur += normal_quad(st_.eta[i], 0.0, spec_.logistic_precision);
      prior_cand += normal_quad(cand[i], 0.0, spec_.logistic_precision);
    }
    const bool ok = accept_move(cand_match + prior_cand, match_ + prior_cur, rng_);
    if (ok) {
      st_.eta = cand;
      match_ = cand_match;
    }
    record(c, ok);
  }

  void gibbs_hypers() {
    const double tau0 = spec_.normal_fixed_precision;
    if (!scaled_) {
      auto& h = std::get<HyperBasic>(st_.hyper);
      for (int j = 0; j < 3; ++j) {
        const Eigen::VectorXd col_a = st_.alpha_star.col(j);
        h.mu_alpha[j] = gibbs_update_hyper_mean(col_a, h.tau_alpha[j], tau0, rng_);
        h.tau_alpha[j] = gibbs_update_hyper_precision(col_a, h.mu_alpha[j],
                                                      spec_.gamma_shape, spec_.gamma_rate,
                                                      rng_);
        const Eigen::VectorXd col_b = st_.beta_star.col(j);
        h.mu_beta[j] = gibbs_update_hyper_mean(col_b, h.tau_beta[j], tau0, rng_);
        h.tau_beta[j] = gibbs_update_hyper_precision(col_b, h.mu_beta[j],
                                                     spec_.gamma_shape, spec_.gamma_rate,
                                                     rng_);
      }
      return;
    }
    auto& h = std::get<HyperScaledIW>(st_.hyper);
    h.mu_raw_alpha = gibbs_update_mvn_mean(st_.alpha_star, h.lambda_alpha, tau0, rng_);
    Eigen::MatrixXd M(arr_.n_teams, 3);
    M.rowwise() = h.mu_raw_alpha.transpose();
    h.lambda_alpha = gibbs_update_wishart(st_.alpha_star, M, spec_.iw_nu, spec_.iw_scale, rng_);
    h.mu_raw_beta = gibbs_update_mvn_mean(st_.beta_star, h.lambda_beta, tau0, rng_);
    M.rowwise() = h.mu_raw_beta.transpose();
    h.lambda_beta = gibbs_update_wishart(st_.beta_star, M, spec_.iw_nu, spec_.iw_scale, rng_);
    refresh_lambda_caches();
  }

  void sweep() {
    // Rebuild the centered matrices and cached log likelihood parts from the
    // state so incremental updates cannot drift over a long run.
    refresh_caches();
    move_mu();
    move_lambda();
    for (int t = 0; t < arr_.n_teams; ++t) {
      for (int j = 0; j < 3; ++j) move_star(true, t, j);
    }
    for (int t = 0; t < arr_.n_teams; ++t) {
      for (int j = 0; j < 3; ++j) move_star(false, t, j);
    }
    if (scaled_) {
      for (int j = 0; j < 3; ++j) move_xi(true, j);
      for (int j = 0; j < 3; ++j) move_xi(false, j);
    }
    for (int s = 0; s < 3; ++s) move_gamma(s);
    for (int k = 0; k < 4; ++k) move_eta(k);
    gibbs_hypers();
  }

  // Coordinate index helpers (layout fixed by build_coords).
  std::size_t star_coord(bool alpha_side, int t, int j) const {
    return 2 + (alpha_side ? 0 : 3 * arr_.n_teams) + 3 * t + j;
  }
  std::size_t xi_coord(bool alpha_side, int j) const {
    return 2 + 6 * arr_.n_teams + (alpha_side ? 0 : 3) + j;
  }
  std::size_t gamma_coord(int s) const {
    return 2 + 6 * arr_.n_teams + (scaled_ ? 6 : 0) + s;
  }
  std::size_t eta_coord(int k) const { return gamma_coord(3) + k; }

  SeasonArrays arr_;
  const SeasonData& season_;
  const PriorSpec& spec_;
  const SamplerConfig& cfg_;
  int chain_id_;
  bool scaled_;
  Rng rng_;
  ParameterState st_;

  Eigen::MatrixXd aC_, bC_;  // centered, xi-scaled effect matrices
  double pois_ = 0.0, sets_ = 0.0, match_ = 0.0;
  Eigen::Matrix3d lam_alpha_inv_ = Eigen::Matrix3d::Identity();
  Eigen::Matrix3d lam_beta_inv_ = Eigen::Matrix3d::Identity();

  std::vector<std::string> coord_names_;
  std::vector<double> steps_;
  std::vector<int> acc_window_, try_window_, acc_post_, try_post_;
  int window_count_ = 0;
  bool post_phase_ = false;
};

}  // namespace

std::string sampler_config_hash(const SamplerConfig& config, const PriorSpec& spec) {
  std::ostringstream canon;
  canon << config.n_chains << '|' << config.n_iter << '|' << config.burn_in << '|'
        << config.thin << '|' << config.seed << '|' << config.adapt_window << '|'
        << config.target_accept << '|' << config.init_jitter << '|'
        << prior_spec_to_json(spec);
  const std::string s = canon.str();
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void SamplerConfig::validate() const {
  if (n_chains < 2) throw std::invalid_argument("need at least 2 chains");
  if (n_iter <= 0) throw std::invalid_argument("n_iter must be positive");
  if (burn_in < 0 || burn_in >= n_iter) {
    throw std::invalid_argument("burn_in must lie in [0, n_iter)");
  }
  if (thin < 1) throw std::invalid_argument("thin must be >= 1");
  if (adapt_window < 1) throw std::invalid_argument("adapt_window must be >= 1");
  if (!(target_accept > 0.0 && target_accept < 1.0)) {
    throw std::invalid_argument("target_accept must lie in (0, 1)");
  }
  if (init_jitter < 0.0) throw std::invalid_argument("init_jitter must be >= 0");
}

std::vector<std::string> trace_column_names(PriorVariant variant, int n_teams) {
  std::vector<std::string> names{"mu", "lambda"};
  auto matrix_block = [&](const std::string& base) {
    for (int t = 1; t <= n_teams; ++t) {
      for (int j = 0; j < 3; ++j) {
        names.push_back(base + "[" + std::to_string(t) + "][" + std::to_string(j) + "]");
      }
    }
  };
  auto vec3_block = [&](const std::string& base) {
    for (int j = 0; j < 3; ++j) names.push_back(base + "[" + std::to_string(j) + "]");
  };
  matrix_block("alpha_star");
  matrix_block("beta_star");
  if (variant == PriorVariant::basic) {
    vec3_block("mu_alpha");
    vec3_block("tau_alpha");
    vec3_block("mu_beta");
    vec3_block("tau_beta");
  } else {
    vec3_block("mu_raw_alpha");
    vec3_block("mu_raw_beta");
    vec3_block("xi_alpha");
    vec3_block("xi_beta");
    auto spd_block = [&](const std::string& base) {
      for (int j = 0; j < 3; ++j) {
        for (int l = j; l < 3; ++l) {
          names.push_back(base + "[" + std::to_string(j) + "][" + std::to_string(l) + "]");
        }
      }
    };
    spd_block("lambda_alpha");
    spd_block("lambda_beta");
  }
  vec3_block("gamma");
  for (int k = 0; k < 4; ++k) names.push_back("eta[" + std::to_string(k) + "]");
  matrix_block("alpha");
  matrix_block("beta");
  if (variant == PriorVariant::scaled_iw) {
    vec3_block("sigma2_alpha");
    vec3_block("sigma2_beta");
    auto rho_block = [&](const std::string& base) {
      const int pairs[3][2] = {{0, 1}, {0, 2}, {1, 2}};
      for (const auto& p : pairs) {
        names.push_back(base + "[" + std::to_string(p[0]) + "][" + std::to_string(p[1]) + "]");
      }
    };
    rho_block("rho_alpha");
    rho_block("rho_beta");
  }
  return names;
}

std::vector<double> flatten_state(const ParameterState& state, PriorVariant variant) {
  std::vector<double> row;
  row.push_back(state.mu);
  row.push_back(state.lambda);
  auto push_matrix = [&](const Eigen::MatrixXd& m) {
    for (Eigen::Index t = 0; t < m.rows(); ++t) {
      for (Eigen::Index j = 0; j < 3; ++j) row.push_back(m(t, j));
    }
  };
  push_matrix(state.alpha_star);
  push_matrix(state.beta_star);
  auto push_vec3 = [&](const Eigen::Vector3d& v) {
    for (int j = 0; j < 3; ++j) row.push_back(v[j]);
  };
  if (variant == PriorVariant::basic) {
    const auto& h = std::get<HyperBasic>(state.hyper);
    push_vec3(h.mu_alpha);
    push_vec3(h.tau_alpha);
    push_vec3(h.mu_beta);
    push_vec3(h.tau_beta);
  } else {
    const auto& h = std::get<HyperScaledIW>(state.hyper);
    push_vec3(h.mu_raw_alpha);
    push_vec3(h.mu_raw_beta);
    push_vec3(h.xi_alpha);
    push_vec3(h.xi_beta);
    auto push_spd = [&](const Eigen::Matrix3d& m) {
      for (int j = 0; j < 3; ++j) {
        for (int l = j; l < 3; ++l) row.push_back(m(j, l));
      }
    };
    push_spd(h.lambda_alpha);
    push_spd(h.lambda_beta);
  }
  push_vec3(state.gamma);
  for (int k = 0; k < 4; ++k) row.push_back(state.eta[k]);

  const CenteredEffects effects = centered_effects(state);
  push_matrix(effects.alpha);
  push_matrix(effects.beta);

  if (variant == PriorVariant::scaled_iw) {
    const auto& h = std::get<HyperScaledIW>(state.hyper);
    const CovarianceSummary ca = reconstruct_covariance(h.xi_alpha, h.lambda_alpha);
    const CovarianceSummary cb = reconstruct_covariance(h.xi_beta, h.lambda_beta);
    push_vec3(ca.sigma2);
    push_vec3(cb.sigma2);
    push_vec3(ca.rho);
    push_vec3(cb.rho);
  }
  return row;
}

std::vector<double> ChainTrace::column(const std::string& name) const {
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw std::out_of_range("no trace column named '" + name + "'");
  const std::size_t idx = static_cast<std::size_t>(it - names.begin());
  std::vector<double> col;
  col.reserve(data.size());
  for (const auto& row : data) col.push_back(row[idx]);
  return col;
}

MetropolisResult metropolis_step(double current, double step_size,
                                 const std::function<double(double)>& log_target,
                                 Rng& rng) {
  const double cand = current + step_size * rng.normal();
  if (accept_move(log_target(cand), log_target(current), rng)) return {cand, true};
  return {current, false};
}

double adapt_step_size(double current, double accept_rate, double target, double gain) {
  return current * std::exp(gain * (accept_rate - target));
}

ParameterState initialize_chain(const SeasonData& data, const PriorSpec& spec,
                                const SamplerConfig& config, Rng& rng) {
  const int K = data.teams.size();
  if (K < 2) throw std::invalid_argument("need at least two teams");
  double total = 0.0;
  for (const auto& m : data.matches) total += static_cast<double>(m.y_h + m.y_a);
  const double mean_points =
      data.matches.empty() ? 1.0 : total / (2.0 * static_cast<double>(data.matches.size()));

  const double j = config.init_jitter;
  ParameterState st;
  st.mu = std::log(std::max(mean_points, 1e-3)) + j * rng.normal();
  st.lambda = j * rng.normal();
  st.alpha_star.setZero(K, 3);
  st.beta_star.setZero(K, 3);
  for (int t = 0; t < K; ++t) {
    for (int col = 0; col < 3; ++col) st.alpha_star(t, col) = j * rng.normal();
  }
  for (int t = 0; t < K; ++t) {
    for (int col = 0; col < 3; ++col) st.beta_star(t, col) = j * rng.normal();
  }
  // Slopes multiply point totals of order 100, so their spread stays 1/100th
  // of the intercepts'.
  st.gamma[0] = j * rng.normal();
  st.gamma[1] = 0.01 * j * rng.normal();
  st.gamma[2] = 0.01 * j * rng.normal();
  st.eta[0] = j * rng.normal();
  st.eta[1] = 0.01 * j * rng.normal();
  st.eta[2] = 0.01 * j * rng.normal();
  st.eta[3] = j * rng.normal();

  if (spec.variant == PriorVariant::basic) {
    HyperBasic h;
    for (int col = 0; col < 3; ++col) {
      h.mu_alpha[col] = j * rng.normal();
      h.mu_beta[col] = j * rng.normal();
    }
    st.hyper = h;
  } else {
    HyperScaledIW h;
    for (int col = 0; col < 3; ++col) {
      h.mu_raw_alpha[col] = j * rng.normal();
      h.mu_raw_beta[col] = j * rng.normal();
    }
    st.hyper = h;
  }
  return st;
}

ChainTrace run_chain(const SeasonData& data, const PriorSpec& spec,
                     const SamplerConfig& config, int chain_id) {
  config.validate();
  spec.validate();
  Sampler sampler(data, spec, config, chain_id);
  return sampler.run();
}

std::vector<ChainTrace> run_all_chains(const SeasonData& data, const PriorSpec& spec,
                                       const SamplerConfig& config, bool parallel) {
  config.validate();
  spec.validate();
  std::vector<ChainTrace> traces(config.n_chains);
  std::vector<std::exception_ptr> errors(config.n_chains);
  auto work = [&](int c) {
    try {
      traces[c] = run_chain(data, spec, config, c);
    } catch (...) {
      errors[c] = std::current_exception();
    }
  };
  if (parallel) {
    std::vector<std::thread> threads;
    threads.reserve(config.n_chains);
    for (int c = 0; c < config.n_chains; ++c) threads.emplace_back(work, c);
    for (auto& t : threads) t.join();
  } else {
    for (int c = 0; c < config.n_chains; ++c) work(c);
  }
  for (int c = 0; c < config.n_chains; ++c) {
    if (errors[c]) std::rethrow_exception(errors[c]);
  }
  return traces;
}

}  // namespace volleymc
