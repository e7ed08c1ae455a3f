#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "support/stats.hpp"
#include "support/synthetic.hpp"
#include "volleymc/mcmc.hpp"
#include "volleymc/priors.hpp"

using namespace volleymc;
using testsupport::ks_test_p;

namespace {

SeasonData small_season(std::uint64_t seed = 11, int n_teams = 4) {
  Rng rng(seed);
  const testsupport::TrueParams truth = testsupport::draw_true_params(n_teams, rng);
  return testsupport::generate_season(truth, n_teams, rng);
}

SamplerConfig tiny_config() {
  SamplerConfig c;
  c.n_chains = 2;
  c.n_iter = 100;
  c.burn_in = 50;
  c.thin = 5;
  c.seed = 77;
  return c;
}

}  // namespace

TEST_SUITE("mcmc") {
  TEST_CASE("config validation rejects impossible settings") {
    SamplerConfig c = tiny_config();
    CHECK_NOTHROW(c.validate());
    c.n_chains = 1;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = tiny_config();
    c.burn_in = c.n_iter;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = tiny_config();
    c.thin = 0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = tiny_config();
    c.target_accept = 1.5;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = tiny_config();
    c.init_jitter = -0.1;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  }

  TEST_CASE("retention arithmetic: (iters - burn_in) sweeps kept every thin-th") {
    const SeasonData season = small_season();
    const PriorSpec spec;
    const SamplerConfig c = tiny_config();  // 100 sweeps, burn 50, thin 5
    const ChainTrace trace = run_chain(season, spec, c, 0);
    CHECK(trace.n_samples() == 10);
    REQUIRE(!trace.data.empty());
    CHECK(trace.data[0].size() == trace.names.size());
    for (const auto& row : trace.data) {
      for (double v : row) REQUIRE(std::isfinite(v));
    }
  }

  TEST_CASE("same seed gives bit-identical traces; different seeds differ") {
    const SeasonData season = small_season();
    const PriorSpec spec;
    const SamplerConfig c = tiny_config();
    const ChainTrace a = run_chain(season, spec, c, 0);
    const ChainTrace b = run_chain(season, spec, c, 0);
    REQUIRE(a.data.size() == b.data.size());
    for (std::size_t i = 0; i < a.data.size(); ++i) {
      CHECK(a.data[i] == b.data[i]);  // exact equality, not approximate
    }
    const ChainTrace other = run_chain(season, spec, c, 1);
    CHECK(a.data != other.data);
    CHECK(a.meta.chain_seed == Rng::derive_seed(c.seed, 0));
    CHECK(other.meta.chain_seed == Rng::derive_seed(c.seed, 1));
  }

  TEST_CASE("parallel and sequential runs produce identical chains") {
    const SeasonData season = small_season();
    const PriorSpec spec;
    const SamplerConfig c = tiny_config();
    const std::vector<ChainTrace> par = run_all_chains(season, spec, c, true);
    const std::vector<ChainTrace> seq = run_all_chains(season, spec, c, false);
    REQUIRE(par.size() == 2);
    REQUIRE(seq.size() == 2);
    for (int i = 0; i < 2; ++i) {
      CHECK(par[i].meta.chain_id == i);
      CHECK(par[i].data == seq[i].data);
      CHECK(par[i].names == seq[i].names);
    }
  }

  TEST_CASE("initial overdispersion comes from init_jitter alone") {
    const SeasonData season = small_season();
    const PriorSpec spec;
    SamplerConfig c = tiny_config();

    c.init_jitter = 0.0;
    Rng r1(100), r2(200);
    const ParameterState s1 = initialize_chain(season, spec, c, r1);
    const ParameterState s2 = initialize_chain(season, spec, c, r2);
    CHECK(s1.mu == s2.mu);
    CHECK(s1.lambda == s2.lambda);
    CHECK((s1.alpha_star.array() == s2.alpha_star.array()).all());

    c.init_jitter = 0.2;
    Rng r3(100), r4(200);
    const ParameterState s3 = initialize_chain(season, spec, c, r3);
    const ParameterState s4 = initialize_chain(season, spec, c, r4);
    CHECK(s3.mu != s4.mu);

    // mu starts near the log mean score, the natural scale of the data.
    double total = 0.0;
    for (const auto& m : season.matches) total += static_cast<double>(m.y_h + m.y_a);
    const double log_mean = std::log(total / (2.0 * static_cast<double>(season.matches.size())));
    CHECK(std::abs(s1.mu - log_mean) < 1e-12);
    CHECK(std::abs(s3.mu - log_mean) < 5.0 * 0.2);
  }

  TEST_CASE("two-team minimum for the hierarchy") {
    SeasonData season = small_season();
    season.teams = TeamIndex({"Solo"});
    const PriorSpec spec;
    const SamplerConfig c = tiny_config();
    Rng rng(1);
    CHECK_THROWS_AS(initialize_chain(season, spec, c, rng), std::invalid_argument);
  }

  TEST_CASE("metropolis transitions preserve a standard normal target") {
    Rng rng(3571);
    auto log_target = [](double x) { return -0.5 * x * x; };
    double x = 0.0;
    const double step = 2.4;  // near-optimal for a 1-d normal
    int accepted = 0;
    const int n_steps = 200000, keep_every = 20;
    std::vector<double> kept;
    kept.reserve(n_steps / keep_every);
    for (int i = 0; i < n_steps; ++i) {
      const MetropolisResult r = metropolis_step(x, step, log_target, rng);
      x = r.value;
      accepted += r.accepted ? 1 : 0;
      if (i % keep_every == keep_every - 1) kept.push_back(x);
    }
    const double rate = static_cast<double>(accepted) / n_steps;
    CHECK(rate > 0.3);
    CHECK(rate < 0.6);
    const double pv =
        ks_test_p(kept, [](double v) { return 0.5 * std::erfc(-v / std::sqrt(2.0)); });
    CHECK(pv > 0.001);
  }

  TEST_CASE("metropolis handles -inf targets by staying put") {
    Rng rng(9);
    auto log_target = [](double x) {
      return x > 0.0 ? 0.0 : -std::numeric_limits<double>::infinity();
    };
    double x = 0.5;
    for (int i = 0; i < 200; ++i) {
      x = metropolis_step(x, 3.0, log_target, rng).value;
      REQUIRE(x > 0.0);
    }
  }

  TEST_CASE("step-size adaptation is multiplicative toward the target rate") {
    CHECK(adapt_step_size(0.1, 0.6, 0.44, 1.0) == doctest::Approx(0.1 * std::exp(0.16)));
    CHECK(adapt_step_size(0.1, 0.2, 0.44, 1.0) == doctest::Approx(0.1 * std::exp(-0.24)));
    CHECK(adapt_step_size(0.1, 0.44, 0.44, 1.0) == doctest::Approx(0.1));
    CHECK(adapt_step_size(0.1, 0.6, 0.44, 0.5) == doctest::Approx(0.1 * std::exp(0.08)));
  }

  TEST_CASE("column names are unique and cover both hierarchies") {
    for (const PriorVariant v : {PriorVariant::basic, PriorVariant::scaled_iw}) {
      const std::vector<std::string> names = trace_column_names(v, 5);
      const std::set<std::string> unique(names.begin(), names.end());
      CHECK(unique.size() == names.size());
      auto has = [&](const std::string& n) { return unique.count(n) == 1; };
      CHECK(has("mu"));
      CHECK(has("lambda"));
      CHECK(has("alpha_star[1][0]"));
      CHECK(has("alpha_star[5][2]"));
      CHECK(has("alpha[3][1]"));
      CHECK(has("beta[5][2]"));
      CHECK(has("gamma[2]"));
      CHECK(has("eta[3]"));
      if (v == PriorVariant::basic) {
        CHECK(has("mu_alpha[0]"));
        CHECK(has("tau_beta[2]"));
        CHECK_FALSE(has("xi_alpha[0]"));
      } else {
        CHECK(has("mu_raw_alpha[0]"));
        CHECK(has("xi_beta[2]"));
        CHECK(has("lambda_alpha[0][1]"));
        CHECK(has("sigma2_alpha[0]"));
        CHECK(has("rho_beta[1][2]"));
        CHECK_FALSE(has("tau_alpha[0]"));
      }
    }
  }

  TEST_CASE("flatten_state lines up with the column names") {
    const SeasonData season = small_season();
    const PriorSpec spec;
    const SamplerConfig c = tiny_config();
    Rng rng(8);
    const ParameterState s = initialize_chain(season, spec, c, rng);
    const std::vector<double> flat = flatten_state(s, spec.variant);
    const std::vector<std::string> names =
        trace_column_names(spec.variant, season.teams.size());
    REQUIRE(flat.size() == names.size());
    // Spot-check that named cells carry the state's values.
    const auto idx = [&](const std::string& n) {
      return static_cast<std::size_t>(
          std::find(names.begin(), names.end(), n) - names.begin());
    };
    CHECK(flat[idx("mu")] == s.mu);
    CHECK(flat[idx("lambda")] == s.lambda);
    CHECK(flat[idx("alpha_star[2][1]")] == s.alpha_star(1, 1));
    CHECK(flat[idx("gamma[1]")] == s.gamma[1]);
    CHECK(flat[idx("eta[3]")] == s.eta[3]);
  }

  TEST_CASE("traces carry metadata and post-burn-in acceptance rates") {
    const SeasonData season = small_season();
    const PriorSpec spec;
    SamplerConfig c = tiny_config();
    c.n_iter = 400;
    c.burn_in = 200;
    c.thin = 1;
    const ChainTrace trace = run_chain(season, spec, c, 0);
    CHECK(trace.meta.master_seed == c.seed);
    CHECK(trace.meta.variant == PriorVariant::basic);
    CHECK(trace.meta.teams == season.teams.names());
    CHECK(trace.meta.config_hash == sampler_config_hash(c, spec));
    REQUIRE(!trace.accept_rates.empty());
    CHECK(trace.accept_rates.count("mu") == 1);
    CHECK(trace.accept_rates.count("lambda") == 1);
    CHECK(trace.accept_rates.count("gamma[0]") == 1);
    for (const auto& [name, rate] : trace.accept_rates) {
      CAPTURE(name);
      CHECK(rate >= 0.0);
      CHECK(rate <= 1.0);
    }
    CHECK_THROWS_AS(trace.column("nonexistent"), std::out_of_range);
    CHECK(trace.column("mu").size() == trace.n_samples());
  }

  TEST_CASE("config hash separates configurations but not runs") {
    const PriorSpec spec;
    const SamplerConfig a = tiny_config();
    SamplerConfig b = tiny_config();
    CHECK(sampler_config_hash(a, spec) == sampler_config_hash(b, spec));
    b.seed = 78;
    CHECK(sampler_config_hash(a, spec) != sampler_config_hash(b, spec));
    PriorSpec other;
    other.gamma_shape = 0.02;
    CHECK(sampler_config_hash(a, spec) != sampler_config_hash(a, other));
    PriorSpec siw;
    siw.variant = PriorVariant::scaled_iw;
    CHECK(sampler_config_hash(a, spec) != sampler_config_hash(a, siw));
  }

  TEST_CASE("the scaled hierarchy runs end to end and keeps xi inside its support") {
    const SeasonData season = small_season();
    PriorSpec spec;
    spec.variant = PriorVariant::scaled_iw;
    SamplerConfig c = tiny_config();
    c.n_iter = 200;
    c.burn_in = 100;
    c.thin = 2;
    const ChainTrace trace = run_chain(season, spec, c, 0);
    CHECK(trace.n_samples() == 50);
    for (const char* name : {"xi_alpha[0]", "xi_alpha[1]", "xi_alpha[2]", "xi_beta[0]",
                             "xi_beta[1]", "xi_beta[2]"}) {
      for (double v : trace.column(name)) {
        REQUIRE(v > 0.0);
        REQUIRE(v < spec.xi_upper);
      }
    }
    // sigma2 columns reconstruct xi^2 * Lambda_jj sample by sample.
    const auto sigma2 = trace.column("sigma2_alpha[1]");
    const auto xi = trace.column("xi_alpha[1]");
    const auto lam = trace.column("lambda_alpha[1][1]");
    for (std::size_t i = 0; i < sigma2.size(); ++i) {
      CHECK(sigma2[i] == doctest::Approx(xi[i] * xi[i] * lam[i]).epsilon(1e-12));
    }
  }

  TEST_CASE("centered effect columns are the centered scaled stars") {
    const SeasonData season = small_season();
    const PriorSpec spec;
    const SamplerConfig c = tiny_config();
    const ChainTrace trace = run_chain(season, spec, c, 0);
    const int K = season.teams.size();
    for (int j = 0; j < 3; ++j) {
      std::vector<std::vector<double>> cols;
      for (int t = 1; t <= K; ++t) {
        cols.push_back(trace.column("alpha[" + std::to_string(t) + "][" + std::to_string(j) + "]"));
      }
      for (std::size_t i = 0; i < trace.n_samples(); ++i) {
        double sum = 0.0;
        for (const auto& col : cols) sum += col[i];
        CHECK(std::abs(sum) < 1e-9);  // sum-to-zero at every retained draw
      }
    }
  }
}
