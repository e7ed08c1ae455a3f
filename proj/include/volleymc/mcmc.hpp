#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "volleymc/model_core.hpp"
#include "volleymc/priors.hpp"
#include "volleymc/rng.hpp"

namespace volleymc {

struct SamplerConfig {
  int n_chains = 2;
  int n_iter = 20000;   // sweeps per chain
  int burn_in = 10000;  // discarded sweeps (adaptation happens here only)
  int thin = 1;
  std::uint64_t seed = 1;
  int adapt_window = 50;        // sweeps between step-size updates
  double target_accept = 0.44;  // scalar random-walk optimum
  double init_jitter = 0.1;     // sd of the initial overdispersion

  // Throws std::invalid_argument on bad combinations (burn_in >= n_iter,
  // fewer than 2 chains, nonpositive thin, ...).
  void validate() const;
};

// Deterministic hex digest of the sampler configuration and prior, stamped
// into trace metadata and run manifests so outputs can be matched to the
// exact settings that produced them.
std::string sampler_config_hash(const SamplerConfig& config, const PriorSpec& spec);

// Column naming for flattened states.  Teams are indexed by code (1..K),
// regression coefficients by their position (gamma[0..2], eta[0..3]).
// Derived columns (centered effects alpha[k][j], beta[k][j]; covariance
// summaries sigma2_*, rho_*) follow the sampled ones.
std::vector<std::string> trace_column_names(PriorVariant variant, int n_teams);

// Flattens a state in trace_column_names order.
std::vector<double> flatten_state(const ParameterState& state, PriorVariant variant);

struct TraceMetadata {
  std::uint64_t master_seed = 0;
  std::uint64_t chain_seed = 0;
  int chain_id = 0;
  PriorVariant variant = PriorVariant::basic;
  std::vector<std::string> teams;
  std::array<double, 8> covariate_means{};
  std::string config_hash;
};

struct ChainTrace {
  TraceMetadata meta;
  std::vector<std::string> names;
  // Row-major retained samples: data[i] is one flattened draw.
  std::vector<std::vector<double>> data;
  // Post-burn-in Metropolis acceptance rate per moved coordinate.
  std::map<std::string, double> accept_rates;

  std::size_t n_samples() const { return data.size(); }
  // Column by name; throws std::out_of_range for unknown names.
  std::vector<double> column(const std::string& name) const;
};

// One scalar random-walk Metropolis step against an arbitrary log target.
struct MetropolisResult {
  double value = 0.0;
  bool accepted = false;
};
MetropolisResult metropolis_step(double current, double step_size,
                                 const std::function<double(double)>& log_target,
                                 Rng& rng);

// Multiplicative Robbins-Monro step-size update: scale by
// exp(gain * (rate - target)), which leaves the size fixed exactly at the
// target rate, grows it when acceptance runs hot and shrinks it when cold.
double adapt_step_size(double current, double accept_rate, double target, double gain);

// Overdispersed start: mu at log(mean of all observed point totals) plus
// jitter, lambda/stars/gamma/eta/hyper means jittered around zero, precisions
// at 1, Lambda at identity, xi at 1.
ParameterState initialize_chain(const SeasonData& data, const PriorSpec& spec,
                                const SamplerConfig& config, Rng& rng);

// Runs one chain: every scalar parameter moves by adaptive random-walk
// Metropolis; hyper means, hyper precisions (basic) and the Lambda matrices
// (scaled inverse-Wishart) are drawn from their conjugate conditionals.
// Step sizes adapt during burn-in only.  Numeric failures are rethrown with
// the chain id and iteration attached.
ChainTrace run_chain(const SeasonData& data, const PriorSpec& spec,
                     const SamplerConfig& config, int chain_id);

// All chains, each from Rng::derive_seed(config.seed, chain_id); runs them
// concurrently when `parallel` (identical output either way).  A chain
// failure aborts the whole run with the chain id in the message.
std::vector<ChainTrace> run_all_chains(const SeasonData& data, const PriorSpec& spec,
                                       const SamplerConfig& config,
                                       bool parallel = true);

}  // namespace volleymc
