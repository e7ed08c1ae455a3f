#pragma once

#include <string>
#include <vector>

#include "volleymc/mcmc.hpp"

namespace volleymc {

// Split-chain potential scale reduction: each chain is halved, then
// R = sqrt(((n-1)/n * W + B/n) / W) over the resulting sequences.  Requires
// at least 2 chains of equal length >= 4; throws std::domain_error when the
// within-sequence variance degenerates to zero.
double potential_scale_reduction(const std::vector<std::vector<double>>& chains);

// Multi-chain effective sample size: N_total / (1 + 2 sum of autocorrelations)
// with Geyer's initial monotone positive-pair truncation.  Antithetic chains
// can push the raw estimate above N_total; the result is capped there.
// Same preconditions and degenerate-trace error as above.
double effective_sample_size(const std::vector<std::vector<double>>& chains);

// Type-7 (linear interpolation) quantile of a sample; p in [0, 1].
double quantile_type7(std::vector<double> values, double p);

struct ParameterSummary {
  std::string name;
  double mean = 0.0;
  double sd = 0.0;
  double q025 = 0.0;
  double median = 0.0;
  double q975 = 0.0;
  double r_hat = 0.0;  // NaN when the trace is degenerate
  double ess = 0.0;    // NaN when the trace is degenerate
};

// Selector groups understood by summarize():
//   "default"   -> attack + defence intercept effects, home, constant
//   "attack", "defence", "home", "constant", "gamma", "eta", "hyper",
//   "covariance" (scaled inverse-Wishart sigma2/rho columns), "all",
//   or any exact trace column name.
// Group rows get reader-facing names (attack[TeamName], home, constant);
// exact-name selections keep the raw column name.  Unknown selectors throw
// std::invalid_argument.
std::vector<ParameterSummary> summarize(const std::vector<ChainTrace>& traces,
                                        const std::string& selector = "default");

// The convergence-monitored set: the default table plus the logistic
// regressions - every identified quantity the run reports.  (Star
// coefficients and hyper means drift along the direction the sum-to-zero
// centering removes, so their R-hat is meaningless by construction.)
std::vector<ParameterSummary> summarize_monitored(const std::vector<ChainTrace>& traces);

// CSV with header: name,mean,sd,q025,median,q975,r_hat,ess.
std::string summaries_to_csv(const std::vector<ParameterSummary>& rows);
std::string summaries_to_json(const std::vector<ParameterSummary>& rows);

}  // namespace volleymc
