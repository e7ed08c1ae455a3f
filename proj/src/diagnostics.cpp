#include "volleymc/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace volleymc {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double var_of(const std::vector<double>& v, double mean) {
  double s = 0.0;
  for (double x : v) s += (x - mean) * (x - mean);
  return s / static_cast<double>(v.size() - 1);
}

void check_chains(const std::vector<std::vector<double>>& chains) {
  if (chains.size() < 2) throw std::invalid_argument("need at least 2 chains");
  const std::size_t n = chains.front().size();
  if (n < 4) throw std::invalid_argument("chains must hold at least 4 draws");
  for (const auto& c : chains) {
    if (c.size() != n) throw std::invalid_argument("chains must share one length");
  }
}

struct Pooled {
  double within = 0.0;    // W
  double var_plus = 0.0;  // (n-1)/n W + B/n
};

Pooled pooled_variance(const std::vector<std::vector<double>>& seqs) {
  const double n = static_cast<double>(seqs.front().size());
  std::vector<double> means;
  double w = 0.0;
  for (const auto& s : seqs) {
    const double m = mean_of(s);
    means.push_back(m);
    w += var_of(s, m);
  }
  w /= static_cast<double>(seqs.size());
  const double b = n * var_of(means, mean_of(means));
  if (!(w > 0.0)) throw std::domain_error("degenerate trace: zero within-chain variance");
  return {w, (n - 1.0) / n * w + b / n};
}

}  // namespace

double potential_scale_reduction(const std::vector<std::vector<double>>& chains) {
  check_chains(chains);
  std::vector<std::vector<double>> halves;
  for (const auto& c : chains) {
    const std::size_t half = c.size() / 2;
    halves.emplace_back(c.begin(), c.begin() + half);
    halves.emplace_back(c.end() - half, c.end());
  }
  const Pooled p = pooled_variance(halves);
  return std::sqrt(p.var_plus / p.within);
}

double effective_sample_size(const std::vector<std::vector<double>>& chains) {
  check_chains(chains);
  const std::size_t m = chains.size();
  const std::size_t n = chains.front().size();
  const Pooled p = pooled_variance(chains);

  // Combined-chain autocorrelation via the variogram, then Geyer's initial
  // monotone positive-pair sum.
  auto rho = [&](std::size_t t) {
    double vt = 0.0;
    for (const auto& c : chains) {
      for (std::size_t i = t; i < n; ++i) {
        const double d = c[i] - c[i - t];
        vt += d * d;
      }
    }
    vt /= static_cast<double>(m * (n - t));
    return 1.0 - vt / (2.0 * p.var_plus);
  };

  double pair_sum = 0.0;
  double prev_pair = kNaN;
  for (std::size_t t = 0; t + 1 < n; t += 2) {
    const double r0 = t == 0 ? 1.0 : rho(t);
    const double r1 = rho(t + 1);
    double pair = r0 + r1;
    if (pair <= 0.0) break;
    if (!std::isnan(prev_pair)) pair = std::min(pair, prev_pair);
    pair_sum += pair;
    prev_pair = pair;
  }
  const double tau = std::max(2.0 * pair_sum - 1.0, 1e-12);
  const double total = static_cast<double>(m * n);
  return std::min(total / tau, total);
}

double quantile_type7(std::vector<double> values, double p) {
  if (values.empty()) throw std::invalid_argument("quantile of empty sample");
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("quantile level outside [0, 1]");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * p;
  const std::size_t lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= values.size()) return values.back();
  const double frac = h - static_cast<double>(lo);
  return values[lo] + frac * (values[lo + 1] - values[lo]);
}

namespace {

struct Selection {
  std::string output_name;
  std::string column;
};

std::vector<Selection> resolve_selector(const ChainTrace& ref, const std::string& selector) {
  const auto& names = ref.names;
  const auto& teams = ref.meta.teams;
  const int K = static_cast<int>(teams.size());
  auto has = [&](const std::string& n) {
    return std::find(names.begin(), names.end(), n) != names.end();
  };
  auto team_label = [&](const std::string& kind, int t) {
    return kind + "[" + (t <= K && K > 0 ? teams[t - 1] : std::to_string(t)) + "]";
  };

  std::vector<Selection> out;
  auto add_effect_block = [&](const std::string& kind, const std::string& base) {
    for (int t = 1; has(base + "[" + std::to_string(t) + "][0]"); ++t) {
      out.push_back({team_label(kind, t), base + "[" + std::to_string(t) + "][0]"});
    }
  };

  if (selector == "attack") {
    add_effect_block("attack", "alpha");
  } else if (selector == "defence") {
    add_effect_block("defence", "beta");
  } else if (selector == "home") {
    out.push_back({"home", "lambda"});
  } else if (selector == "constant") {
    out.push_back({"constant", "mu"});
  } else if (selector == "default" || selector == "monitored") {
    add_effect_block("attack", "alpha");
    add_effect_block("defence", "beta");
    out.push_back({"home", "lambda"});
    out.push_back({"constant", "mu"});
    if (selector == "monitored") {
      for (int s = 0; s < 3; ++s) {
        const std::string n = "gamma[" + std::to_string(s) + "]";
        out.push_back({n, n});
      }
      for (int k = 0; k < 4; ++k) {
        const std::string n = "eta[" + std::to_string(k) + "]";
        out.push_back({n, n});
      }
    }
  } else if (selector == "gamma" || selector == "eta") {
    for (const auto& n : names) {
      if (n.rfind(selector + "[", 0) == 0) out.push_back({n, n});
    }
  } else if (selector == "hyper") {
    for (const auto& n : names) {
      if (n.rfind("mu_", 0) == 0 || n.rfind("tau_", 0) == 0 || n.rfind("xi_", 0) == 0 ||
          n.rfind("lambda_", 0) == 0) {
        out.push_back({n, n});
      }
    }
  } else if (selector == "covariance") {
    for (const auto& n : names) {
      if (n.rfind("sigma2_", 0) == 0 || n.rfind("rho_", 0) == 0) out.push_back({n, n});
    }
    if (out.empty()) {
      throw std::invalid_argument("trace has no covariance columns (basic hierarchy)");
    }
  } else if (selector == "all") {
    for (const auto& n : names) out.push_back({n, n});
  } else if (has(selector)) {
    out.push_back({selector, selector});
  } else {
    throw std::invalid_argument("unknown selector or parameter '" + selector + "'");
  }
  return out;
}

}  // namespace

std::vector<ParameterSummary> summarize(const std::vector<ChainTrace>& traces,
                                        const std::string& selector) {
  if (traces.empty()) throw std::invalid_argument("summarize needs at least one trace");
  const auto selections = resolve_selector(traces.front(), selector);

  std::vector<ParameterSummary> rows;
  rows.reserve(selections.size());
  for (const auto& sel : selections) {
    std::vector<std::vector<double>> per_chain;
    std::vector<double> pooled;
    for (const auto& tr : traces) {
      per_chain.push_back(tr.column(sel.column));
      pooled.insert(pooled.end(), per_chain.back().begin(), per_chain.back().end());
    }
    ParameterSummary s;
    s.name = sel.output_name;
    s.mean = mean_of(pooled);
    s.sd = pooled.size() > 1 ? std::sqrt(var_of(pooled, s.mean)) : 0.0;
    s.q025 = quantile_type7(pooled, 0.025);
    s.median = quantile_type7(pooled, 0.5);
    s.q975 = quantile_type7(pooled, 0.975);
    try {
      s.r_hat = potential_scale_reduction(per_chain);
      s.ess = effective_sample_size(per_chain);
    } catch (const std::domain_error&) {
      s.r_hat = kNaN;
      s.ess = kNaN;
    }
    rows.push_back(std::move(s));
  }
  return rows;
}

std::vector<ParameterSummary> summarize_monitored(const std::vector<ChainTrace>& traces) {
  return summarize(traces, "monitored");
}

std::string summaries_to_csv(const std::vector<ParameterSummary>& rows) {
  std::ostringstream out;
  out << "name,mean,sd,q025,median,q975,r_hat,ess\n";
  char buf[40];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.9g", v);
    out << ',' << buf;
  };
  for (const auto& r : rows) {
    out << r.name;
    put(r.mean);
    put(r.sd);
    put(r.q025);
    put(r.median);
    put(r.q975);
    put(r.r_hat);
    put(r.ess);
    out << '\n';
  }
  return out.str();
}

std::string summaries_to_json(const std::vector<ParameterSummary>& rows) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& r : rows) {
    nlohmann::ordered_json j;
    j["name"] = r.name;
    j["mean"] = r.mean;
    j["sd"] = r.sd;
    j["q025"] = r.q025;
    j["median"] = r.median;
    j["q975"] = r.q975;
    if (std::isnan(r.r_hat)) {
      j["r_hat"] = nullptr;
      j["ess"] = nullptr;
    } else {
      j["r_hat"] = r.r_hat;
      j["ess"] = r.ess;
    }
    arr.push_back(j);
  }
  return arr.dump(2);
}

}  // namespace volleymc
