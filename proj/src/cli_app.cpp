#include "volleymc/cli_app.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <sstream>
#include <stdexcept>

#include "volleymc/diagnostics.hpp"
#include "volleymc/match_data.hpp"
#include "volleymc/mcmc.hpp"
#include "volleymc/predictive.hpp"
#include "volleymc/priors.hpp"
#include "volleymc/trace_io.hpp"

namespace volleymc {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Thrown by helpers for data-rule problems (exit 1) as opposed to file
// problems (exit 2) or option problems (exit 3).
struct DataRuleError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw std::runtime_error("failed reading " + path);
  return buf.str();
}

void write_text_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << text;
  out.flush();
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

CsvSchema schema_from_string(const std::string& s) {
  if (s == "table1") return CsvSchema::table1;
  if (s == "raw-counts") return CsvSchema::raw_counts;
  throw std::invalid_argument("unknown schema '" + s + "'");
}

void report_violations(const ValidationReport& report, std::ostream& os) {
  for (const Violation& v : report.violations) {
    os << "match " << v.match_id << ", " << v.field << ": " << v.message;
    if (v.expected) os << " (expected " << *v.expected << ")";
    os << '\n';
  }
  os << report.violations.size() << " rule violation"
     << (report.violations.size() == 1 ? "" : "s") << " found\n";
}

// Loads a season file and applies the shared --repair-indicators /
// validation policy.  Throws ParseError, DataRuleError or
// std::runtime_error; the caller maps those to exit codes.
SeasonData load_season_checked(const std::string& path, CsvSchema schema, bool repair) {
  SeasonData season = parse_season_csv(path, schema);
  if (repair) season = repair_indicators(season);
  const ValidationReport report = validate_season(season);
  if (!report.clean()) {
    std::ostringstream msg;
    report_violations(report, msg);
    throw DataRuleError(msg.str());
  }
  return season;
}

json json_from_config_hash(const std::vector<ChainTrace>& traces) {
  json hashes = json::array();
  for (const ChainTrace& t : traces) hashes.push_back(t.meta.config_hash);
  return hashes;
}

// ---------------------------------------------------------------- validate

struct ValidateOptions {
  std::string data;
  std::string schema = "table1";
  bool repair = false;
  std::string out;  // optional path for the (repaired) table1 rewrite
};

int cmd_validate(const ValidateOptions& opt) {
  SeasonData season;
  try {
    season = parse_season_csv(opt.data, schema_from_string(opt.schema));
  } catch (const ParseError& e) {
    std::cerr << opt.data << ":" << e.line << ": " << e.what() << '\n';
    return kExitIoError;
  } catch (const std::exception& e) {
    std::cerr << e.what() << '\n';
    return kExitIoError;
  }

  if (opt.repair) season = repair_indicators(season);
  const ValidationReport report = validate_season(season);

  if (!opt.out.empty()) {
    try {
      write_season_csv(season, opt.out);
    } catch (const std::exception& e) {
      std::cerr << e.what() << '\n';
      return kExitIoError;
    }
  }

  if (!report.clean()) {
    report_violations(report, std::cout);
    return kExitValidation;
  }
  std::cout << "OK: " << season.matches.size() << " matches, " << season.teams.size()
            << " teams\n";
  return kExitOk;
}

// --------------------------------------------------------------------- fit

struct FitOptions {
  std::string data;
  std::string schema = "table1";
  std::string prior = "basic";
  SamplerConfig sampler;
  std::string out_dir = ".";
  std::string config_path;
  bool repair = false;
  bool sequential = false;

  // Which CLI flags were actually given (flags beat --config values).
  bool data_given = false, schema_given = false, prior_given = false;
  bool chains_given = false, iters_given = false, burn_in_given = false;
  bool thin_given = false, seed_given = false;
};

// Resolves --config JSON against the flags.  The file may be a bare config
// object ({"sampler": ..., "prior": ..., "schema": ..., "data": ...}) or a
// previously written fit manifest (same object under a "config" key), so a
// manifest alone reproduces its run.
void apply_config_file(FitOptions& opt, PriorSpec& spec) {
  json root = json::parse(read_text_file(opt.config_path));
  if (root.contains("config")) root = root.at("config");
  if (!root.is_object()) throw json::type_error::create(302, "config is not an object", &root);

  if (root.contains("sampler")) {
    const json& s = root.at("sampler");
    SamplerConfig& c = opt.sampler;
    if (s.contains("n_chains") && !opt.chains_given) c.n_chains = s.at("n_chains").get<int>();
    if (s.contains("n_iter") && !opt.iters_given) c.n_iter = s.at("n_iter").get<int>();
    if (s.contains("burn_in") && !opt.burn_in_given) c.burn_in = s.at("burn_in").get<int>();
    if (s.contains("thin") && !opt.thin_given) c.thin = s.at("thin").get<int>();
    if (s.contains("seed") && !opt.seed_given) c.seed = s.at("seed").get<std::uint64_t>();
    if (s.contains("adapt_window")) c.adapt_window = s.at("adapt_window").get<int>();
    if (s.contains("target_accept")) c.target_accept = s.at("target_accept").get<double>();
    if (s.contains("init_jitter")) c.init_jitter = s.at("init_jitter").get<double>();
  }
  if (root.contains("prior")) {
    const PriorVariant flag_variant = spec.variant;
    spec = prior_spec_from_json(root.at("prior").dump());
    if (opt.prior_given) spec.variant = flag_variant;
  }
  if (root.contains("schema") && !opt.schema_given) {
    opt.schema = root.at("schema").get<std::string>();
  }
  if (root.contains("data") && !opt.data_given) {
    opt.data = root.at("data").get<std::string>();
  }
}

json sampler_config_to_json(const SamplerConfig& c) {
  return json{{"n_chains", c.n_chains},         {"n_iter", c.n_iter},
              {"burn_in", c.burn_in},           {"thin", c.thin},
              {"seed", c.seed},                 {"adapt_window", c.adapt_window},
              {"target_accept", c.target_accept}, {"init_jitter", c.init_jitter}};
}

std::vector<ParameterSummary> fit_summaries(const std::vector<ChainTrace>& traces,
                                            PriorVariant variant) {
  std::vector<ParameterSummary> rows = summarize_monitored(traces);
  if (variant == PriorVariant::scaled_iw) {
    std::vector<ParameterSummary> cov = summarize(traces, "covariance");
    rows.insert(rows.end(), cov.begin(), cov.end());
  }
  return rows;
}

void warn_on_poor_mixing(const std::vector<ParameterSummary>& rows) {
  double worst = 0.0;
  std::string worst_name;
  for (const ParameterSummary& r : rows) {
    if (std::isfinite(r.r_hat) && r.r_hat > worst) {
      worst = r.r_hat;
      worst_name = r.name;
    }
  }
  if (worst > 1.05) {
    std::cerr << "warning: largest split R-hat is " << worst << " (" << worst_name
              << "); chains have not converged - increase --iters/--burn-in\n";
  }
}

int cmd_fit(FitOptions opt) {
  PriorSpec spec;
  try {
    spec.variant = prior_variant_from_string(opt.prior);
    if (!opt.config_path.empty()) apply_config_file(opt, spec);
  } catch (const json::parse_error& e) {
    std::cerr << opt.config_path << ": " << e.what() << '\n';
    return kExitIoError;
  } catch (const json::exception& e) {
    std::cerr << opt.config_path << ": " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << e.what() << '\n';
    return kExitIoError;
  }

  if (opt.data.empty()) {
    std::cerr << "fit needs --data (or a config file with a data path)\n";
    return kExitConfig;
  }

  CsvSchema schema;
  try {
    schema = schema_from_string(opt.schema);
    spec.validate();
    opt.sampler.validate();
  } catch (const std::exception& e) {
    std::cerr << e.what() << '\n';
    return kExitConfig;
  }

  SeasonData season;
  try {
    season = load_season_checked(opt.data, schema, opt.repair);
  } catch (const ParseError& e) {
    std::cerr << opt.data << ":" << e.line << ": " << e.what() << '\n';
    return kExitIoError;
  } catch (const DataRuleError& e) {
    std::cerr << e.what();
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << e.what() << '\n';
    return kExitIoError;
  }
  // Fits always run on centered covariates; the subtracted means travel with
  // the traces so predictions can center scenario data identically.
  season = center_covariates(season);

  const std::string prefix = to_string(spec.variant);
  std::vector<ChainTrace> traces;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    traces = run_all_chains(season, spec, opt.sampler, !opt.sequential);
  } catch (const std::exception& e) {
    std::cerr << "sampling failed: " << e.what() << '\n';
    return kExitIoError;
  }
  const double wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  try {
    fs::create_directories(opt.out_dir);
    json outputs;
    outputs["chains"] = json::array();
    for (const ChainTrace& trace : traces) {
      const fs::path path =
          fs::path(opt.out_dir) / (prefix + "_chain" + std::to_string(trace.meta.chain_id) + ".csv");
      write_trace(trace, path.string());
      outputs["chains"].push_back(path.string());
      std::cout << "wrote " << path.string() << '\n';
    }

    const std::vector<ParameterSummary> rows = fit_summaries(traces, spec.variant);
    const fs::path summary_csv = fs::path(opt.out_dir) / (prefix + "_summary.csv");
    const fs::path summary_json = fs::path(opt.out_dir) / (prefix + "_summary.json");
    write_text_file(summary_csv, summaries_to_csv(rows));
    write_text_file(summary_json, summaries_to_json(rows));
    outputs["summary_csv"] = summary_csv.string();
    outputs["summary_json"] = summary_json.string();
    std::cout << "wrote " << summary_csv.string() << '\n';
    std::cout << "wrote " << summary_json.string() << '\n';
    warn_on_poor_mixing(rows);

    json manifest;
    manifest["command"] = "fit";
    manifest["config"] = {{"sampler", sampler_config_to_json(opt.sampler)},
                          {"prior", json::parse(prior_spec_to_json(spec))},
                          {"schema", opt.schema},
                          {"data", opt.data}};
    manifest["config_hash"] = sampler_config_hash(opt.sampler, spec);
    manifest["repair_indicators"] = opt.repair;
    manifest["teams"] = season.teams.names();
    manifest["covariate_means"] = season.covariate_means;
    manifest["wall_seconds"] = wall_seconds;
    manifest["outputs"] = outputs;
    const fs::path manifest_path = fs::path(opt.out_dir) / (prefix + "_manifest.json");
    write_text_file(manifest_path, manifest.dump(2) + "\n");
    std::cout << "wrote " << manifest_path.string() << '\n';
  } catch (const std::exception& e) {
    std::cerr << e.what() << '\n';
    return kExitIoError;
  }
  return kExitOk;
}

// --------------------------------------------------------------- summarize

struct SummarizeOptions {
  std::vector<std::string> traces;
  std::string select = "monitored";
  std::string format = "csv";
  std::string out;  // empty = stdout
};

std::vector<ChainTrace> read_traces_checked(const std::vector<std::string>& paths) {
  std::vector<ChainTrace> traces;
  traces.reserve(paths.size());
  for (const std::string& path : paths) {
    traces.push_back(read_trace(path));
  }
  for (std::size_t i = 1; i < traces.size(); ++i) {
    if (traces[i].meta.config_hash != traces.front().meta.config_hash) {
      std::cerr << "warning: " << paths[i] << " comes from configuration "
                << traces[i].meta.config_hash << " but " << paths.front() << " from "
                << traces.front().meta.config_hash << "; pooling them anyway\n";
    }
  }
  return traces;
}

int cmd_summarize(const SummarizeOptions& opt) {
  std::vector<ChainTrace> traces;
  try {
    traces = read_traces_checked(opt.traces);
  } catch (const ParseError& e) {
    std::cerr << "trace:" << e.line << ": " << e.what() << '\n';
    return kExitIoError;
  } catch (const std::exception& e) {
    std::cerr << e.what() << '\n';
    return kExitIoError;
  }

  std::vector<ParameterSummary> rows;
  try {
    rows = summarize(traces, opt.select);
  } catch (const std::invalid_argument& e) {
    std::cerr << e.what() << '\n';
    return kExitConfig;
  }
  const std::string text = opt.format == "json" ? summaries_to_json(rows) : summaries_to_csv(rows);

  if (opt.out.empty()) {
    std::cout << text;
  } else {
    try {
      write_text_file(opt.out, text);
    } catch (const std::exception& e) {
      std::cerr << e.what() << '\n';
      return kExitIoError;
    }
    std::cout << "wrote " << opt.out << '\n';
  }
  return kExitOk;
}

// ----------------------------------------------------------------- predict

struct PredictOptions {
  std::vector<std::string> traces;
  std::string data;      // full season file: fixture list + observed results
  std::string fixtures;  // bare fixture list
  std::string schema = "table1";
  std::string covariates = "zero";
  int n_rep = 1000;
  std::uint64_t seed = 1;
  std::string out_dir = ".";
  bool repair = false;
};

struct RawFixture {
  int match_id = 0;
  std::string home;
  std::string away;
  bool has_cov = false;
  SkillEfficiencies cov_home;
  SkillEfficiencies cov_away;
};

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) {
    if (!cell.empty() && cell.back() == '\r') cell.pop_back();
    cells.push_back(cell);
  }
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

// Minimal fixture schema: match_id,home_team,away_team and optionally the
// eight table1 efficiency columns (all or none).
std::vector<RawFixture> parse_fixture_csv(const std::string& path) {
  const std::string text = read_text_file(path);
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ParseError(1, "empty fixture file");
  const std::vector<std::string> header = split_line(line);
  auto col = [&](const std::string& name) -> int {
    const auto it = std::find(header.begin(), header.end(), name);
    return it == header.end() ? -1 : static_cast<int>(it - header.begin());
  };
  const int c_id = col("match_id"), c_home = col("home_team"), c_away = col("away_team");
  if (c_id < 0 || c_home < 0 || c_away < 0) {
    throw ParseError(1, "fixture file needs match_id, home_team and away_team columns");
  }
  static constexpr const char* kEff[8] = {"ser_eff_h", "att_eff_h", "def_eff_h", "blo_eff_h",
                                          "ser_eff_a", "att_eff_a", "def_eff_a", "blo_eff_a"};
  int c_eff[8];
  int n_eff = 0;
  for (int j = 0; j < 8; ++j) {
    c_eff[j] = col(kEff[j]);
    if (c_eff[j] >= 0) ++n_eff;
  }
  if (n_eff != 0 && n_eff != 8) {
    throw ParseError(1, "fixture file has only some of the eight efficiency columns");
  }

  std::vector<RawFixture> fixtures;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const std::vector<std::string> cells = split_line(line);
    if (cells.size() != header.size()) {
      throw ParseError(line_no, "expected " + std::to_string(header.size()) +
                                    " cells, got " + std::to_string(cells.size()));
    }
    RawFixture f;
    try {
      f.match_id = std::stoi(cells[static_cast<std::size_t>(c_id)]);
    } catch (const std::exception&) {
      throw ParseError(line_no, "match_id is not an integer");
    }
    f.home = cells[static_cast<std::size_t>(c_home)];
    f.away = cells[static_cast<std::size_t>(c_away)];
    if (n_eff == 8) {
      double eff[8];
      for (int j = 0; j < 8; ++j) {
        try {
          eff[j] = std::stod(cells[static_cast<std::size_t>(c_eff[j])]);
        } catch (const std::exception&) {
          throw ParseError(line_no, std::string(kEff[j]) + " is not a number");
        }
      }
      f.has_cov = true;
      f.cov_home = {eff[0], eff[1], eff[2], eff[3]};
      f.cov_away = {eff[4], eff[5], eff[6], eff[7]};
    }
    fixtures.push_back(std::move(f));
  }
  if (fixtures.empty()) throw ParseError(line_no, "fixture file has no rows");
  std::sort(fixtures.begin(), fixtures.end(),
            [](const RawFixture& a, const RawFixture& b) { return a.match_id < b.match_id; });
  return fixtures;
}

// Team names resolve against the traces' team list, so fixture files may
// order teams differently than the training data did.
int trace_code(const TeamIndex& teams, const std::string& name) {
  const int code = teams.code_of(name);
  if (code == 0) {
    throw DataRuleError("team '" + name + "' does not appear in the fitted model");
  }
  return code;
}

int cmd_predict(const PredictOptions& opt) {
  if (opt.data.empty() == opt.fixtures.empty()) {
    std::cerr << "predict needs exactly one fixture source: --data or --fixtures\n";
    return kExitConfig;
  }

  std::vector<ChainTrace> traces;
  std::vector<PredictiveSample> samples;
  try {
    traces = read_traces_checked(opt.traces);
    samples = extract_predictive_samples(traces);
  } catch (const ParseError& e) {
    std::cerr << "trace:" << e.line << ": " << e.what() << '\n';
    return kExitIoError;
  } catch (const std::out_of_range& e) {
    std::cerr << "trace is missing a model column: " << e.what() << '\n';
    return kExitIoError;
  } catch (const std::exception& e) {
    std::cerr << e.what() << '\n';
    return kExitIoError;
  }
  const TeamIndex teams(traces.front().meta.teams);
  const std::array<double, 8>& means = traces.front().meta.covariate_means;
  const bool observed_cov = opt.covariates == "observed";

  std::vector<Fixture> fixtures;
  std::optional<LeagueTable> observed_table;
  std::optional<std::vector<std::vector<int>>> observed_cumulative;
  std::string fixtures_source;

  try {
    if (!opt.data.empty()) {
      fixtures_source = opt.data;
      SeasonData season =
          load_season_checked(opt.data, schema_from_string(opt.schema), opt.repair);
      // Rebase the season onto the traces' team codes so observed standings
      // and replicated standings live in the same order.
      SeasonData rebased = season;
      rebased.teams = teams;
      for (MatchRecord& m : rebased.matches) {
        m.home = trace_code(teams, season.teams.name_of(m.home));
        m.away = trace_code(teams, season.teams.name_of(m.away));
      }
      fixtures.reserve(rebased.matches.size());
      for (const MatchRecord& m : rebased.matches) {
        Fixture f;
        f.match_id = m.match_id;
        f.home = m.home;
        f.away = m.away;
        if (observed_cov) {
          f.cov_home = {m.eff_home.serve - means[0], m.eff_home.attack - means[1],
                        m.eff_home.defence - means[2], m.eff_home.block - means[3]};
          f.cov_away = {m.eff_away.serve - means[4], m.eff_away.attack - means[5],
                        m.eff_away.defence - means[6], m.eff_away.block - means[7]};
        }
        fixtures.push_back(f);
      }
      observed_table = league_table_observed(rebased);
      observed_cumulative = cumulative_points_observed(rebased);
    } else {
      fixtures_source = opt.fixtures;
      const std::vector<RawFixture> raw = parse_fixture_csv(opt.fixtures);
      if (observed_cov && !raw.front().has_cov) {
        std::cerr << "--covariates observed needs the efficiency columns in " << opt.fixtures
                  << '\n';
        return kExitConfig;
      }
      fixtures.reserve(raw.size());
      for (const RawFixture& r : raw) {
        Fixture f;
        f.match_id = r.match_id;
        f.home = trace_code(teams, r.home);
        f.away = trace_code(teams, r.away);
        if (f.home == f.away) {
          throw DataRuleError("match " + std::to_string(r.match_id) +
                              ": a team cannot meet itself");
        }
        if (observed_cov) {
          f.cov_home = {r.cov_home.serve - means[0], r.cov_home.attack - means[1],
                        r.cov_home.defence - means[2], r.cov_home.block - means[3]};
          f.cov_away = {r.cov_away.serve - means[4], r.cov_away.attack - means[5],
                        r.cov_away.defence - means[6], r.cov_away.block - means[7]};
        }
        fixtures.push_back(f);
      }
    }
  } catch (const ParseError& e) {
    std::cerr << fixtures_source << ":" << e.line << ": " << e.what() << '\n';
    return kExitIoError;
  } catch (const DataRuleError& e) {
    std::cerr << e.what() << (std::string(e.what()).back() == '\n' ? "" : "\n");
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << e.what() << '\n';
    return kExitIoError;
  }

  if (opt.n_rep <= 0) {
    std::cerr << "--n-rep must be positive\n";
    return kExitConfig;
  }

  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<SeasonReplicate> reps =
      replicate_season(samples, fixtures, teams.size(), opt.n_rep, opt.seed);
  const Eigen::MatrixXd probs = rank_probabilities(reps, teams.size());
  const std::vector<std::vector<double>> cum_pred =
      cumulative_points_replicated(reps, fixtures, teams.size());
  const double wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  try {
    fs::create_directories(opt.out_dir);
    const fs::path table_path = fs::path(opt.out_dir) / "league_table.csv";
    const fs::path rank_path = fs::path(opt.out_dir) / "rank_probabilities.csv";
    const fs::path cum_path = fs::path(opt.out_dir) / "cumulative_points.csv";
    write_text_file(table_path, league_summary_csv(reps, teams, observed_table));
    write_text_file(rank_path, rank_probabilities_csv(probs, teams));
    write_text_file(cum_path, cumulative_points_csv(cum_pred, observed_cumulative, teams));

    json manifest;
    manifest["command"] = "predict";
    manifest["traces"] = opt.traces;
    manifest["trace_config_hashes"] = json_from_config_hash(traces);
    manifest["fixtures_source"] = fixtures_source;
    manifest["n_matches"] = fixtures.size();
    manifest["n_posterior_samples"] = samples.size();
    manifest["n_rep"] = opt.n_rep;
    manifest["seed"] = opt.seed;
    manifest["covariates"] = opt.covariates;
    manifest["teams"] = teams.names();
    manifest["wall_seconds"] = wall_seconds;
    manifest["outputs"] = {table_path.string(), rank_path.string(), cum_path.string()};
    const fs::path manifest_path = fs::path(opt.out_dir) / "predict_manifest.json";
    write_text_file(manifest_path, manifest.dump(2) + "\n");

    for (const fs::path& p : {table_path, rank_path, cum_path, manifest_path}) {
      std::cout << "wrote " << p.string() << '\n';
    }
  } catch (const std::exception& e) {
    std::cerr << e.what() << '\n';
    return kExitIoError;
  }
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"Bayesian hierarchical model for volleyball seasons"};
  app.require_subcommand(1);

  ValidateOptions vopt;
  CLI::App* validate = app.add_subcommand("validate", "Check a season CSV against the data rules");
  validate->add_option("--data", vopt.data, "season CSV")->required();
  validate->add_option("--schema", vopt.schema, "input schema")
      ->check(CLI::IsMember({"table1", "raw-counts"}));
  validate->add_flag("--repair-indicators", vopt.repair,
                     "recompute the five-set and winner indicators from the set counts first");
  validate->add_option("--out", vopt.out, "write the (repaired) season back out as table1 CSV");

  FitOptions fopt;
  CLI::App* fit = app.add_subcommand("fit", "Sample the posterior and write traces + summary");
  CLI::Option* f_data = fit->add_option("--data", fopt.data, "season CSV");
  CLI::Option* f_schema = fit->add_option("--schema", fopt.schema, "input schema")
                              ->check(CLI::IsMember({"table1", "raw-counts"}));
  CLI::Option* f_prior =
      fit->add_option("--prior", fopt.prior, "hierarchical prior on the team effects")
          ->check(CLI::IsMember({"basic", "scaled-iw"}));
  CLI::Option* f_chains = fit->add_option("--chains", fopt.sampler.n_chains, "number of chains");
  CLI::Option* f_iters = fit->add_option("--iters", fopt.sampler.n_iter, "sweeps per chain");
  CLI::Option* f_burn = fit->add_option("--burn-in", fopt.sampler.burn_in, "discarded sweeps");
  CLI::Option* f_thin = fit->add_option("--thin", fopt.sampler.thin, "retain every n-th sweep");
  CLI::Option* f_seed = fit->add_option("--seed", fopt.sampler.seed, "master RNG seed");
  fit->add_option("--out", fopt.out_dir, "output directory");
  fit->add_option("--config", fopt.config_path,
                  "JSON config or fit manifest; explicit flags still win");
  fit->add_flag("--repair-indicators", fopt.repair,
                "recompute the indicator columns before validating");
  fit->add_flag("--sequential", fopt.sequential, "run chains one after another");

  SummarizeOptions sopt;
  CLI::App* summarize_cmd =
      app.add_subcommand("summarize", "Posterior summaries and convergence diagnostics");
  summarize_cmd->add_option("--trace", sopt.traces, "trace CSV (repeat for several chains)")
      ->required();
  summarize_cmd->add_option("--select", sopt.select,
                            "parameter group (monitored, default, attack, defence, home, "
                            "constant, gamma, eta, hyper, covariance, all) or a column name");
  summarize_cmd->add_option("--format", sopt.format, "output format")
      ->check(CLI::IsMember({"csv", "json"}));
  summarize_cmd->add_option("--out", sopt.out, "output file (default: stdout)");

  PredictOptions popt;
  CLI::App* predict =
      app.add_subcommand("predict", "Replicate seasons from the posterior and rank teams");
  predict->add_option("--trace", popt.traces, "trace CSV (repeat for several chains)")->required();
  predict->add_option("--data", popt.data, "season CSV: fixtures plus observed standings");
  predict->add_option("--fixtures", popt.fixtures,
                      "bare fixture CSV (match_id,home_team,away_team[,efficiencies])");
  predict->add_option("--schema", popt.schema, "--data schema")
      ->check(CLI::IsMember({"table1", "raw-counts"}));
  predict->add_option("--covariates", popt.covariates,
                      "skill covariates: zero (league-average match) or observed")
      ->check(CLI::IsMember({"zero", "observed"}));
  predict->add_option("--n-rep", popt.n_rep, "season replications");
  predict->add_option("--seed", popt.seed, "replication RNG seed");
  predict->add_option("--out", popt.out_dir, "output directory");
  predict->add_flag("--repair-indicators", popt.repair,
                    "recompute --data's indicator columns before validating");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(std::move(reversed));
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  if (app.got_subcommand(validate)) return cmd_validate(vopt);
  if (app.got_subcommand(fit)) {
    fopt.data_given = f_data->count() > 0;
    fopt.schema_given = f_schema->count() > 0;
    fopt.prior_given = f_prior->count() > 0;
    fopt.chains_given = f_chains->count() > 0;
    fopt.iters_given = f_iters->count() > 0;
    fopt.burn_in_given = f_burn->count() > 0;
    fopt.thin_given = f_thin->count() > 0;
    fopt.seed_given = f_seed->count() > 0;
    return cmd_fit(std::move(fopt));
  }
  if (app.got_subcommand(summarize_cmd)) return cmd_summarize(sopt);
  if (app.got_subcommand(predict)) return cmd_predict(popt);
  return kExitConfig;  // unreachable with require_subcommand(1)
}

}  // namespace volleymc
