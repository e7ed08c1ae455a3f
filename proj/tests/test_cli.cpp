#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "support/synthetic.hpp"
#include "volleymc/cli_app.hpp"
#include "volleymc/match_data.hpp"
#include "volleymc/trace_io.hpp"

using namespace volleymc;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag)
      : path(fs::temp_directory_path() / ("volleymc_cli_" + tag)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

SeasonData demo_season(std::uint64_t seed = 21, int n_teams = 4) {
  Rng rng(seed);
  const auto truth = testsupport::draw_true_params(n_teams, rng);
  return testsupport::generate_season(truth, n_teams, rng);
}

// A fast-but-real fit so downstream commands have traces to work with.
int quick_fit(const std::string& data, const std::string& out_dir,
              const std::string& prior = "basic") {
  return run_cli({"fit", "--data", data, "--out", out_dir, "--prior", prior, "--chains", "2",
                  "--iters", "160", "--burn-in", "80", "--thin", "2", "--seed", "99",
                  "--sequential"});
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("argument errors and absent subcommands exit with the config code") {
    CHECK(run_cli({}) == kExitConfig);
    CHECK(run_cli({"frobnicate"}) == kExitConfig);
    CHECK(run_cli({"validate"}) == kExitConfig);  // --data is required
    CHECK(run_cli({"validate", "--data", "x.csv", "--schema", "nonsense"}) == kExitConfig);
    CHECK(run_cli({"fit", "--data", "x.csv", "--no-such-flag"}) == kExitConfig);
  }

  TEST_CASE("validate: clean data passes, rule violations fail, bad paths are I/O errors") {
    TempDir dir("validate");
    const SeasonData season = demo_season();
    write_season_csv(season, dir.file("clean.csv"));
    CHECK(run_cli({"validate", "--data", dir.file("clean.csv")}) == kExitOk);

    SeasonData broken = season;
    broken.matches[2].d_m = 0.5;  // non-binary indicator
    write_season_csv(broken, dir.file("broken.csv"));
    CHECK(run_cli({"validate", "--data", dir.file("broken.csv")}) == kExitValidation);

    CHECK(run_cli({"validate", "--data", dir.file("missing.csv")}) == kExitIoError);

    std::ofstream(dir.file("garbled.csv")) << "not,a,season\n1,2,3\n";
    CHECK(run_cli({"validate", "--data", dir.file("garbled.csv")}) == kExitIoError);
  }

  TEST_CASE("validate --repair-indicators rewrites recomputable indicator cells") {
    TempDir dir("repair");
    SeasonData season = demo_season(33);
    season.matches[1].d_s = season.matches[1].d_s == 1.0 ? 0.0 : 1.0;  // contradict the sets
    write_season_csv(season, dir.file("shuffled.csv"));
    CHECK(run_cli({"validate", "--data", dir.file("shuffled.csv")}) == kExitValidation);
    CHECK(run_cli({"validate", "--data", dir.file("shuffled.csv"), "--repair-indicators",
                   "--out", dir.file("fixed.csv")}) == kExitOk);
    CHECK(run_cli({"validate", "--data", dir.file("fixed.csv")}) == kExitOk);
  }

  TEST_CASE("fit writes traces, summaries and a manifest that reproduces the run") {
    TempDir dir("fit");
    write_season_csv(demo_season(), dir.file("season.csv"));

    REQUIRE(quick_fit(dir.file("season.csv"), dir.file("run1")) == kExitOk);
    for (const char* name : {"basic_chain0.csv", "basic_chain1.csv", "basic_summary.csv",
                             "basic_summary.json", "basic_manifest.json"}) {
      CAPTURE(name);
      CHECK(fs::exists(dir.path / "run1" / name));
    }

    const ChainTrace t0 = read_trace(dir.file("run1/basic_chain0.csv"));
    CHECK(t0.meta.chain_id == 0);
    CHECK(t0.meta.master_seed == 99);
    CHECK(t0.n_samples() == 40);  // (160 - 80) / 2
    CHECK(t0.meta.teams.size() == 4);

    const auto manifest = nlohmann::json::parse(slurp(dir.file("run1/basic_manifest.json")));
    CHECK(manifest.at("command") == "fit");
    CHECK(manifest.at("config").at("sampler").at("seed") == 99);
    CHECK(manifest.at("config").at("prior").at("variant") == "basic");
    CHECK(manifest.at("teams").size() == 4);
    CHECK(manifest.at("config_hash") == t0.meta.config_hash);

    // Re-running from the manifest reproduces every output byte.
    REQUIRE(run_cli({"fit", "--config", dir.file("run1/basic_manifest.json"), "--out",
                     dir.file("run2"), "--sequential"}) == kExitOk);
    CHECK(slurp(dir.file("run2/basic_chain0.csv")) == slurp(dir.file("run1/basic_chain0.csv")));
    CHECK(slurp(dir.file("run2/basic_chain1.csv")) == slurp(dir.file("run1/basic_chain1.csv")));
    CHECK(slurp(dir.file("run2/basic_summary.csv")) == slurp(dir.file("run1/basic_summary.csv")));

    // Explicit flags override manifest values.
    REQUIRE(run_cli({"fit", "--config", dir.file("run1/basic_manifest.json"), "--seed", "100",
                     "--out", dir.file("run3"), "--sequential"}) == kExitOk);
    CHECK(slurp(dir.file("run3/basic_chain0.csv")) != slurp(dir.file("run1/basic_chain0.csv")));
  }

  TEST_CASE("fit rejects broken data, bad sampler settings and unknown configs") {
    TempDir dir("fitbad");
    SeasonData season = demo_season();
    write_season_csv(season, dir.file("season.csv"));

    SeasonData broken = season;
    broken.matches[0].s_h = 3;  // 3:3 is never a legal volleyball score
    broken.matches[0].s_a = 3;
    write_season_csv(broken, dir.file("broken.csv"));
    CHECK(run_cli({"fit", "--data", dir.file("broken.csv"), "--out", dir.file("o")}) ==
          kExitValidation);

    CHECK(run_cli({"fit", "--data", dir.file("season.csv"), "--chains", "1", "--out",
                   dir.file("o")}) == kExitConfig);
    CHECK(run_cli({"fit", "--data", dir.file("season.csv"), "--iters", "50", "--burn-in",
                   "50", "--out", dir.file("o")}) == kExitConfig);
    CHECK(run_cli({"fit", "--data", dir.file("missing.csv"), "--out", dir.file("o")}) ==
          kExitIoError);
    CHECK(run_cli({"fit", "--out", dir.file("o")}) == kExitConfig);  // no data anywhere

    std::ofstream(dir.file("bad.json")) << "{ definitely not json";
    CHECK(run_cli({"fit", "--data", dir.file("season.csv"), "--config", dir.file("bad.json"),
                   "--out", dir.file("o")}) == kExitIoError);
    std::ofstream(dir.file("odd.json")) << R"({"sampler": {"n_chains": "two"}})";
    CHECK(run_cli({"fit", "--data", dir.file("season.csv"), "--config", dir.file("odd.json"),
                   "--out", dir.file("o")}) == kExitConfig);
  }

  TEST_CASE("fit --repair-indicators accepts repairable seasons") {
    TempDir dir("fitrep");
    SeasonData season = demo_season(44);
    season.matches[3].d_s = 1.0 - season.matches[3].d_s;
    write_season_csv(season, dir.file("season.csv"));
    CHECK(run_cli({"fit", "--data", dir.file("season.csv"), "--out", dir.file("o"),
                   "--chains", "2", "--iters", "60", "--burn-in", "30", "--seed", "5",
                   "--sequential"}) == kExitValidation);
    CHECK(run_cli({"fit", "--data", dir.file("season.csv"), "--out", dir.file("o"),
                   "--chains", "2", "--iters", "60", "--burn-in", "30", "--seed", "5",
                   "--sequential", "--repair-indicators"}) == kExitOk);
    const auto manifest = nlohmann::json::parse(slurp(dir.file("o/basic_manifest.json")));
    CHECK(manifest.at("repair_indicators") == true);
  }

  TEST_CASE("summarize reads traces back and honours selector and format") {
    TempDir dir("summ");
    write_season_csv(demo_season(), dir.file("season.csv"));
    REQUIRE(quick_fit(dir.file("season.csv"), dir.file("fit")) == kExitOk);
    const std::string c0 = dir.file("fit/basic_chain0.csv");
    const std::string c1 = dir.file("fit/basic_chain1.csv");

    CHECK(run_cli({"summarize", "--trace", c0, "--trace", c1, "--select", "home", "--format",
                   "json", "--out", dir.file("home.json")}) == kExitOk);
    const auto rows = nlohmann::json::parse(slurp(dir.file("home.json")));
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].at("name") == "home");

    CHECK(run_cli({"summarize", "--trace", c0, "--trace", c1, "--out",
                   dir.file("default.csv")}) == kExitOk);
    const std::string csv = slurp(dir.file("default.csv"));
    CHECK(csv.rfind("name,mean,", 0) == 0);
    CHECK(csv.find("attack[Team01]") != std::string::npos);
    CHECK(csv.find("constant") != std::string::npos);

    CHECK(run_cli({"summarize", "--trace", c0, "--select", "no-such-thing"}) == kExitConfig);
    CHECK(run_cli({"summarize", "--trace", c0, "--select", "covariance"}) == kExitConfig);
    CHECK(run_cli({"summarize", "--trace", dir.file("fit/nope.csv")}) == kExitIoError);
    std::ofstream(dir.file("corrupt.csv")) << "just text\n";
    CHECK(run_cli({"summarize", "--trace", dir.file("corrupt.csv")}) == kExitIoError);
  }

  TEST_CASE("predict replicates the season and ranks the roster") {
    TempDir dir("pred");
    const SeasonData season = demo_season();
    write_season_csv(season, dir.file("season.csv"));
    REQUIRE(quick_fit(dir.file("season.csv"), dir.file("fit")) == kExitOk);
    const std::string c0 = dir.file("fit/basic_chain0.csv");
    const std::string c1 = dir.file("fit/basic_chain1.csv");

    REQUIRE(run_cli({"predict", "--trace", c0, "--trace", c1, "--data", dir.file("season.csv"),
                     "--n-rep", "50", "--seed", "7", "--out", dir.file("out")}) == kExitOk);
    for (const char* name : {"league_table.csv", "rank_probabilities.csv",
                             "cumulative_points.csv", "predict_manifest.json"}) {
      CAPTURE(name);
      CHECK(fs::exists(dir.path / "out" / name));
    }
    const std::string table = slurp(dir.file("out/league_table.csv"));
    CHECK(table.find("observed_points") != std::string::npos);  // --data supplies standings
    CHECK(table.find("Team01") != std::string::npos);
    const std::string ranks = slurp(dir.file("out/rank_probabilities.csv"));
    CHECK(ranks.rfind("team,p1,p2,p3,p4", 0) == 0);
    const auto manifest = nlohmann::json::parse(slurp(dir.file("out/predict_manifest.json")));
    CHECK(manifest.at("command") == "predict");
    CHECK(manifest.at("n_rep") == 50);
    CHECK(manifest.at("n_matches") == season.matches.size());

    // Same seed, same outputs.
    REQUIRE(run_cli({"predict", "--trace", c0, "--trace", c1, "--data", dir.file("season.csv"),
                     "--n-rep", "50", "--seed", "7", "--out", dir.file("out2")}) == kExitOk);
    CHECK(slurp(dir.file("out2/league_table.csv")) == table);
  }

  TEST_CASE("predict accepts a bare fixture list instead of a full season") {
    TempDir dir("fixtures");
    write_season_csv(demo_season(), dir.file("season.csv"));
    REQUIRE(quick_fit(dir.file("season.csv"), dir.file("fit")) == kExitOk);
    const std::string c0 = dir.file("fit/basic_chain0.csv");

    std::ofstream(dir.file("fixtures.csv")) << "match_id,home_team,away_team\n"
                                               "1,Team01,Team02\n"
                                               "2,Team03,Team04\n"
                                               "3,Team02,Team03\n"
                                               "4,Team04,Team01\n";
    REQUIRE(run_cli({"predict", "--trace", c0, "--fixtures", dir.file("fixtures.csv"),
                     "--n-rep", "20", "--seed", "3", "--out", dir.file("out")}) == kExitOk);
    const std::string table = slurp(dir.file("out/league_table.csv"));
    CHECK(table.find("observed_points") == std::string::npos);  // nothing observed
    CHECK(table.find("Team04") != std::string::npos);

    // Unknown names cannot be mapped onto the fitted roster.
    std::ofstream(dir.file("alien.csv")) << "match_id,home_team,away_team\n1,Nowhere,Team02\n";
    CHECK(run_cli({"predict", "--trace", c0, "--fixtures", dir.file("alien.csv"), "--out",
                   dir.file("out3")}) == kExitValidation);

    // Exactly one fixture source must be given.
    CHECK(run_cli({"predict", "--trace", c0, "--out", dir.file("out4")}) == kExitConfig);
    CHECK(run_cli({"predict", "--trace", c0, "--data", dir.file("season.csv"), "--fixtures",
                   dir.file("fixtures.csv"), "--out", dir.file("out5")}) == kExitConfig);
  }

  TEST_CASE("predict --covariates observed uses the recorded efficiencies") {
    TempDir dir("predcov");
    write_season_csv(demo_season(), dir.file("season.csv"));
    REQUIRE(quick_fit(dir.file("season.csv"), dir.file("fit")) == kExitOk);
    const std::string c0 = dir.file("fit/basic_chain0.csv");
    const std::string c1 = dir.file("fit/basic_chain1.csv");

    REQUIRE(run_cli({"predict", "--trace", c0, "--trace", c1, "--data", dir.file("season.csv"),
                     "--covariates", "observed", "--n-rep", "30", "--seed", "11", "--out",
                     dir.file("obs")}) == kExitOk);
    REQUIRE(run_cli({"predict", "--trace", c0, "--trace", c1, "--data", dir.file("season.csv"),
                     "--covariates", "zero", "--n-rep", "30", "--seed", "11", "--out",
                     dir.file("avg")}) == kExitOk);
    const auto obs_manifest = nlohmann::json::parse(slurp(dir.file("obs/predict_manifest.json")));
    const auto avg_manifest = nlohmann::json::parse(slurp(dir.file("avg/predict_manifest.json")));
    CHECK(obs_manifest.at("covariates") == "observed");
    CHECK(avg_manifest.at("covariates") == "zero");
    // Different covariate scenarios change the replicated tables.
    CHECK(slurp(dir.file("obs/league_table.csv")) != slurp(dir.file("avg/league_table.csv")));

    // Observed covariates need a data file, not a bare fixture list.
    std::ofstream(dir.file("fixtures.csv")) << "match_id,home_team,away_team\n1,Team01,Team02\n";
    CHECK(run_cli({"predict", "--trace", c0, "--fixtures", dir.file("fixtures.csv"),
                   "--covariates", "observed", "--out", dir.file("x")}) == kExitConfig);
  }

  TEST_CASE("scaled hierarchy flows through fit and summarize covariance") {
    TempDir dir("scaled");
    write_season_csv(demo_season(), dir.file("season.csv"));
    REQUIRE(quick_fit(dir.file("season.csv"), dir.file("fit"), "scaled-iw") == kExitOk);
    CHECK(fs::exists(dir.path / "fit" / "scaled-iw_chain0.csv"));
    const std::string summary = slurp(dir.file("fit/scaled-iw_summary.csv"));
    CHECK(summary.find("sigma2_alpha[0]") != std::string::npos);
    CHECK(summary.find("rho_beta[1][2]") != std::string::npos);

    CHECK(run_cli({"summarize", "--trace", dir.file("fit/scaled-iw_chain0.csv"), "--trace",
                   dir.file("fit/scaled-iw_chain1.csv"), "--select", "covariance", "--out",
                   dir.file("cov.csv")}) == kExitOk);
    const std::string cov = slurp(dir.file("cov.csv"));
    CHECK(cov.find("rho_alpha[0][1]") != std::string::npos);
  }
}
