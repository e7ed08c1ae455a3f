#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "volleymc/match_data.hpp"
#include "volleymc/mcmc.hpp"
#include "volleymc/rng.hpp"

namespace volleymc {

// League points awarded to (winner, loser): 3-0 and 3-1 pay (3, 0), a
// five-set 3-2 pays (2, 1).  Throws std::invalid_argument on illegal pairs.
std::pair<int, int> league_points(int sets_winner, int sets_loser);
// Same, oriented as (home, away).
std::pair<int, int> league_points_home_away(int s_h, int s_a);

// One posterior draw, reduced to what replication needs: the centered
// effects, not the unconstrained stars.
struct PredictiveSample {
  double mu = 0.0;
  double lambda = 0.0;
  Eigen::MatrixXd alpha;  // K x 3 centered
  Eigen::MatrixXd beta;
  Eigen::Vector3d gamma = Eigen::Vector3d::Zero();
  Eigen::Vector4d eta = Eigen::Vector4d::Zero();
};

// Pulls mu, lambda, the centered alpha/beta columns, gamma and eta out of
// retained draws (pooled across chains, chain order then draw order).
std::vector<PredictiveSample> extract_predictive_samples(
    const std::vector<ChainTrace>& traces);

// A fixture: who plays whom, in chronological order.  Covariates default to
// zero - the centered-covariate average match - and can carry a scenario
// (already centered on the training means).
struct Fixture {
  int match_id = 0;
  int home = 0;  // codes 1..K against the trace's team list
  int away = 0;
  SkillEfficiencies cov_home;
  SkillEfficiencies cov_away;
};

struct MatchReplicate {
  long y_h = 0;
  long y_a = 0;
  int d_s = 0;
  int d_m = 0;
};

// Generative pass through the three modules in factorisation order: point
// totals from the Poisson intensities, then the five-set indicator given the
// replicated points, then the winner given points and the five-set draw.
MatchReplicate replicate_match(const PredictiveSample& sample, const Fixture& fixture,
                               Rng& rng);

struct LeagueRow {
  int team = 0;  // code
  long scored = 0;
  long conceded = 0;
  int wins = 0;
  int points = 0;
};

// Rows sorted into final standings: points, then wins, then point difference
// (scored - conceded), then team code.
struct LeagueTable {
  std::vector<LeagueRow> rows;
  // position_of[code - 1] is the team's 1-based final position.
  std::vector<int> position_of;
};

LeagueTable league_table_from_replicates(const std::vector<Fixture>& fixtures,
                                         const std::vector<MatchReplicate>& matches,
                                         int n_teams);
// Observed standings; wins and league points derive from the set counts.
LeagueTable league_table_observed(const SeasonData& season);

struct SeasonReplicate {
  std::vector<MatchReplicate> matches;
  LeagueTable table;
};

// n_rep full-season replications, one uniformly resampled posterior draw per
// replicate; replicate r uses the sub-stream derive_seed(seed, r), so results
// do not depend on scheduling.
std::vector<SeasonReplicate> replicate_season(const std::vector<PredictiveSample>& samples,
                                              const std::vector<Fixture>& fixtures,
                                              int n_teams, int n_rep, std::uint64_t seed);

// K x K matrix: entry (t, p) is the share of replicates placing team code
// t + 1 at position p + 1.  Rows sum to one.
Eigen::MatrixXd rank_probabilities(const std::vector<SeasonReplicate>& replicates,
                                   int n_teams);

// Running league-point totals after each of a team's own matches, teams in
// code order.  The observed variant reads the season's set counts; the
// replicated variant averages the trajectories over replicates.
std::vector<std::vector<int>> cumulative_points_observed(const SeasonData& season);
std::vector<std::vector<double>> cumulative_points_replicated(
    const std::vector<SeasonReplicate>& replicates, const std::vector<Fixture>& fixtures,
    int n_teams);

// --- prediction output files -------------------------------------------------

// team,scored_mean,scored_q025,... one row per team (code order), with
// observed columns when an observed season is supplied.
std::string league_summary_csv(const std::vector<SeasonReplicate>& replicates,
                               const TeamIndex& teams,
                               const std::optional<LeagueTable>& observed);
// team,p1,...,pK probability rows.
std::string rank_probabilities_csv(const Eigen::MatrixXd& probs, const TeamIndex& teams);
// team,match_day,observed,predicted_mean (observed blank when unknown).
std::string cumulative_points_csv(const std::vector<std::vector<double>>& predicted,
                                  const std::optional<std::vector<std::vector<int>>>& observed,
                                  const TeamIndex& teams);

}  // namespace volleymc
