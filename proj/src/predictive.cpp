#include "volleymc/predictive.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "volleymc/diagnostics.hpp"
#include "volleymc/model_core.hpp"

namespace volleymc {

namespace {

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

// Same overflow guard the likelihood uses: exp(700) is the last representable
// decade, and a posterior draw far beyond it is a numerical fault, not data.
double checked_intensity(double log_theta) {
  if (!(log_theta <= 700.0)) {
    throw std::overflow_error("scoring intensity overflows: log intensity " +
                              std::to_string(log_theta));
  }
  return std::exp(log_theta);
}

}  // namespace

std::pair<int, int> league_points(int sets_winner, int sets_loser) {
  if (sets_winner != 3 || sets_loser < 0 || sets_loser > 2) {
    throw std::invalid_argument("illegal set score " + std::to_string(sets_winner) + "-" +
                                std::to_string(sets_loser) +
                                ": the winner takes exactly 3 sets, the loser 0-2");
  }
  if (sets_loser == 2) return {2, 1};
  return {3, 0};
}

std::pair<int, int> league_points_home_away(int s_h, int s_a) {
  if (s_h > s_a) {
    auto [w, l] = league_points(s_h, s_a);
    return {w, l};
  }
  auto [w, l] = league_points(s_a, s_h);
  return {l, w};
}

std::vector<PredictiveSample> extract_predictive_samples(
    const std::vector<ChainTrace>& traces) {
  if (traces.empty()) throw std::invalid_argument("no traces supplied");
  const int n_teams = static_cast<int>(traces.front().meta.teams.size());
  if (n_teams < 2) throw std::invalid_argument("trace metadata lists fewer than two teams");

  std::vector<PredictiveSample> samples;
  for (const ChainTrace& trace : traces) {
    if (static_cast<int>(trace.meta.teams.size()) != n_teams) {
      throw std::invalid_argument("traces disagree on the number of teams");
    }
    const std::vector<double> mu = trace.column("mu");
    const std::vector<double> lambda = trace.column("lambda");
    std::vector<std::vector<double>> alpha_cols(3 * static_cast<std::size_t>(n_teams));
    std::vector<std::vector<double>> beta_cols(3 * static_cast<std::size_t>(n_teams));
    for (int t = 0; t < n_teams; ++t) {
      for (int j = 0; j < 3; ++j) {
        const std::string suffix =
            "[" + std::to_string(t + 1) + "][" + std::to_string(j) + "]";
        alpha_cols[static_cast<std::size_t>(3 * t + j)] = trace.column("alpha" + suffix);
        beta_cols[static_cast<std::size_t>(3 * t + j)] = trace.column("beta" + suffix);
      }
    }
    std::vector<std::vector<double>> gamma_cols(3);
    for (int j = 0; j < 3; ++j) {
      gamma_cols[static_cast<std::size_t>(j)] = trace.column("gamma[" + std::to_string(j) + "]");
    }
    std::vector<std::vector<double>> eta_cols(4);
    for (int j = 0; j < 4; ++j) {
      eta_cols[static_cast<std::size_t>(j)] = trace.column("eta[" + std::to_string(j) + "]");
    }

    const std::size_t n = mu.size();
    for (std::size_t i = 0; i < n; ++i) {
      PredictiveSample s;
      s.mu = mu[i];
      s.lambda = lambda[i];
      s.alpha.resize(n_teams, 3);
      s.beta.resize(n_teams, 3);
      for (int t = 0; t < n_teams; ++t) {
        for (int j = 0; j < 3; ++j) {
          s.alpha(t, j) = alpha_cols[static_cast<std::size_t>(3 * t + j)][i];
          s.beta(t, j) = beta_cols[static_cast<std::size_t>(3 * t + j)][i];
        }
      }
      for (int j = 0; j < 3; ++j) s.gamma[j] = gamma_cols[static_cast<std::size_t>(j)][i];
      for (int j = 0; j < 4; ++j) s.eta[j] = eta_cols[static_cast<std::size_t>(j)][i];
      samples.push_back(std::move(s));
    }
  }
  if (samples.empty()) throw std::invalid_argument("traces contain no retained draws");
  return samples;
}

MatchReplicate replicate_match(const PredictiveSample& sample, const Fixture& fixture,
                               Rng& rng) {
  const int h = fixture.home - 1;
  const int a = fixture.away - 1;
  if (h < 0 || h >= sample.alpha.rows() || a < 0 || a >= sample.alpha.rows() || h == a) {
    throw std::invalid_argument("fixture team codes out of range");
  }

  const double log_theta_h =
      sample.mu + sample.lambda +
      (sample.alpha(h, 0) + sample.alpha(h, 1) * fixture.cov_home.attack +
       sample.alpha(h, 2) * fixture.cov_home.serve) +
      (sample.beta(a, 0) + sample.beta(a, 1) * fixture.cov_away.defence +
       sample.beta(a, 2) * fixture.cov_away.block);
  const double log_theta_a =
      sample.mu +
      (sample.alpha(a, 0) + sample.alpha(a, 1) * fixture.cov_away.attack +
       sample.alpha(a, 2) * fixture.cov_away.serve) +
      (sample.beta(h, 0) + sample.beta(h, 1) * fixture.cov_home.defence +
       sample.beta(h, 2) * fixture.cov_home.block);

  MatchReplicate rep;
  rep.y_h = rng.poisson(checked_intensity(log_theta_h));
  rep.y_a = rng.poisson(checked_intensity(log_theta_a));

  const double g_sets = sample.gamma[0] + sample.gamma[1] * static_cast<double>(rep.y_h) +
                        sample.gamma[2] * static_cast<double>(rep.y_a);
  rep.d_s = rng.uniform() < inv_logit(g_sets) ? 1 : 0;

  const double g_match = sample.eta[0] + sample.eta[1] * static_cast<double>(rep.y_h) +
                         sample.eta[2] * static_cast<double>(rep.y_a) +
                         sample.eta[3] * static_cast<double>(rep.d_s);
  rep.d_m = rng.uniform() < inv_logit(g_match) ? 1 : 0;
  return rep;
}

namespace {

LeagueTable finalize_table(std::vector<LeagueRow> rows, int n_teams) {
  std::sort(rows.begin(), rows.end(), [](const LeagueRow& x, const LeagueRow& y) {
    if (x.points != y.points) return x.points > y.points;
    if (x.wins != y.wins) return x.wins > y.wins;
    const long dx = x.scored - x.conceded;
    const long dy = y.scored - y.conceded;
    if (dx != dy) return dx > dy;
    return x.team < y.team;
  });
  LeagueTable table;
  table.position_of.assign(static_cast<std::size_t>(n_teams), 0);
  for (std::size_t p = 0; p < rows.size(); ++p) {
    table.position_of[static_cast<std::size_t>(rows[p].team - 1)] = static_cast<int>(p) + 1;
  }
  table.rows = std::move(rows);
  return table;
}

std::vector<LeagueRow> blank_rows(int n_teams) {
  std::vector<LeagueRow> rows(static_cast<std::size_t>(n_teams));
  for (int t = 0; t < n_teams; ++t) rows[static_cast<std::size_t>(t)].team = t + 1;
  return rows;
}

}  // namespace

LeagueTable league_table_from_replicates(const std::vector<Fixture>& fixtures,
                                         const std::vector<MatchReplicate>& matches,
                                         int n_teams) {
  if (fixtures.size() != matches.size()) {
    throw std::invalid_argument("fixtures and replicates differ in length");
  }
  std::vector<LeagueRow> rows = blank_rows(n_teams);
  for (std::size_t m = 0; m < fixtures.size(); ++m) {
    const Fixture& f = fixtures[m];
    const MatchReplicate& r = matches[m];
    LeagueRow& home = rows[static_cast<std::size_t>(f.home - 1)];
    LeagueRow& away = rows[static_cast<std::size_t>(f.away - 1)];
    home.scored += r.y_h;
    home.conceded += r.y_a;
    away.scored += r.y_a;
    away.conceded += r.y_h;
    // A five-set win pays 2 points and leaves 1 to the loser; otherwise 3-0.
    const int win_pts = r.d_s ? 2 : 3;
    const int lose_pts = r.d_s ? 1 : 0;
    if (r.d_m) {
      home.wins += 1;
      home.points += win_pts;
      away.points += lose_pts;
    } else {
      away.wins += 1;
      away.points += win_pts;
      home.points += lose_pts;
    }
  }
  return finalize_table(std::move(rows), n_teams);
}

LeagueTable league_table_observed(const SeasonData& season) {
  const int n_teams = static_cast<int>(season.teams.size());
  std::vector<LeagueRow> rows = blank_rows(n_teams);
  for (const MatchRecord& m : season.matches) {
    LeagueRow& home = rows[static_cast<std::size_t>(m.home - 1)];
    LeagueRow& away = rows[static_cast<std::size_t>(m.away - 1)];
    home.scored += m.y_h;
    home.conceded += m.y_a;
    away.scored += m.y_a;
    away.conceded += m.y_h;
    auto [hp, ap] = league_points_home_away(m.s_h, m.s_a);
    home.points += hp;
    away.points += ap;
    if (m.s_h > m.s_a) {
      home.wins += 1;
    } else {
      away.wins += 1;
    }
  }
  return finalize_table(std::move(rows), n_teams);
}

std::vector<SeasonReplicate> replicate_season(const std::vector<PredictiveSample>& samples,
                                              const std::vector<Fixture>& fixtures,
                                              int n_teams, int n_rep, std::uint64_t seed) {
  if (samples.empty()) throw std::invalid_argument("no posterior samples to replicate from");
  if (n_rep <= 0) throw std::invalid_argument("n_rep must be positive");
  std::vector<SeasonReplicate> reps;
  reps.reserve(static_cast<std::size_t>(n_rep));
  for (int r = 0; r < n_rep; ++r) {
    Rng rng(Rng::derive_seed(seed, static_cast<std::uint64_t>(r)));
    const PredictiveSample& sample = samples[rng.uniform_index(samples.size())];
    SeasonReplicate rep;
    rep.matches.reserve(fixtures.size());
    for (const Fixture& f : fixtures) {
      rep.matches.push_back(replicate_match(sample, f, rng));
    }
    rep.table = league_table_from_replicates(fixtures, rep.matches, n_teams);
    reps.push_back(std::move(rep));
  }
  return reps;
}

Eigen::MatrixXd rank_probabilities(const std::vector<SeasonReplicate>& replicates,
                                   int n_teams) {
  if (replicates.empty()) throw std::invalid_argument("no replicates supplied");
  Eigen::MatrixXd probs = Eigen::MatrixXd::Zero(n_teams, n_teams);
  for (const SeasonReplicate& rep : replicates) {
    for (int t = 0; t < n_teams; ++t) {
      const int pos = rep.table.position_of[static_cast<std::size_t>(t)];
      probs(t, pos - 1) += 1.0;
    }
  }
  probs /= static_cast<double>(replicates.size());
  return probs;
}

namespace {

// Per-team running league points, one entry per match the team itself plays.
std::vector<std::vector<int>> trajectories(
    const std::vector<std::pair<int, int>>& home_away_codes,
    const std::vector<std::pair<int, int>>& home_away_points, int n_teams) {
  std::vector<std::vector<int>> traj(static_cast<std::size_t>(n_teams));
  std::vector<int> running(static_cast<std::size_t>(n_teams), 0);
  for (std::size_t m = 0; m < home_away_codes.size(); ++m) {
    const auto [h, a] = home_away_codes[m];
    const auto [hp, ap] = home_away_points[m];
    running[static_cast<std::size_t>(h - 1)] += hp;
    running[static_cast<std::size_t>(a - 1)] += ap;
    traj[static_cast<std::size_t>(h - 1)].push_back(running[static_cast<std::size_t>(h - 1)]);
    traj[static_cast<std::size_t>(a - 1)].push_back(running[static_cast<std::size_t>(a - 1)]);
  }
  return traj;
}

}  // namespace

std::vector<std::vector<int>> cumulative_points_observed(const SeasonData& season) {
  std::vector<std::pair<int, int>> codes;
  std::vector<std::pair<int, int>> points;
  codes.reserve(season.matches.size());
  points.reserve(season.matches.size());
  for (const MatchRecord& m : season.matches) {
    codes.emplace_back(m.home, m.away);
    points.push_back(league_points_home_away(m.s_h, m.s_a));
  }
  return trajectories(codes, points, static_cast<int>(season.teams.size()));
}

std::vector<std::vector<double>> cumulative_points_replicated(
    const std::vector<SeasonReplicate>& replicates, const std::vector<Fixture>& fixtures,
    int n_teams) {
  if (replicates.empty()) throw std::invalid_argument("no replicates supplied");
  std::vector<std::pair<int, int>> codes;
  codes.reserve(fixtures.size());
  for (const Fixture& f : fixtures) codes.emplace_back(f.home, f.away);

  std::vector<std::vector<double>> mean;
  for (std::size_t r = 0; r < replicates.size(); ++r) {
    std::vector<std::pair<int, int>> points;
    points.reserve(fixtures.size());
    for (const MatchReplicate& m : replicates[r].matches) {
      const int win_pts = m.d_s ? 2 : 3;
      const int lose_pts = m.d_s ? 1 : 0;
      points.emplace_back(m.d_m ? win_pts : lose_pts, m.d_m ? lose_pts : win_pts);
    }
    const std::vector<std::vector<int>> traj = trajectories(codes, points, n_teams);
    if (mean.empty()) {
      mean.resize(traj.size());
      for (std::size_t t = 0; t < traj.size(); ++t) {
        mean[t].assign(traj[t].size(), 0.0);
      }
    }
    for (std::size_t t = 0; t < traj.size(); ++t) {
      for (std::size_t d = 0; d < traj[t].size(); ++d) {
        mean[t][d] += static_cast<double>(traj[t][d]);
      }
    }
  }
  for (auto& row : mean) {
    for (double& v : row) v /= static_cast<double>(replicates.size());
  }
  return mean;
}

std::string league_summary_csv(const std::vector<SeasonReplicate>& replicates,
                               const TeamIndex& teams,
                               const std::optional<LeagueTable>& observed) {
  const int n_teams = static_cast<int>(teams.size());
  std::ostringstream out;
  out << "team,position_mean";
  for (const char* metric : {"points", "wins", "scored", "conceded"}) {
    out << ',' << metric << "_mean," << metric << "_q025," << metric << "_q975";
  }
  if (observed) {
    out << ",observed_position,observed_points,observed_wins,observed_scored,"
           "observed_conceded";
  }
  out << '\n';

  for (int t = 0; t < n_teams; ++t) {
    std::vector<double> position, points, wins, scored, conceded;
    position.reserve(replicates.size());
    points.reserve(replicates.size());
    wins.reserve(replicates.size());
    scored.reserve(replicates.size());
    conceded.reserve(replicates.size());
    for (const SeasonReplicate& rep : replicates) {
      position.push_back(static_cast<double>(rep.table.position_of[static_cast<std::size_t>(t)]));
      for (const LeagueRow& row : rep.table.rows) {
        if (row.team == t + 1) {
          points.push_back(static_cast<double>(row.points));
          wins.push_back(static_cast<double>(row.wins));
          scored.push_back(static_cast<double>(row.scored));
          conceded.push_back(static_cast<double>(row.conceded));
          break;
        }
      }
    }
    const double n = static_cast<double>(replicates.size());
    auto mean_of = [n](const std::vector<double>& v) {
      return std::accumulate(v.begin(), v.end(), 0.0) / n;
    };
    out << teams.name_of(t + 1) << ',' << format_double(mean_of(position));
    for (const std::vector<double>* v : {&points, &wins, &scored, &conceded}) {
      out << ',' << format_double(mean_of(*v)) << ','
          << format_double(quantile_type7(*v, 0.025)) << ','
          << format_double(quantile_type7(*v, 0.975));
    }
    if (observed) {
      const LeagueRow* obs = nullptr;
      for (const LeagueRow& row : observed->rows) {
        if (row.team == t + 1) {
          obs = &row;
          break;
        }
      }
      out << ',' << observed->position_of[static_cast<std::size_t>(t)] << ',' << obs->points
          << ',' << obs->wins << ',' << obs->scored << ',' << obs->conceded;
    }
    out << '\n';
  }
  return out.str();
}

std::string rank_probabilities_csv(const Eigen::MatrixXd& probs, const TeamIndex& teams) {
  const int n_teams = static_cast<int>(teams.size());
  std::ostringstream out;
  out << "team";
  for (int p = 1; p <= n_teams; ++p) out << ",p" << p;
  out << '\n';
  for (int t = 0; t < n_teams; ++t) {
    out << teams.name_of(t + 1);
    for (int p = 0; p < n_teams; ++p) out << ',' << format_double(probs(t, p));
    out << '\n';
  }
  return out.str();
}

std::string cumulative_points_csv(const std::vector<std::vector<double>>& predicted,
                                  const std::optional<std::vector<std::vector<int>>>& observed,
                                  const TeamIndex& teams) {
  std::ostringstream out;
  out << "team,match_day,observed,predicted_mean\n";
  for (std::size_t t = 0; t < predicted.size(); ++t) {
    for (std::size_t d = 0; d < predicted[t].size(); ++d) {
      out << teams.name_of(static_cast<int>(t) + 1) << ',' << d + 1 << ',';
      if (observed && t < observed->size() && d < (*observed)[t].size()) {
        out << (*observed)[t][d];
      }
      out << ',' << format_double(predicted[t][d]) << '\n';
    }
  }
  return out.str();
}

}  // namespace volleymc
