#pragma once

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace volleymc {

// Raised by CSV readers; line is 1-based (header = line 1).
struct ParseError : std::runtime_error {
  ParseError(int line_number, const std::string& what)
      : std::runtime_error("line " + std::to_string(line_number) + ": " + what),
        line(line_number) {}
  int line;
};

// Counts for one skill (serve, attack, defence or block) of one team in one
// match.  "perfect" means point-winning touches (aces for serves); errors are
// touches conceding the point directly.
struct RawSkillCounts {
  long total = 0;
  long perfect = 0;
  long errors = 0;
};

// (perfect - errors) / total, in [-1, 1] whenever perfect + errors <= total.
double compute_efficiency(const RawSkillCounts& counts);

// Per-team-per-match efficiencies, already on the [-1, 1] scale.
struct SkillEfficiencies {
  double serve = 0.0;
  double attack = 0.0;
  double defence = 0.0;
  double block = 0.0;
};

// One match.  d_s / d_m are kept exactly as parsed (doubles) so the validator
// can flag non-binary or shuffled cells instead of the parser silently
// coercing them; clean data carries exact 0/1.
struct MatchRecord {
  int match_id = 0;
  int home = 0;  // team codes, 1..K
  int away = 0;
  long y_h = 0;  // points scored over the whole match
  long y_a = 0;
  int s_h = 0;  // sets won
  int s_a = 0;
  double d_s = 0.0;  // 1 when the match went to five sets
  double d_m = 0.0;  // 1 when the home side won
  SkillEfficiencies eff_home;
  SkillEfficiencies eff_away;
};

// Bijection between team names and codes 1..K.
class TeamIndex {
 public:
  TeamIndex() = default;
  explicit TeamIndex(std::vector<std::string> names) : names_(std::move(names)) {}

  int size() const { return static_cast<int>(names_.size()); }
  const std::string& name_of(int code) const { return names_.at(code - 1); }
  const std::vector<std::string>& names() const { return names_; }

  // 0 when the name is unknown.
  int code_of(const std::string& name) const;

 private:
  std::vector<std::string> names_;
};

// A season: team index, match list in chronological order, and the means that
// were subtracted from each covariate stream (all zero until
// center_covariates has run; centering already-centered data records zeros).
struct SeasonData {
  TeamIndex teams;
  std::vector<MatchRecord> matches;
  // Order: home serve, attack, defence, block, then the away four.
  std::array<double, 8> covariate_means{};
};

enum class CsvSchema {
  table1,      // efficiency columns, e.g. ser_eff_h
  raw_counts,  // (tot, per, err) triples, e.g. ser_tot_h, ser_per_h, ser_err_h
};

// Header-driven CSV reader.  Column order is free; `h`/`a` team-code columns
// are optional and take precedence over first-appearance numbering.  Type
// errors (missing column, non-numeric cell, negative count, duplicate
// match_id, inconsistent code mapping, empty file) raise ParseError; semantic
// rule violations are left for validate_season.
SeasonData parse_season_csv(const std::string& path, CsvSchema schema);
SeasonData parse_season_csv_text(const std::string& text, CsvSchema schema);

// Writes the table1 schema, including the code columns, with enough digits
// that parse(write(season)) reproduces every field exactly.
void write_season_csv(const SeasonData& season, const std::string& path);
std::string season_csv_text(const SeasonData& season);

struct Violation {
  int match_id = 0;
  std::string field;
  std::string message;
  // Recomputed correct value, where one exists (d_s/d_m inconsistencies).
  std::optional<double> expected;
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool clean() const { return violations.empty(); }
};

// Checks every record-level rule: legal set pairs (one side on exactly 3, the
// other on 0..2, five-set pairs only 3:2/2:3), d_s/d_m binary and consistent
// with the set counts, home != away, efficiencies finite and inside [-1, 1],
// match_ids contiguous from 1.
ValidationReport validate_season(const SeasonData& season);

// Recomputes d_s/d_m from the set counts for every row whose set pair is
// legal.  Rows with illegal set pairs are left untouched (they stay visible
// to validate_season); nothing else is repaired.
SeasonData repair_indicators(const SeasonData& season);

// Subtracts each of the eight covariate streams' own mean and records the
// means subtracted.  Centering a centered season is a no-op recording zeros.
SeasonData center_covariates(const SeasonData& season);

}  // namespace volleymc
