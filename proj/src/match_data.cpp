#include "volleymc/match_data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace volleymc {

double compute_efficiency(const RawSkillCounts& counts) {
  if (counts.total <= 0) {
    throw std::invalid_argument("efficiency undefined for zero skill total");
  }
  if (counts.perfect < 0 || counts.errors < 0 ||
      counts.perfect + counts.errors > counts.total) {
    throw std::invalid_argument("skill counts must satisfy perfect + errors <= total");
  }
  return static_cast<double>(counts.perfect - counts.errors) /
         static_cast<double>(counts.total);
}

int TeamIndex::code_of(const std::string& name) const {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i] == name) return static_cast<int>(i) + 1;
  }
  return 0;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  for (char c : line) {
    if (c == ',') {
      cells.push_back(cell);
      cell.clear();
    } else if (c != '\r') {
      cell += c;
    }
  }
  cells.push_back(cell);
  for (auto& s : cells) {
    const auto b = s.find_first_not_of(" \t");
    const auto e = s.find_last_not_of(" \t");
    s = (b == std::string::npos) ? std::string{} : s.substr(b, e - b + 1);
  }
  return cells;
}

double parse_double(const std::string& cell, int line, const std::string& col) {
  double value = 0.0;
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{} || ptr != end || cell.empty()) {
    throw ParseError(line, "non-numeric cell '" + cell + "' in column " + col);
  }
  return value;
}

long parse_count(const std::string& cell, int line, const std::string& col) {
  const double v = parse_double(cell, line, col);
  if (v < 0 || v != std::floor(v)) {
    throw ParseError(line, "column " + col + " must be a nonnegative integer, got '" + cell + "'");
  }
  return static_cast<long>(v);
}

struct HeaderIndex {
  std::map<std::string, int> pos;
  int require(const std::string& name) const {
    const auto it = pos.find(name);
    if (it == pos.end()) throw ParseError(1, "missing column '" + name + "'");
    return it->second;
  }
  std::optional<int> find(const std::string& name) const {
    const auto it = pos.find(name);
    if (it == pos.end()) return std::nullopt;
    return it->second;
  }
};

const char* kEffCols[8] = {"ser_eff_h", "att_eff_h", "def_eff_h", "blo_eff_h",
                           "ser_eff_a", "att_eff_a", "def_eff_a", "blo_eff_a"};
const char* kSkills[4] = {"ser", "att", "def", "blo"};

}  // namespace

SeasonData parse_season_csv_text(const std::string& text, CsvSchema schema) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ParseError(1, "empty file");
  const auto header_cells = split_csv_line(line);
  HeaderIndex header;
  for (std::size_t i = 0; i < header_cells.size(); ++i) {
    header.pos[header_cells[i]] = static_cast<int>(i);
  }

  const int c_id = header.require("match_id");
  const int c_home = header.require("home_team");
  const int c_away = header.require("away_team");
  const auto c_hcode = header.find("h");
  const auto c_acode = header.find("a");
  const int c_yh = header.require("y_h");
  const int c_ya = header.require("y_a");
  const int c_sh = header.require("s_h");
  const int c_sa = header.require("s_a");
  const int c_ds = header.require("d_s");
  const int c_dm = header.require("d_m");

  std::array<int, 8> c_eff{};
  std::array<std::array<int, 3>, 8> c_counts{};  // tot, per, err per stream
  if (schema == CsvSchema::table1) {
    for (int i = 0; i < 8; ++i) c_eff[i] = header.require(kEffCols[i]);
  } else {
    for (int side = 0; side < 2; ++side) {
      for (int s = 0; s < 4; ++s) {
        const std::string base = std::string(kSkills[s]) + "_";
        const std::string suffix = side == 0 ? "_h" : "_a";
        c_counts[side * 4 + s][0] = header.require(base + "tot" + suffix);
        c_counts[side * 4 + s][1] = header.require(base + "per" + suffix);
        c_counts[side * 4 + s][2] = header.require(base + "err" + suffix);
      }
    }
  }

  SeasonData season;
  std::vector<std::string> names;              // by first appearance
  std::map<std::string, int> explicit_codes;   // name -> declared code
  std::map<int, std::string> code_owners;      // declared code -> name
  std::set<int> seen_ids;

  struct PendingTeam {
    std::string name;
    int declared_code = 0;  // 0 = none
  };

  auto note_team = [&](const std::string& name, int declared, int line_no) {
    if (name.empty()) throw ParseError(line_no, "empty team name");
    if (std::find(names.begin(), names.end(), name) == names.end()) {
      names.push_back(name);
    }
    if (declared != 0) {
      const auto prev = explicit_codes.find(name);
      if (prev != explicit_codes.end() && prev->second != declared) {
        throw ParseError(line_no, "team '" + name + "' appears with codes " +
                                      std::to_string(prev->second) + " and " +
                                      std::to_string(declared));
      }
      const auto owner = code_owners.find(declared);
      if (owner != code_owners.end() && owner->second != name) {
        throw ParseError(line_no, "code " + std::to_string(declared) +
                                      " assigned to both '" + owner->second +
                                      "' and '" + name + "'");
      }
      explicit_codes[name] = declared;
      code_owners[declared] = name;
    }
  };

  struct RawRow {
    MatchRecord rec;
    std::string home_name, away_name;
  };
  std::vector<RawRow> rows;

  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto cells = split_csv_line(line);
    auto cell = [&](int idx) -> const std::string& {
      if (idx >= static_cast<int>(cells.size())) {
        throw ParseError(line_no, "row has fewer cells than the header");
      }
      return cells[idx];
    };

    RawRow row;
    row.rec.match_id = static_cast<int>(parse_count(cell(c_id), line_no, "match_id"));
    if (!seen_ids.insert(row.rec.match_id).second) {
      throw ParseError(line_no, "duplicate match_id " + std::to_string(row.rec.match_id));
    }
    row.home_name = cell(c_home);
    row.away_name = cell(c_away);
    const int hcode = c_hcode ? static_cast<int>(parse_count(cell(*c_hcode), line_no, "h")) : 0;
    const int acode = c_acode ? static_cast<int>(parse_count(cell(*c_acode), line_no, "a")) : 0;
    note_team(row.home_name, hcode, line_no);
    note_team(row.away_name, acode, line_no);

    row.rec.y_h = parse_count(cell(c_yh), line_no, "y_h");
    row.rec.y_a = parse_count(cell(c_ya), line_no, "y_a");
    row.rec.s_h = static_cast<int>(parse_count(cell(c_sh), line_no, "s_h"));
    row.rec.s_a = static_cast<int>(parse_count(cell(c_sa), line_no, "s_a"));
    row.rec.d_s = parse_double(cell(c_ds), line_no, "d_s");
    row.rec.d_m = parse_double(cell(c_dm), line_no, "d_m");

    double eff[8];
    if (schema == CsvSchema::table1) {
      for (int i = 0; i < 8; ++i) eff[i] = parse_double(cell(c_eff[i]), line_no, kEffCols[i]);
    } else {
      for (int i = 0; i < 8; ++i) {
        RawSkillCounts counts;
        counts.total = parse_count(cell(c_counts[i][0]), line_no, "tot");
        counts.perfect = parse_count(cell(c_counts[i][1]), line_no, "per");
        counts.errors = parse_count(cell(c_counts[i][2]), line_no, "err");
        try {
          eff[i] = compute_efficiency(counts);
        } catch (const std::invalid_argument& e) {
          throw ParseError(line_no, e.what());
        }
      }
    }
    row.rec.eff_home = {eff[0], eff[1], eff[2], eff[3]};
    row.rec.eff_away = {eff[4], eff[5], eff[6], eff[7]};
    rows.push_back(std::move(row));
  }

  if (rows.empty()) throw ParseError(line_no, "no matches in file");

  // Resolve codes: explicit codes must cover all teams and form 1..K; with no
  // code columns, first-appearance order defines them.
  const int K = static_cast<int>(names.size());
  std::vector<std::string> ordered(K);
  if (!explicit_codes.empty()) {
    if (static_cast<int>(explicit_codes.size()) != K) {
      throw ParseError(1, "code columns present but some teams never carry a code");
    }
    for (const auto& [name, code] : explicit_codes) {
      if (code < 1 || code > K) {
        throw ParseError(1, "team codes must cover 1.." + std::to_string(K) +
                                ", got " + std::to_string(code));
      }
      ordered[code - 1] = name;
    }
  } else {
    ordered = names;
  }
  season.teams = TeamIndex(ordered);

  for (auto& row : rows) {
    row.rec.home = season.teams.code_of(row.home_name);
    row.rec.away = season.teams.code_of(row.away_name);
    season.matches.push_back(row.rec);
  }
  std::sort(season.matches.begin(), season.matches.end(),
            [](const MatchRecord& a, const MatchRecord& b) { return a.match_id < b.match_id; });
  return season;
}

SeasonData parse_season_csv(const std::string& path, CsvSchema schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_season_csv_text(buf.str(), schema);
}

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string season_csv_text(const SeasonData& season) {
  std::ostringstream out;
  out << "match_id,home_team,away_team,h,a,y_h,y_a,s_h,s_a,d_s,d_m";
  for (const char* c : kEffCols) out << ',' << c;
  out << '\n';
  for (const auto& m : season.matches) {
    out << m.match_id << ',' << season.teams.name_of(m.home) << ','
        << season.teams.name_of(m.away) << ',' << m.home << ',' << m.away << ','
        << m.y_h << ',' << m.y_a << ',' << m.s_h << ',' << m.s_a << ','
        << fmt_double(m.d_s) << ',' << fmt_double(m.d_m);
    const double eff[8] = {m.eff_home.serve, m.eff_home.attack, m.eff_home.defence,
                           m.eff_home.block, m.eff_away.serve, m.eff_away.attack,
                           m.eff_away.defence, m.eff_away.block};
    for (double e : eff) out << ',' << fmt_double(e);
    out << '\n';
  }
  return out.str();
}

void write_season_csv(const SeasonData& season, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << season_csv_text(season);
}

ValidationReport validate_season(const SeasonData& season) {
  ValidationReport report;
  auto flag = [&](int id, const std::string& field, const std::string& msg,
                  std::optional<double> expected = std::nullopt) {
    report.violations.push_back({id, field, msg, expected});
  };

  int next_id = 1;
  for (const auto& m : season.matches) {
    if (m.match_id != next_id) {
      flag(m.match_id, "match_id",
           "match_ids must be contiguous from 1; expected " + std::to_string(next_id),
           next_id);
    }
    next_id = m.match_id + 1;

    if (m.home == m.away) flag(m.match_id, "away_team", "team plays itself");

    const bool legal_sets =
        (m.s_h == 3 && m.s_a >= 0 && m.s_a <= 2) || (m.s_a == 3 && m.s_h >= 0 && m.s_h <= 2);
    if (!legal_sets) {
      flag(m.match_id, "s_h",
           "illegal set pair " + std::to_string(m.s_h) + ":" + std::to_string(m.s_a) +
               " (one side must win exactly 3, the other 0..2)");
    }

    if (m.d_s != 0.0 && m.d_s != 1.0) {
      flag(m.match_id, "d_s", "d_s must be 0 or 1", legal_sets ? std::optional<double>(m.s_h + m.s_a == 5 ? 1.0 : 0.0) : std::nullopt);
    } else if (legal_sets) {
      const double want = (m.s_h + m.s_a == 5) ? 1.0 : 0.0;
      if (m.d_s != want) {
        flag(m.match_id, "d_s", "five-set indicator contradicts the set counts", want);
      }
    }

    if (m.d_m != 0.0 && m.d_m != 1.0) {
      flag(m.match_id, "d_m", "d_m must be 0 or 1", legal_sets ? std::optional<double>(m.s_h > m.s_a ? 1.0 : 0.0) : std::nullopt);
    } else if (legal_sets) {
      const double want = (m.s_h > m.s_a) ? 1.0 : 0.0;
      if (m.d_m != want) {
        flag(m.match_id, "d_m", "home-win indicator contradicts the set counts", want);
      }
    }

    const double eff[8] = {m.eff_home.serve, m.eff_home.attack, m.eff_home.defence,
                           m.eff_home.block, m.eff_away.serve, m.eff_away.attack,
                           m.eff_away.defence, m.eff_away.block};
    for (int i = 0; i < 8; ++i) {
      if (!std::isfinite(eff[i]) || eff[i] < -1.0 || eff[i] > 1.0) {
        flag(m.match_id, kEffCols[i], "efficiency outside [-1, 1]");
      }
    }
  }
  return report;
}

SeasonData repair_indicators(const SeasonData& season) {
  SeasonData fixed = season;
  for (auto& m : fixed.matches) {
    const bool legal_sets =
        (m.s_h == 3 && m.s_a >= 0 && m.s_a <= 2) || (m.s_a == 3 && m.s_h >= 0 && m.s_h <= 2);
    if (!legal_sets) continue;
    m.d_s = (m.s_h + m.s_a == 5) ? 1.0 : 0.0;
    m.d_m = (m.s_h > m.s_a) ? 1.0 : 0.0;
  }
  return fixed;
}

SeasonData center_covariates(const SeasonData& season) {
  SeasonData centered = season;
  const std::size_t n = season.matches.size();
  if (n == 0) return centered;
  std::array<double, 8> means{};
  for (const auto& m : season.matches) {
    const double eff[8] = {m.eff_home.serve, m.eff_home.attack, m.eff_home.defence,
                           m.eff_home.block, m.eff_away.serve, m.eff_away.attack,
                           m.eff_away.defence, m.eff_away.block};
    for (int i = 0; i < 8; ++i) means[i] += eff[i];
  }
  for (auto& v : means) v /= static_cast<double>(n);
  for (auto& m : centered.matches) {
    m.eff_home.serve -= means[0];
    m.eff_home.attack -= means[1];
    m.eff_home.defence -= means[2];
    m.eff_home.block -= means[3];
    m.eff_away.serve -= means[4];
    m.eff_away.attack -= means[5];
    m.eff_away.defence -= means[6];
    m.eff_away.block -= means[7];
  }
  centered.covariate_means = means;
  return centered;
}

}  // namespace volleymc
