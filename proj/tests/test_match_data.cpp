#include <doctest.h>

#include <cmath>
#include <string>

#include "volleymc/match_data.hpp"

using namespace volleymc;

namespace {

// 2017-18 Serie A1 sample: the league's published example rows plus one
// filler match so every team code 1..12 appears.  The att/def/blo
// efficiencies are stand-ins; the tests only pin the published cells.
const char* kLeagueHeader =
    "match_id,home_team,away_team,h,a,y_h,y_a,s_h,s_a,d_s,d_m,"
    "ser_eff_h,att_eff_h,def_eff_h,blo_eff_h,ser_eff_a,att_eff_a,def_eff_a,blo_eff_a";

std::string league_sample_csv(bool include_shuffled_row) {
  std::string text = std::string(kLeagueHeader) + "\n";
  text += "1,Casalmaggiore,Conegliano,3,4,60,75,0,3,0,0,-0.17,0.31,0.22,0.11,-0.06,0.40,0.25,0.15\n";
  text += "2,Novara,Busto Arsizio,8,2,113,108,3,2,1,1,-0.09,0.35,0.20,0.12,-0.10,0.33,0.21,0.13\n";
  text += "3,Piacenza,Scandicci,10,12,40,75,0,3,0,0,-0.07,0.28,0.18,0.09,0.03,0.41,0.27,0.16\n";
  text += "4,San Casciano,Monza,11,7,96,94,3,1,0,1,-0.07,0.32,0.19,0.10,-0.07,0.30,0.20,0.12\n";
  text += "5,Bergamo,Pesaro,1,9,88,79,3,1,0,1,-0.05,0.29,0.21,0.08,-0.11,0.27,0.17,0.10\n";
  text += "6,Filottrano,Legnano,5,6,98,89,3,1,0,1,-0.08,0.30,0.16,0.09,-0.03,0.26,0.19,0.11\n";
  if (include_shuffled_row) {
    // The winner indicator and home serve efficiency arrive transposed:
    // d_m = -0.08 and ser_eff_h = 1 on a 3:0 home win.
    text += "7,Novara,Legnano,8,6,75,57,3,0,0,-0.08,1,0.34,0.23,0.14,-0.07,0.25,0.18,0.09\n";
  }
  return text;
}

}  // namespace

TEST_SUITE("match_data") {
  TEST_CASE("efficiency is (perfect - errors) / total") {
    CHECK(compute_efficiency({30, 12, 5}) == doctest::Approx(7.0 / 30.0).epsilon(1e-15));
    CHECK(compute_efficiency({50, 50, 0}) == doctest::Approx(1.0));
    CHECK(compute_efficiency({50, 0, 50}) == doctest::Approx(-1.0));
    CHECK_THROWS_AS(compute_efficiency({0, 0, 0}), std::invalid_argument);
    CHECK_THROWS_AS(compute_efficiency({10, 8, 3}), std::invalid_argument);  // 8+3 > 10
  }

  TEST_CASE("parses the league's published example rows verbatim") {
    const SeasonData season = parse_season_csv_text(league_sample_csv(false), CsvSchema::table1);
    REQUIRE(season.matches.size() == 6);
    REQUIRE(season.teams.size() == 12);

    // Codes follow the league's assignment, carried by the h/a columns.
    CHECK(season.teams.code_of("Bergamo") == 1);
    CHECK(season.teams.code_of("Busto Arsizio") == 2);
    CHECK(season.teams.code_of("Casalmaggiore") == 3);
    CHECK(season.teams.code_of("Conegliano") == 4);
    CHECK(season.teams.code_of("Filottrano") == 5);
    CHECK(season.teams.code_of("Legnano") == 6);
    CHECK(season.teams.code_of("Monza") == 7);
    CHECK(season.teams.code_of("Novara") == 8);
    CHECK(season.teams.code_of("Pesaro") == 9);
    CHECK(season.teams.code_of("Piacenza") == 10);
    CHECK(season.teams.code_of("San Casciano") == 11);
    CHECK(season.teams.code_of("Scandicci") == 12);

    const MatchRecord& m1 = season.matches[0];
    CHECK(m1.match_id == 1);
    CHECK(m1.home == 3);
    CHECK(m1.away == 4);
    CHECK(m1.y_h == 60);
    CHECK(m1.y_a == 75);
    CHECK(m1.s_h == 0);
    CHECK(m1.s_a == 3);
    CHECK(m1.d_s == 0.0);
    CHECK(m1.d_m == 0.0);
    CHECK(m1.eff_home.serve == doctest::Approx(-0.17));
    CHECK(m1.eff_away.serve == doctest::Approx(-0.06));

    const MatchRecord& m2 = season.matches[1];
    CHECK(m2.home == 8);
    CHECK(m2.away == 2);
    CHECK(m2.y_h == 113);
    CHECK(m2.y_a == 108);
    CHECK(m2.s_h == 3);
    CHECK(m2.s_a == 2);
    CHECK(m2.d_s == 1.0);
    CHECK(m2.d_m == 1.0);

    CHECK(validate_season(season).clean());
  }

  TEST_CASE("flags a transposed winner indicator and repairs it from the sets") {
    const SeasonData season = parse_season_csv_text(league_sample_csv(true), CsvSchema::table1);
    const ValidationReport report = validate_season(season);
    REQUIRE(report.violations.size() == 1);
    const Violation& v = report.violations[0];
    CHECK(v.match_id == 7);
    CHECK(v.field == "d_m");
    REQUIRE(v.expected.has_value());
    CHECK(*v.expected == 1.0);  // the home side won 3:0

    const SeasonData fixed = repair_indicators(season);
    CHECK(fixed.matches[6].d_m == 1.0);
    CHECK(fixed.matches[6].d_s == 0.0);
    CHECK(validate_season(fixed).clean());
    // Repair only touches the indicators; the suspicious efficiency stays.
    CHECK(fixed.matches[6].eff_home.serve == doctest::Approx(1.0));
  }

  TEST_CASE("repair leaves rows with illegal set pairs alone") {
    std::string text = std::string(kLeagueHeader) + "\n";
    text += "1,Alpha,Beta,1,2,80,75,3,3,0,1,0.1,0.1,0.1,0.1,0.1,0.1,0.1,0.1\n";
    const SeasonData season = parse_season_csv_text(text, CsvSchema::table1);
    const SeasonData fixed = repair_indicators(season);
    CHECK(fixed.matches[0].d_m == season.matches[0].d_m);
    CHECK_FALSE(validate_season(fixed).clean());
  }

  TEST_CASE("raw count triples produce the same season as precomputed efficiencies") {
    std::string text =
        "match_id,home_team,away_team,y_h,y_a,s_h,s_a,d_s,d_m,"
        "ser_tot_h,ser_per_h,ser_err_h,att_tot_h,att_per_h,att_err_h,"
        "def_tot_h,def_per_h,def_err_h,blo_tot_h,blo_per_h,blo_err_h,"
        "ser_tot_a,ser_per_a,ser_err_a,att_tot_a,att_per_a,att_err_a,"
        "def_tot_a,def_per_a,def_err_a,blo_tot_a,blo_per_a,blo_err_a\n";
    text +=
        "1,Alpha,Beta,75,60,3,0,0,1,"
        "90,10,13,120,55,15,80,30,10,40,12,6,"
        "85,8,12,110,45,20,70,25,12,35,9,8\n";
    const SeasonData season = parse_season_csv_text(text, CsvSchema::raw_counts);
    REQUIRE(season.matches.size() == 1);
    const MatchRecord& m = season.matches[0];
    CHECK(m.eff_home.serve == doctest::Approx((10.0 - 13.0) / 90.0).epsilon(1e-15));
    CHECK(m.eff_home.attack == doctest::Approx(40.0 / 120.0).epsilon(1e-15));
    CHECK(m.eff_home.defence == doctest::Approx(20.0 / 80.0).epsilon(1e-15));
    CHECK(m.eff_home.block == doctest::Approx(6.0 / 40.0).epsilon(1e-15));
    CHECK(m.eff_away.serve == doctest::Approx(-4.0 / 85.0).epsilon(1e-15));
    CHECK(validate_season(season).clean());
  }

  TEST_CASE("raw count parser reports impossible triples with the line number") {
    std::string text =
        "match_id,home_team,away_team,y_h,y_a,s_h,s_a,d_s,d_m,"
        "ser_tot_h,ser_per_h,ser_err_h,att_tot_h,att_per_h,att_err_h,"
        "def_tot_h,def_per_h,def_err_h,blo_tot_h,blo_per_h,blo_err_h,"
        "ser_tot_a,ser_per_a,ser_err_a,att_tot_a,att_per_a,att_err_a,"
        "def_tot_a,def_per_a,def_err_a,blo_tot_a,blo_per_a,blo_err_a\n";
    text +=
        "1,Alpha,Beta,75,60,3,0,0,1,"
        "90,10,13,120,55,15,80,30,10,40,12,6,"
        "85,8,12,110,45,20,70,25,12,35,9,8\n";
    text +=
        "2,Beta,Alpha,70,66,3,1,0,1,"
        "90,80,20,120,55,15,80,30,10,40,12,6,"  // 80+20 > 90 serves
        "85,8,12,110,45,20,70,25,12,35,9,8\n";
    try {
      parse_season_csv_text(text, CsvSchema::raw_counts);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.line == 3);
    }
  }

  TEST_CASE("write then parse reproduces every field bit for bit") {
    std::string text = std::string(kLeagueHeader) + "\n";
    // Efficiencies that are not exactly representable in short decimals.
    text += "1,Alpha,Beta,1,2,97,88,3,1,0,1,"
            "0.333333333333333315,0.1,0.2,0.3,-0.7142857142857143,0.4,0.5,0.6\n";
    text += "2,Beta,Alpha,2,1,75,99,1,3,0,0,0.11,0.21,0.31,0.41,0.51,0.61,0.71,0.81\n";
    const SeasonData season = parse_season_csv_text(text, CsvSchema::table1);
    const SeasonData again = parse_season_csv_text(season_csv_text(season), CsvSchema::table1);
    REQUIRE(again.matches.size() == season.matches.size());
    CHECK(again.teams.names() == season.teams.names());
    for (std::size_t i = 0; i < season.matches.size(); ++i) {
      const MatchRecord& a = season.matches[i];
      const MatchRecord& b = again.matches[i];
      CHECK(a.match_id == b.match_id);
      CHECK(a.home == b.home);
      CHECK(a.away == b.away);
      CHECK(a.y_h == b.y_h);
      CHECK(a.y_a == b.y_a);
      CHECK(a.s_h == b.s_h);
      CHECK(a.s_a == b.s_a);
      CHECK(a.d_s == b.d_s);
      CHECK(a.d_m == b.d_m);
      CHECK(a.eff_home.serve == b.eff_home.serve);
      CHECK(a.eff_home.attack == b.eff_home.attack);
      CHECK(a.eff_away.defence == b.eff_away.defence);
      CHECK(a.eff_away.block == b.eff_away.block);
    }
  }

  TEST_CASE("rows are ordered by match_id regardless of file order") {
    std::string text = std::string(kLeagueHeader) + "\n";
    text += "2,Beta,Alpha,2,1,75,99,1,3,0,0,0.1,0.1,0.1,0.1,0.1,0.1,0.1,0.1\n";
    text += "1,Alpha,Beta,1,2,97,88,3,1,0,1,0.2,0.2,0.2,0.2,0.2,0.2,0.2,0.2\n";
    const SeasonData season = parse_season_csv_text(text, CsvSchema::table1);
    CHECK(season.matches[0].match_id == 1);
    CHECK(season.matches[1].match_id == 2);
  }

  TEST_CASE("parser errors carry 1-based line numbers") {
    SUBCASE("missing column") {
      try {
        parse_season_csv_text("match_id,home_team\n1,Alpha\n", CsvSchema::table1);
        FAIL("expected ParseError");
      } catch (const ParseError& e) {
        CHECK(e.line == 1);
      }
    }
    SUBCASE("non-numeric cell") {
      std::string text = std::string(kLeagueHeader) + "\n";
      text += "1,Alpha,Beta,1,2,97,88,3,1,0,1,0.1,0.1,0.1,0.1,0.1,0.1,0.1,0.1\n";
      text += "2,Beta,Alpha,2,1,oops,99,1,3,0,0,0.1,0.1,0.1,0.1,0.1,0.1,0.1,0.1\n";
      try {
        parse_season_csv_text(text, CsvSchema::table1);
        FAIL("expected ParseError");
      } catch (const ParseError& e) {
        CHECK(e.line == 3);
      }
    }
    SUBCASE("duplicate match_id") {
      std::string text = std::string(kLeagueHeader) + "\n";
      text += "1,Alpha,Beta,1,2,97,88,3,1,0,1,0.1,0.1,0.1,0.1,0.1,0.1,0.1,0.1\n";
      text += "1,Beta,Alpha,2,1,75,99,1,3,0,0,0.1,0.1,0.1,0.1,0.1,0.1,0.1,0.1\n";
      CHECK_THROWS_AS(parse_season_csv_text(text, CsvSchema::table1), ParseError);
    }
    SUBCASE("empty input") {
      CHECK_THROWS_AS(parse_season_csv_text("", CsvSchema::table1), ParseError);
    }
  }

  TEST_CASE("team codes must form a bijection with the names") {
    SUBCASE("one name under two codes") {
      std::string text = std::string(kLeagueHeader) + "\n";
      text += "1,Alpha,Beta,1,2,97,88,3,1,0,1,0.1,0.1,0.1,0.1,0.1,0.1,0.1,0.1\n";
      text += "2,Alpha,Beta,2,1,75,99,1,3,0,0,0.1,0.1,0.1,0.1,0.1,0.1,0.1,0.1\n";
      CHECK_THROWS_AS(parse_season_csv_text(text, CsvSchema::table1), ParseError);
    }
    SUBCASE("codes leaving a gap") {
      std::string text = std::string(kLeagueHeader) + "\n";
      text += "1,Alpha,Beta,1,3,97,88,3,1,0,1,0.1,0.1,0.1,0.1,0.1,0.1,0.1,0.1\n";
      CHECK_THROWS_AS(parse_season_csv_text(text, CsvSchema::table1), ParseError);
    }
  }

  TEST_CASE("semantic violations are reported per rule") {
    std::string text = std::string(kLeagueHeader) + "\n";
    // id 1: fine.  id 2: team plays itself + illegal sets.  id 4: gap in ids,
    // d_s contradicting a 3:1 result, efficiency out of range.
    text += "1,Alpha,Beta,1,2,97,88,3,1,0,1,0.1,0.1,0.1,0.1,0.1,0.1,0.1,0.1\n";
    text += "2,Alpha,Alpha,1,1,80,80,3,3,0,1,0.1,0.1,0.1,0.1,0.1,0.1,0.1,0.1\n";
    text += "4,Beta,Alpha,2,1,75,99,1,3,1,0,1.5,0.1,0.1,0.1,0.1,0.1,0.1,0.1\n";
    const SeasonData season = parse_season_csv_text(text, CsvSchema::table1);
    const ValidationReport report = validate_season(season);
    auto has = [&](int id, const std::string& field) {
      for (const Violation& v : report.violations) {
        if (v.match_id == id && v.field == field) return true;
      }
      return false;
    };
    CHECK(has(2, "away_team"));  // plays itself
    CHECK(has(2, "s_h"));        // 3:3
    CHECK(has(4, "match_id"));   // gap: expected 3
    CHECK(has(4, "d_s"));        // 1:3 is four sets
    CHECK(has(4, "ser_eff_h"));  // 1.5 out of range
    CHECK_FALSE(has(1, "d_s"));
  }

  TEST_CASE("centering subtracts per-stream means and records them") {
    std::string text = std::string(kLeagueHeader) + "\n";
    text += "1,Alpha,Beta,1,2,97,88,3,1,0,1,0.1,0.3,0.5,0.7,0.2,0.4,0.6,0.8\n";
    text += "2,Beta,Alpha,2,1,75,99,1,3,0,0,0.3,0.5,0.7,0.9,0.4,0.6,0.8,1.0\n";
    const SeasonData season = parse_season_csv_text(text, CsvSchema::table1);
    const SeasonData centered = center_covariates(season);
    CHECK(centered.covariate_means[0] == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(centered.covariate_means[7] == doctest::Approx(0.9).epsilon(1e-15));
    CHECK(centered.matches[0].eff_home.serve == doctest::Approx(-0.1).epsilon(1e-12));
    CHECK(centered.matches[1].eff_home.serve == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(centered.matches[0].eff_away.block == doctest::Approx(-0.1).epsilon(1e-12));

    // Centering a centered season is a no-op that records (numerically) zero
    // means.
    const SeasonData twice = center_covariates(centered);
    for (int i = 0; i < 8; ++i) {
      CHECK(std::abs(twice.covariate_means[i]) < 1e-12);
    }
    CHECK(twice.matches[0].eff_home.serve ==
          doctest::Approx(centered.matches[0].eff_home.serve).epsilon(1e-12));
  }

  TEST_CASE("team index maps names to codes and back") {
    const TeamIndex idx({"Ada", "Bea", "Cleo"});
    CHECK(idx.size() == 3);
    CHECK(idx.code_of("Bea") == 2);
    CHECK(idx.code_of("Nobody") == 0);
    CHECK(idx.name_of(3) == "Cleo");
    CHECK_THROWS_AS(idx.name_of(4), std::out_of_range);
  }
}
