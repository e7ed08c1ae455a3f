#include "volleymc/trace_io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "volleymc/match_data.hpp"

namespace volleymc {

namespace {

constexpr const char* kMagic = "# volleymc-trace ";

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string trace_to_text(const ChainTrace& trace) {
  nlohmann::ordered_json meta;
  meta["version"] = 1;
  meta["chain_id"] = trace.meta.chain_id;
  meta["master_seed"] = trace.meta.master_seed;
  meta["chain_seed"] = trace.meta.chain_seed;
  meta["config_hash"] = trace.meta.config_hash;
  meta["prior_variant"] = to_string(trace.meta.variant);
  meta["teams"] = trace.meta.teams;
  meta["covariate_means"] = trace.meta.covariate_means;
  meta["accept_rates"] = trace.accept_rates;

  std::ostringstream out;
  out << kMagic << meta.dump() << '\n';
  for (std::size_t i = 0; i < trace.names.size(); ++i) {
    if (i) out << ',';
    out << trace.names[i];
  }
  out << '\n';
  for (const auto& row : trace.data) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out << ',';
      out << fmt(row[i]);
    }
    out << '\n';
  }
  return out.str();
}

void write_trace(const ChainTrace& trace, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << trace_to_text(trace);
}

ChainTrace trace_from_text(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ParseError(1, "empty trace file");
  if (line.rfind(kMagic, 0) != 0) {
    throw ParseError(1, "missing trace metadata header");
  }
  ChainTrace trace;
  try {
    const auto meta = nlohmann::json::parse(line.substr(std::string(kMagic).size()));
    trace.meta.chain_id = meta.at("chain_id").get<int>();
    trace.meta.master_seed = meta.at("master_seed").get<std::uint64_t>();
    trace.meta.chain_seed = meta.at("chain_seed").get<std::uint64_t>();
    trace.meta.config_hash = meta.at("config_hash").get<std::string>();
    trace.meta.variant = prior_variant_from_string(meta.at("prior_variant"));
    trace.meta.teams = meta.at("teams").get<std::vector<std::string>>();
    const auto means = meta.at("covariate_means");
    for (int i = 0; i < 8; ++i) trace.meta.covariate_means[i] = means.at(i).get<double>();
    if (meta.contains("accept_rates")) {
      for (const auto& [k, v] : meta.at("accept_rates").items()) {
        trace.accept_rates[k] = v.get<double>();
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(1, std::string("bad trace metadata: ") + e.what());
  }

  if (!std::getline(in, line)) throw ParseError(2, "missing trace column header");
  {
    std::string name;
    std::istringstream hs(line);
    while (std::getline(hs, name, ',')) {
      if (!name.empty() && name.back() == '\r') name.pop_back();
      trace.names.push_back(name);
    }
  }
  if (trace.names.empty()) throw ParseError(2, "empty trace column header");

  int line_no = 2;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    std::vector<double> row;
    row.reserve(trace.names.size());
    const char* p = line.data();
    const char* end = p + line.size();
    if (end > p && end[-1] == '\r') --end;
    while (p <= end) {
      const char* cell_end = p;
      while (cell_end < end && *cell_end != ',') ++cell_end;
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(p, cell_end, v);
      if (ec != std::errc{} || ptr != cell_end) {
        throw ParseError(line_no, "non-numeric trace cell '" + std::string(p, cell_end) + "'");
      }
      row.push_back(v);
      if (cell_end == end) break;
      p = cell_end + 1;
    }
    if (row.size() != trace.names.size()) {
      throw ParseError(line_no, "expected " + std::to_string(trace.names.size()) +
                                    " cells, got " + std::to_string(row.size()));
    }
    trace.data.push_back(std::move(row));
  }
  return trace;
}

ChainTrace read_trace(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return trace_from_text(buf.str());
}

}  // namespace volleymc
