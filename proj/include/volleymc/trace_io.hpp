#pragma once

#include <string>
#include <vector>

#include "volleymc/mcmc.hpp"

namespace volleymc {

// Trace files are CSV with one leading metadata line:
//   # volleymc-trace {"version":1,"chain_id":0,...}
//   mu,lambda,alpha_star[1][0],...
//   4.43,0.03,...
// Values are written with 17 significant digits, so read(write(trace))
// reproduces every number bit for bit.
void write_trace(const ChainTrace& trace, const std::string& path);
std::string trace_to_text(const ChainTrace& trace);

// Raises ParseError (with the 1-based line number) on malformed files.
ChainTrace read_trace(const std::string& path);
ChainTrace trace_from_text(const std::string& text);

}  // namespace volleymc
