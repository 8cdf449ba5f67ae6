#pragma once

#include "hazardlab/core.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace hazardlab::cli {

inline constexpr int kExitPass = 0;
inline constexpr int kExitInputError = 1;
inline constexpr int kExitVerificationFailure = 2;

const std::vector<std::string>& command_names();

struct RunConfig {
  std::string command;
  std::optional<std::string> scenario_path;
  std::string output_dir = ".";
  std::optional<double> t_max;
  std::optional<double> step;
  std::optional<std::vector<double>> grid_points;
  std::optional<std::uint64_t> seed;
  std::map<std::string, double> tolerances;
};

/// Parses "NAME=VALUE" into the map; InputError on malformed text.
void parse_tolerance(const std::string& text, std::map<std::string, double>& into);

/**
 * Runs one command: reads the scenario, writes CSV curves and report.json
 * into output_dir. Returns 0 on pass, 2 when a verification check fails
 * (including numerical breakdown), 1 on invalid input.
 */
int run(const RunConfig& config, std::ostream& log);

}  // namespace hazardlab::cli
