#ifndef DBAGUARD_CLI_HPP
#define DBAGUARD_CLI_HPP

#include <cstdint>
#include <iosfwd>
#include <string>

#include "dbaguard/config.hpp"
#include "dbaguard/simulator.hpp"

namespace dbaguard::cli {

// Stable process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitValidationFailure = 1;
inline constexpr int kExitConfigError = 2;

enum class OutputFormat { delimited, structured };

/// What was run, recorded in every output header.
struct RunManifest {
    std::string subcommand;
    std::string config_path;
    std::string output_path;
    std::uint64_t seed = 42;
    OutputFormat format = OutputFormat::delimited;
};

/// Entry point behind the dbaguard executable. Writes results to --out (or
/// `out` when absent) and diagnostics to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Honest sessions at 0, 50 and 100 km plus attack sessions on a small
/// (alpha, beta) grid for both receiver modes, each checked against the
/// closed forms. Scenario seeds are derived from `seed`.
ValidationReport run_validation_suite(const RunConfig& config);

/// Shortest round-trip decimal representation, '.' separator.
std::string format_number(double value);

}  // namespace dbaguard::cli

#endif  // DBAGUARD_CLI_HPP
