#pragma once

#include <cstdint>
#include <exception>
#include <optional>
#include <string>
#include <string_view>

#include "margulis/hyperbolic.hpp"
#include "margulis/region.hpp"

namespace margulis::cli {

enum class OutputFormat { json, csv };
enum class MapChoice { h, f, fh };

// Process exit codes; exactly one applies to every run.
enum ExitCode : int {
  kSuccess = 0,
  kInputError = 1,
  kCertificationFailure = 2,
  kPrecisionFailure = 3,
};

struct RunConfig {
  std::string angle_spec = "golden";
  double epsilon = 0.1;
  int depth = 30;
  std::optional<int> guard_depth;  // depth + 40 when unset
  double r_max = 1e6;
  std::size_t samples = 1000;
  std::uint64_t seed = 42;
  OutputFormat format = OutputFormat::json;
  std::string output_path;  // empty: standard output
  MapChoice map = MapChoice::h;

  // Throws InputError when a field is out of range.
  void validate() const;
  AngleOptions angle_options() const;
};

struct CommandResult {
  int exit_code = kSuccess;
  std::string document;    // emitted on success and on certification failure
  std::string diagnostic;  // human-readable reason for a nonzero exit
};

CommandResult cmd_decompose(const RunConfig& config);
CommandResult cmd_sample(const RunConfig& config);
CommandResult cmd_verify(const RunConfig& config);
CommandResult cmd_distort(const RunConfig& config);

// Parses argv, runs one subcommand, writes its document, returns the exit code.
int run(int argc, const char* const* argv);

// Exit code for an exception escaping a command, or -1 for types that are
// not part of the error contract.
int exit_code_for(const std::exception& error);

// Textual form of every floating value in exported documents: 17 significant
// digits, non-finite values as null.
std::string format_double(double value);

// Re-parse exported documents.
PieceDecomposition decomposition_from_json(std::string_view document);
DistortionReport distortion_from_json(std::string_view document);
PieceDecomposition decomposition_from_csv(std::string_view document);

// Rebuilds the RegionParams echoed in a document's "angle"/"epsilon" fields.
RegionParams params_from_json(std::string_view document);

}  // namespace margulis::cli
