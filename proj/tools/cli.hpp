#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "framelogic/pipeline.hpp"
#include "framelogic/tree.hpp"

namespace framelogic::cli {

/// Process exit codes. Stable; documented in the README.
enum ExitCode : int {
  kOk = 0,
  kUsage = 1,          // bad flags, bad config, unreadable/unwritable files
  kTreeSyntax = 2,
  kTreeSchema = 3,     // also empty queries and size limits
  kTreeArity = 4,
  kInactiveExpert = 5,
  kInputData = 6,      // malformed bundle, detector source or script
  kPipeline = 7,
};

/// Hyperparameters and inputs of one command after merging
/// defaults < config file < flags.
struct RunConfig {
  std::optional<std::filesystem::path> tree;
  std::optional<std::filesystem::path> bundle;
  std::optional<std::filesystem::path> ovd;
  std::optional<std::filesystem::path> out;
  EngineConfig engine;
  ParseOptions parse;
  SelectorKind selector = SelectorKind::Pass;
};

/// Applies a JSON config document on top of `config`. Throws
/// std::invalid_argument on unknown keys or ill-typed values.
void apply_config_json(RunConfig& config, std::string_view document);

/// Directory of the on-disk bundle cache: $HIMU_CACHE_DIR when set,
/// else $XDG_CACHE_HOME/framelogic, else ~/.cache/framelogic.
std::optional<std::filesystem::path> default_cache_dir();

/// Runs the tool with `args` (without the program name).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace framelogic::cli
