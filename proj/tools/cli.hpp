#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "emsaudit/records.hpp"
#include "emsaudit/tagger.hpp"

namespace emsaudit::cli {

inline constexpr std::uint64_t kDefaultSeed = 7;

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

// Settings shared by all subcommands. Precedence: flags > config file > these
// defaults.
struct Settings {
  std::uint64_t seed = kDefaultSeed;
  std::filesystem::path out_dir = "out";
  std::filesystem::path gazetteer;  // empty: built-in list
  std::filesystem::path rules;      // empty: built-in protocols
  std::string keep_symbols;
  int max_edit_distance = 1;

  std::size_t n_documents = 2000;
  double misspelling_rate = 0.05;

  SplitFractions split;
  Hyperparams hp;

  std::string audit_level = "provider";
  std::string eval_mode = "both";
};

// Runs one invocation; args excludes the program name. Returns the exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace emsaudit::cli
