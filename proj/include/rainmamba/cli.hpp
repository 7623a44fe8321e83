#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "rainmamba/blocks.hpp"

namespace rainmamba::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kSchemaVersion = 1;

/// Runs one command line (argv[0] is the program name).
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

// -- config ---------------------------------------------------------------

using KeyValues = std::vector<std::pair<std::string, std::string>>;

/// Parses `key=value` lines with `#` comments. Keys outside `allowed` are errors.
KeyValues parse_key_values(const std::string& text, const std::vector<std::string>& allowed);

inline const std::vector<std::string> kModelConfigKeys = {"channels", "n1", "n2",
                                                         "n3", "direction", "scales"};

blocks::ModelConfig model_config_from(const KeyValues& kv);
KeyValues to_key_values(const blocks::ModelConfig& cfg);

// -- manifest -------------------------------------------------------------

/// 64-bit FNV-1a, rendered as "fnv1a64:<16 hex digits>".
std::string checksum(const std::string& bytes);
std::string file_checksum(const std::filesystem::path& path);

struct RunManifest {
  std::string command;
  std::uint64_t seed = 0;
  KeyValues config;
  std::vector<std::pair<std::string, std::string>> inputs;   // path, checksum
  std::vector<std::pair<std::string, std::string>> outputs;  // path, checksum
  double wall_time_seconds = 0.0;

  void add_input(const std::filesystem::path& p);
  void add_output(const std::filesystem::path& p);
  std::string to_json() const;
  void write(const std::filesystem::path& path) const;
};

/// Manifest location for a file output: "<file>.manifest.json".
std::filesystem::path manifest_path_for(const std::filesystem::path& output_file);

// -- ssm check ------------------------------------------------------------

struct SsmCheckOptions {
  std::uint64_t seed = 0;
  std::size_t equivalence_systems = 100;
  std::size_t gradient_instances = 20;
  std::size_t selective_instances = 20;
  double equivalence_tol_f64 = 1e-10;
  double equivalence_tol_f32 = 1e-5;
  double gradient_tol = 1e-6;
  double fd_step = 1e-5;
};

struct SsmCheckReport {
  double equivalence_max_rel_err = 0.0;
  double equivalence_max_rel_err_f32 = 0.0;
  double gradient_max_rel_err = 0.0;
  double selective_max_abs_diff = 0.0;
  bool equivalence_pass = false;
  bool equivalence_f32_pass = false;
  bool gradient_pass = false;
  bool selective_pass = false;

  bool pass() const {
    return equivalence_pass && equivalence_f32_pass && gradient_pass && selective_pass;
  }
};

SsmCheckReport run_ssm_check(const SsmCheckOptions& options);

}  // namespace rainmamba::cli
