#include <cstdio>

#include "json.hpp"
#include "rainmamba/cli.hpp"
#include "rainmamba/tensor_io.hpp"

namespace rainmamba::cli {

std::string checksum(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "fnv1a64:%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string file_checksum(const std::filesystem::path& path) {
  return checksum(io::read_file(path));
}

void RunManifest::add_input(const std::filesystem::path& p) {
  inputs.emplace_back(p.generic_string(), file_checksum(p));
}

void RunManifest::add_output(const std::filesystem::path& p) {
  outputs.emplace_back(p.generic_string(), file_checksum(p));
}

std::string RunManifest::to_json() const {
  nlohmann::ordered_json j;
  j["schema_version"] = kSchemaVersion;
  j["command"] = command;
  j["seed"] = seed;
  j["config"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : config) j["config"][k] = v;
  auto files = [](const auto& list) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& [path, sum] : list) arr.push_back({{"path", path}, {"checksum", sum}});
    return arr;
  };
  j["inputs"] = files(inputs);
  j["outputs"] = files(outputs);
  j["wall_time_seconds"] = wall_time_seconds;
  return j.dump(2) + "\n";
}

void RunManifest::write(const std::filesystem::path& path) const {
  io::write_file_atomic(path, to_json());
}

std::filesystem::path manifest_path_for(const std::filesystem::path& output_file) {
  std::filesystem::path p = output_file;
  p += ".manifest.json";
  return p;
}

}  // namespace rainmamba::cli
