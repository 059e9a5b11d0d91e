#pragma once

#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace mlfx {

inline constexpr const char* kToolVersion = "mlfx 0.1.0";

// Reproducibility record written next to every command's outputs. Re-running
// the tool with `--manifest <file>` replays the stored command and config and
// reproduces the outputs bit-exactly.
struct RunManifest {
  std::string tool_version = kToolVersion;
  std::string command;
  nlohmann::json config;
  std::vector<std::pair<std::string, std::string>> input_hashes;  // path, fnv1a64 hex
  std::vector<std::string> outputs;
  std::string status = "ok";
  std::string error;
};

void save_run_manifest(const RunManifest& m, const std::string& path);
RunManifest load_run_manifest(const std::string& path);

// Collects inputs/outputs during a command run and writes the manifest last,
// so partial outputs are never left behind without a failure record.
class RunContext {
 public:
  RunContext(std::string command, nlohmann::json config, std::string manifest_path);

  void add_input(const std::string& path);   // records the file's content hash
  void add_output(const std::string& path);

  void finish();                             // status "ok"
  void fail(const std::string& message);     // status "failed"

  const std::string& manifest_path() const { return manifest_path_; }
  const std::vector<std::string>& outputs() const { return manifest_.outputs; }

 private:
  RunManifest manifest_;
  std::string manifest_path_;
};

}  // namespace mlfx
