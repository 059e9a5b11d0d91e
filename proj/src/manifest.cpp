#include "mlfx/manifest.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "mlfx/common.hpp"
#include "mlfx/model_io.hpp"

namespace mlfx {

using json = nlohmann::json;

void save_run_manifest(const RunManifest& m, const std::string& path) {
  json j;
  j["format"] = "mlfx-manifest";
  j["version"] = 1;
  j["tool_version"] = m.tool_version;
  j["command"] = m.command;
  j["config"] = m.config;
  j["inputs"] = json::array();
  for (const auto& [p, h] : m.input_hashes) {
    j["inputs"].push_back({{"path", p}, {"fnv1a64", h}});
  }
  j["outputs"] = m.outputs;
  j["status"] = m.status;
  if (!m.error.empty()) j["error"] = m.error;

  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(parent, ec);
  }
  std::ofstream out(path);
  if (!out) throw IoError(path + ": cannot open for writing");
  out << j.dump(2) << "\n";
  if (!out) throw IoError(path + ": write failed");
}

RunManifest load_run_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path + ": cannot open for reading");
  std::stringstream ss;
  ss << in.rdbuf();
  json j = json::parse(ss.str(), nullptr, false);
  if (j.is_discarded() || j.value("format", "") != "mlfx-manifest") {
    throw IoError(path + ": not a run manifest");
  }
  RunManifest m;
  m.tool_version = j.value("tool_version", "");
  m.command = j.at("command").get<std::string>();
  m.config = j.at("config");
  for (const auto& entry : j.value("inputs", json::array())) {
    m.input_hashes.emplace_back(entry.at("path").get<std::string>(),
                                entry.at("fnv1a64").get<std::string>());
  }
  m.outputs = j.value("outputs", std::vector<std::string>{});
  m.status = j.value("status", "ok");
  m.error = j.value("error", "");
  return m;
}

RunContext::RunContext(std::string command, json config, std::string manifest_path)
    : manifest_path_(std::move(manifest_path)) {
  manifest_.command = std::move(command);
  manifest_.config = std::move(config);
}

void RunContext::add_input(const std::string& path) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash_file(path)));
  manifest_.input_hashes.emplace_back(path, buf);
}

void RunContext::add_output(const std::string& path) { manifest_.outputs.push_back(path); }

void RunContext::finish() {
  manifest_.status = "ok";
  save_run_manifest(manifest_, manifest_path_);
}

void RunContext::fail(const std::string& message) {
  manifest_.status = "failed";
  manifest_.error = message;
  try {
    save_run_manifest(manifest_, manifest_path_);
  } catch (const Error&) {
    // Best effort: the original failure is what gets reported.
  }
}

}  // namespace mlfx
