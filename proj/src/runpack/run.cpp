// SPDX-License-Identifier: Apache-2.0
#include "onedatum/runpack/run.hpp"

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>

#include "onedatum/core/binio.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace onedatum::runpack {

std::string iso_timestamp_now() {
  auto now = std::chrono::system_clock::now();
  std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void ensure_run_dir(const std::string& dir) {
  fs::create_directories(fs::path(dir) / "checkpoints");
  fs::create_directories(fs::path(dir) / "reports");
}

void RunManifest::write(const std::string& run_dir) const {
  json j;
  j["command"] = command;
  j["config"] = config;
  j["seed"] = seed;
  j["dataset_hashes"] = dataset_hashes;
  j["code_version"] = code_version;
  j["started_at"] = started_at;
  j["finished_at"] = finished_at;
  j["final_metrics"] = final_metrics;
  j["status"] = status;
  binio::write_file((fs::path(run_dir) / "manifest.json").string(),
                    j.dump(2) + "\n");
}

RunManifest RunManifest::load(const std::string& run_dir) {
  auto bytes =
      binio::read_file((fs::path(run_dir) / "manifest.json").string());
  json j = json::parse(std::string(bytes.begin(), bytes.end()));
  RunManifest m;
  m.command = j.at("command").get<std::string>();
  m.config = j.at("config");
  m.seed = j.at("seed").get<std::uint64_t>();
  m.dataset_hashes =
      j.at("dataset_hashes").get<std::map<std::string, std::string>>();
  m.code_version = j.at("code_version").get<std::string>();
  m.started_at = j.at("started_at").get<std::string>();
  m.finished_at = j.at("finished_at").get<std::string>();
  m.final_metrics = j.at("final_metrics");
  m.status = j.at("status").get<std::string>();
  return m;
}

}  // namespace onedatum::runpack
