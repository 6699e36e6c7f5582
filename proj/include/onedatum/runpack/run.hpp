// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <string>

#include <nlohmann/json.hpp>

#include "onedatum/core/error.hpp"

namespace onedatum::runpack {

/// One manifest per run directory: the command, the fully resolved
/// configuration (no hidden defaults), seeds, dataset hashes, code
/// version and final metrics.
struct RunManifest {
  std::string command;
  nlohmann::json config;
  std::uint64_t seed = 0;
  std::map<std::string, std::string> dataset_hashes;
  std::string code_version;
  std::string started_at;
  std::string finished_at;
  nlohmann::json final_metrics;
  std::string status = "running";  // running | completed | failed

  void write(const std::string& run_dir) const;
  static RunManifest load(const std::string& run_dir);
};

std::string iso_timestamp_now();

/// Creates RUN/{checkpoints, reports}.
void ensure_run_dir(const std::string& dir);

}  // namespace onedatum::runpack
