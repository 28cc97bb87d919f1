// Copyright 2026 The LeanConv Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <string>
#include <thread>

#include <json.hpp>

#include "leanconv/app/run_config.hpp"
#include "leanconv/tensor/parallel.hpp"

namespace leanconv {

inline constexpr int kRecordSchemaVersion = 1;

inline std::string cpu_model() {
  std::ifstream f("/proc/cpuinfo");
  std::string line;
  while (std::getline(f, line)) {
    if (line.rfind("model name", 0) == 0) {
      const auto colon = line.find(':');
      if (colon != std::string::npos) return line.substr(line.find_first_not_of(' ', colon + 1));
    }
  }
  return "unknown";
}

inline json machine_descriptor() {
  json m{{"cpu", cpu_model()},
         {"hardware_threads", std::thread::hardware_concurrency()},
         {"worker_threads", num_threads()},
#if defined(__clang__)
         {"compiler", std::string("clang ") + __clang_version__},
#elif defined(__GNUC__)
         {"compiler", std::string("gcc ") + __VERSION__},
#else
         {"compiler", "unknown"},
#endif
#if defined(__AVX512F__)
         {"simd", "avx512f"},
#elif defined(__AVX2__)
         {"simd", "avx2"},
#else
         {"simd", "baseline"},
#endif
  };
  return m;
}

/// One command run: effective config, its hash, results and timing.
struct ResultRecord {
  std::string command;
  json config;
  json results = json::object();
  double wall_clock_seconds = 0;

  json to_json() const {
    return json{{"schema_version", kRecordSchemaVersion},
                {"command", command},
                {"config", config},
                {"config_hash", hex64(config_hash(config))},
                {"results", results},
                {"wall_clock_seconds", wall_clock_seconds},
                {"machine", machine_descriptor()}};
  }
};

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << text;
  if (!f) throw std::runtime_error("write failed for " + path.string());
}

inline void write_record(const ResultRecord& r, const std::filesystem::path& path) {
  write_text(path, r.to_json().dump(2) + "\n");
}

class Stopwatch {
 public:
  double seconds() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count(); }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

}  // namespace leanconv
