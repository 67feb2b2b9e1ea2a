// Copyright 2026 The balopt Authors
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

#ifndef BALOPT_COMMON_HPP
#define BALOPT_COMMON_HPP

#include <atomic>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace balopt {

enum class ErrorCode {
  kInput,        // malformed or out-of-contract input
  kNotPsd,       // matrix indefinite beyond the clamping tolerance
  kSingular,     // singular covariance without ridge escape
  kBudget,       // solver time/node budget exhausted
  kFormat,       // file does not match the documented schema
  kUnsupported,  // operation not defined for these parameters
  kInfeasible,   // constraint set provably empty
};

// Single exception type carrying a machine-readable code and the module
// that raised it; the CLI serializes these as {code, message, module}.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string module, const std::string& message)
      : std::runtime_error(message), code_(code), module_(std::move(module)) {}

  ErrorCode code() const { return code_; }
  const std::string& module() const { return module_; }

  const char* code_name() const {
    switch (code_) {
      case ErrorCode::kInput: return "input_error";
      case ErrorCode::kNotPsd: return "not_psd";
      case ErrorCode::kSingular: return "singular";
      case ErrorCode::kBudget: return "budget_exceeded";
      case ErrorCode::kFormat: return "format_error";
      case ErrorCode::kUnsupported: return "unsupported";
      case ErrorCode::kInfeasible: return "infeasible";
    }
    return "unknown";
  }

 private:
  ErrorCode code_;
  std::string module_;
};

using Rng = std::mt19937_64;

// splitmix64 finalizer; used to derive independent per-replicate streams
// from (master seed, stream index) so parallel replicates are reproducible.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
  return Rng(mix_seed(seed, stream));
}

// Runs body(i) for i in [begin, end). Iterations must be independent and
// write only to their own slots; results are then identical for any thread
// count.
inline void parallel_for(long begin, long end, int threads,
                         const std::function<void(long)>& body) {
  const long count = end - begin;
  if (count <= 0) return;
  threads = static_cast<int>(
      std::min<long>(std::max(1, threads), count));
  if (threads == 1) {
    for (long i = begin; i < end; ++i) body(i);
    return;
  }
  std::atomic<long> next{begin};
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(threads));
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&]() {
      for (;;) {
        const long i = next.fetch_add(1);
        if (i >= end) return;
        body(i);
      }
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace balopt

#endif  // BALOPT_COMMON_HPP
