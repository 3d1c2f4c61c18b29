// Copyright 2026 The polyagg Authors.
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

#ifndef POLYAGG_ERROR_HPP_
#define POLYAGG_ERROR_HPP_

#include <stdexcept>
#include <string>
#include <string_view>

namespace polyagg {

enum class ErrorKind {
  kInvalidInput,
  kInfeasibleModel,
  kSingularChain,
  kAllAgentsIndifferent,
  kIterationLimit,
  kInfeasibleBounds,
  kDegeneratePolytope,
  kEmptyRegion,
  kMilpBudgetExhausted,
  kConcaveRegionEmpty,
  kZeroWelfare,
  kSizeLimit,
};

std::string_view to_string(ErrorKind kind);

// Single exception type for the library; callers dispatch on kind().
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what),
        kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidInput: return "InvalidInput";
    case ErrorKind::kInfeasibleModel: return "InfeasibleModel";
    case ErrorKind::kSingularChain: return "SingularChain";
    case ErrorKind::kAllAgentsIndifferent: return "AllAgentsIndifferent";
    case ErrorKind::kIterationLimit: return "IterationLimit";
    case ErrorKind::kInfeasibleBounds: return "InfeasibleBounds";
    case ErrorKind::kDegeneratePolytope: return "DegeneratePolytope";
    case ErrorKind::kEmptyRegion: return "EmptyRegion";
    case ErrorKind::kMilpBudgetExhausted: return "MilpBudgetExhausted";
    case ErrorKind::kConcaveRegionEmpty: return "ConcaveRegionEmpty";
    case ErrorKind::kZeroWelfare: return "ZeroWelfare";
    case ErrorKind::kSizeLimit: return "SizeLimit";
  }
  return "Unknown";
}

}  // namespace polyagg

#endif  // POLYAGG_ERROR_HPP_
