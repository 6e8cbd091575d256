// SPDX-License-Identifier: Apache-2.0
//
// beamnet: joint unicast/broadcast beamforming for cellular networks
// Copyright (C) 2026 The beamnet authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#pragma once

#include <complex>
#include <compare>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace beamnet {

using Complex = std::complex<double>;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;

// User (n,k): cell index n and user index k inside the cell, both 0-based.
// Text formats (config keys, CSV) use the 1-based "n:k" form.
struct UserId {
  int cell = 0;
  int index = 0;
  auto operator<=>(const UserId&) const = default;
};

inline int linear_index(UserId u, int users_per_cell) {
  return u.cell * users_per_cell + u.index;
}

inline UserId user_from_linear(int u, int users_per_cell) {
  return {u / users_per_cell, u % users_per_cell};
}

std::string to_string(UserId u);

enum class Scheme { tdm, ldm };

std::string to_string(Scheme s);
Scheme scheme_from_string(const std::string& s);

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace beamnet
