// Copyright 2026 The mecrag Authors.
//
//    Licensed under the Apache License, Version 2.0 (the "License");
//    you may not use this file except in compliance with the License.
//    You may obtain a copy of the License at
//
//        http://www.apache.org/licenses/LICENSE-2.0
//
//    Unless required by applicable law or agreed to in writing, software
//    distributed under the License is distributed on an "AS IS" BASIS,
//    WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
//    See the License for the specific language governing permissions and
//    limitations under the License.

// Uplink channel: free-space path loss with Rician small-scale fading and an
// interference-limited Shannon rate shared by all users on one band.

#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "mecrag/system_model.hpp"

namespace mecrag::channel {

class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

struct ChannelSnapshot {
    std::vector<double> gains;
    std::vector<double> distances;
};

/// 3D distance from a ground user to a server mounted at `server_height`.
double distance(model::Position user_pos, model::Position server_pos, double server_height);

/// g0 / d^2. Throws DomainError for d <= 0.
double large_scale_gain(double distance_m, double ref_gain);

/// |sqrt(k/(k+1)) + sqrt(1/(k+1)) * hbar|^2.
double small_scale_gain(std::complex<double> hbar, double rician_k);

double channel_gain(model::Position user_pos, std::complex<double> hbar, const model::SystemConfig& config);

/// Gains and distances of every user in one slot of a scenario.
ChannelSnapshot snapshot(const model::Scenario& scenario, std::size_t slot);

/// B log2(1 + p_k h_k / (sum_{l != k} p_l h_l + noise)).
double offload_rate(std::size_t k, std::span<const double> powers_w, std::span<const double> gains,
                    const model::SystemConfig& config);

/// Rates of all users at once; same result as calling offload_rate per user.
std::vector<double> offload_rates(std::span<const double> powers_w, std::span<const double> gains,
                                  const model::SystemConfig& config);

}  // namespace mecrag::channel
