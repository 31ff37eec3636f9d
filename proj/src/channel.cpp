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

#include "mecrag/channel.hpp"

#include <cmath>
#include <numbers>

#include <fmt/format.h>

namespace mecrag::channel {

double distance(model::Position user_pos, model::Position server_pos, double server_height) {
    const double dx = user_pos.x - server_pos.x;
    const double dy = user_pos.y - server_pos.y;
    return std::sqrt(dx * dx + dy * dy + server_height * server_height);
}

double large_scale_gain(double distance_m, double ref_gain) {
    if (!(distance_m > 0)) {
        throw DomainError(fmt::format("path loss undefined at distance {} m", distance_m));
    }
    return ref_gain / (distance_m * distance_m);
}

double small_scale_gain(std::complex<double> hbar, double rician_k) {
    // The Rician envelope is complex; the power gain is its squared magnitude.
    const std::complex<double> envelope =
        std::sqrt(rician_k / (rician_k + 1.0)) + std::sqrt(1.0 / (rician_k + 1.0)) * hbar;
    return std::norm(envelope);
}

double channel_gain(model::Position user_pos, std::complex<double> hbar, const model::SystemConfig& config) {
    const double d = distance(user_pos, config.server_pos, config.server_height);
    return large_scale_gain(d, config.ref_gain) * small_scale_gain(hbar, config.rician_k);
}

ChannelSnapshot snapshot(const model::Scenario& scenario, std::size_t slot) {
    const auto& cfg = scenario.config;
    ChannelSnapshot snap;
    const std::size_t k_count = scenario.user_count();
    snap.gains.reserve(k_count);
    snap.distances.reserve(k_count);
    for (std::size_t k = 0; k < k_count; ++k) {
        const auto pos = scenario.positions.at(slot).at(k);
        const double d = distance(pos, cfg.server_pos, cfg.server_height);
        snap.distances.push_back(d);
        snap.gains.push_back(large_scale_gain(d, cfg.ref_gain) *
                             small_scale_gain(scenario.fading_draws.at(slot).at(k), cfg.rician_k));
    }
    return snap;
}

double offload_rate(std::size_t k, std::span<const double> powers_w, std::span<const double> gains,
                    const model::SystemConfig& config) {
    const double signal = powers_w[k] * gains[k];
    if (signal <= 0) return 0.0;
    double interference = 0.0;
    for (std::size_t l = 0; l < powers_w.size(); ++l) {
        if (l != k) interference += powers_w[l] * gains[l];
    }
    return config.bandwidth_hz * std::log1p(signal / (interference + config.noise_power_w)) / std::numbers::ln2;
}

std::vector<double> offload_rates(std::span<const double> powers_w, std::span<const double> gains,
                                  const model::SystemConfig& config) {
    std::vector<double> rates(powers_w.size());
    for (std::size_t k = 0; k < rates.size(); ++k) rates[k] = offload_rate(k, powers_w, gains, config);
    return rates;
}

}  // namespace mecrag::channel
