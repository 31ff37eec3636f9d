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

#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace mecrag::model {

/// A point on the ground plane, in meters.
struct Position {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Position&, const Position&) = default;
};

/// Global constants of one MEC cell. Defaults are the 10-user, 300 m square
/// evaluation setup (10 MHz, 1e-10 W noise, 30 GHz server at 900 cycles/bit,
/// g0 = 1e-5, Rician factor 50).
struct SystemConfig {
    double bandwidth_hz = 10e6;
    double noise_power_w = 1e-10;
    double server_cycles_per_sec = 30e9;
    double server_cycles_per_bit = 900.0;
    double ref_gain = 1e-5;
    double rician_k = 50.0;
    double energy_coeff = 1e-27;
    int slot_count = 10;
    double slot_duration_s = 1.0;  // carried through to outputs, consumed by nothing
    Position server_pos{150.0, 150.0};
    double server_height = 20.0;
    double area_side_m = 300.0;

    friend bool operator==(const SystemConfig&, const SystemConfig&) = default;
};

struct MobileUser {
    int id = 0;
    double cycles_per_sec = 1e9;
    double cycles_per_bit = 900.0;
    double max_power_w = 2.0;
    double energy_budget_j = 1000.0;

    friend bool operator==(const MobileUser&, const MobileUser&) = default;
};

/// Full input of one simulation run. Per-slot tables are indexed [slot][user].
struct Scenario {
    SystemConfig config;
    std::vector<MobileUser> users;
    std::vector<std::vector<Position>> positions;
    std::vector<std::vector<double>> task_bits;
    std::vector<std::vector<std::complex<double>>> fading_draws;
    std::uint64_t rng_seed = 0;

    [[nodiscard]] std::size_t slot_count() const { return task_bits.size(); }
    [[nodiscard]] std::size_t user_count() const { return users.size(); }

    friend bool operator==(const Scenario&, const Scenario&) = default;
};

/// Knobs of the scenario generator that are not part of SystemConfig.
struct ScenarioOptions {
    double max_power_w = 2.0;
    double energy_budget_j = 1000.0;
    double speed_m_per_slot = 5.0;
    /// Zero every fading draw, leaving only the line-of-sight component.
    bool deterministic_channel = false;
};

enum class DatasetFamily { DSCC, DUSD, DUP, DUCC };

struct DatasetKind {
    DatasetFamily family = DatasetFamily::DUSD;
    int bucket = 0;

    friend bool operator==(const DatasetKind&, const DatasetKind&) = default;
};

inline constexpr int kBucketCount = 5;
inline constexpr int kDatasetSlots = 10;

struct Range {
    double lo = 0.0;
    double hi = 0.0;
};

/// Swept-parameter range of a dataset bucket, in the unit the dataset sweeps
/// (s/bit for DSCC and DUCC, bits for DUSD, W for DUP). DSCC buckets are
/// single values, so lo == hi.
Range bucket_range(DatasetKind kind);

/// Representative x-axis value of a bucket for plotting: the DSCC value or
/// the upper end of the range, in the dataset's display unit (Mbit for DUSD).
double bucket_axis_value(DatasetKind kind);

std::string_view to_string(DatasetFamily family);
DatasetFamily parse_dataset_family(std::string_view name);

struct ValidationResult {
    std::vector<std::string> violations;

    [[nodiscard]] bool ok() const { return violations.empty(); }
};

ValidationResult validate_config(const SystemConfig& config);

/// Checks shape and range invariants of a scenario (including its config).
ValidationResult validate_scenario(const Scenario& scenario);

class InvalidInput : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Places `user_count` users uniformly in the square and moves them by
/// random waypoint; identical arguments yield an identical Scenario.
Scenario generate_scenario(const SystemConfig& config, int user_count, std::uint64_t seed,
                           const ScenarioOptions& options = {});

/// Builds a 10-slot scenario whose swept parameter is drawn from the bucket.
/// The sweep uses its own random stream, so every bucket of a family sees
/// the same underlying uniforms for a given seed.
Scenario generate_dataset(DatasetKind kind, const SystemConfig& base_config, std::uint64_t seed,
                          int user_count = 10, const ScenarioOptions& options = {});

void to_json(nlohmann::json& j, const Position& p);
void from_json(const nlohmann::json& j, Position& p);
void to_json(nlohmann::json& j, const SystemConfig& c);
void from_json(const nlohmann::json& j, SystemConfig& c);
void to_json(nlohmann::json& j, const MobileUser& u);
void from_json(const nlohmann::json& j, MobileUser& u);
void to_json(nlohmann::json& j, const Scenario& s);
void from_json(const nlohmann::json& j, Scenario& s);

}  // namespace mecrag::model
