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

#include "mecrag/system_model.hpp"

#include <cmath>
#include <random>

#include <fmt/format.h>

namespace mecrag::model {

namespace {

// Table I parameter buckets.
constexpr std::array<double, kBucketCount> kServerSecondsPerBit = {1e-8, 2e-8, 3e-8, 4e-8, 5e-8};
constexpr std::array<Range, kBucketCount> kDataVolumeMbit = {
    {{0.5, 1.0}, {1.5, 2.0}, {2.5, 3.0}, {3.5, 4.0}, {4.5, 5.0}}};
constexpr std::array<Range, kBucketCount> kTransmitPowerW = {
    {{0.75, 1.0}, {1.0, 1.25}, {1.25, 1.5}, {1.5, 1.75}, {1.75, 2.0}}};
constexpr std::array<Range, kBucketCount> kUserSecondsPerBit = {
    {{0.5e-6, 1e-6}, {1e-6, 1.5e-6}, {1.5e-6, 2e-6}, {2e-6, 2.5e-6}, {2.5e-6, 3e-6}}};

constexpr double kUserMinHz = 0.5e9;
constexpr double kUserMaxHz = 2e9;
constexpr int kMinCyclesPerBit = 500;
constexpr int kMaxCyclesPerBit = 1500;
constexpr double kMinTaskBits = 0.5e6;
constexpr double kMaxTaskBits = 5e6;

// Salt separating the sweep stream from the base scenario stream.
constexpr std::uint64_t kSweepStreamSalt = 0x9E3779B97F4A7C15ULL;

void check_bucket(DatasetKind kind) {
    if (kind.bucket < 0 || kind.bucket >= kBucketCount) {
        throw InvalidInput(fmt::format("dataset bucket {} outside 0..{}", kind.bucket, kBucketCount - 1));
    }
}

double lerp(Range r, double u) { return r.lo + u * (r.hi - r.lo); }

Position step_toward(Position from, Position to, double step, bool& arrived) {
    const double dx = to.x - from.x;
    const double dy = to.y - from.y;
    const double dist = std::hypot(dx, dy);
    if (dist <= step) {
        arrived = true;
        return to;
    }
    arrived = false;
    return {from.x + dx / dist * step, from.y + dy / dist * step};
}

}  // namespace

Range bucket_range(DatasetKind kind) {
    check_bucket(kind);
    const auto b = static_cast<std::size_t>(kind.bucket);
    switch (kind.family) {
        case DatasetFamily::DSCC:
            return {kServerSecondsPerBit[b], kServerSecondsPerBit[b]};
        case DatasetFamily::DUSD:
            return {kDataVolumeMbit[b].lo * 1e6, kDataVolumeMbit[b].hi * 1e6};
        case DatasetFamily::DUP:
            return kTransmitPowerW[b];
        case DatasetFamily::DUCC:
            return kUserSecondsPerBit[b];
    }
    throw InvalidInput("unknown dataset family");
}

double bucket_axis_value(DatasetKind kind) {
    const Range r = bucket_range(kind);
    return kind.family == DatasetFamily::DUSD ? r.hi / 1e6 : r.hi;
}

std::string_view to_string(DatasetFamily family) {
    switch (family) {
        case DatasetFamily::DSCC: return "DSCC";
        case DatasetFamily::DUSD: return "DUSD";
        case DatasetFamily::DUP: return "DUP";
        case DatasetFamily::DUCC: return "DUCC";
    }
    return "?";
}

DatasetFamily parse_dataset_family(std::string_view name) {
    for (auto f : {DatasetFamily::DSCC, DatasetFamily::DUSD, DatasetFamily::DUP, DatasetFamily::DUCC}) {
        if (name == to_string(f)) return f;
    }
    throw InvalidInput(fmt::format("unknown dataset kind '{}'", name));
}

ValidationResult validate_config(const SystemConfig& c) {
    ValidationResult result;
    auto require = [&](bool ok, std::string_view what) {
        if (!ok) result.violations.emplace_back(what);
    };
    require(c.bandwidth_hz > 0, "bandwidth_hz must be > 0");
    require(c.noise_power_w > 0, "noise_power_w must be > 0");
    require(c.server_cycles_per_sec > 0, "server_cycles_per_sec must be > 0");
    require(c.server_cycles_per_bit > 0, "server_cycles_per_bit must be > 0");
    require(c.rician_k >= 0, "rician_k must be >= 0");
    require(c.ref_gain > 0, "ref_gain must be > 0");
    require(c.slot_count >= 1, "slot_count must be >= 1");
    require(c.slot_duration_s > 0, "slot_duration_s must be > 0");
    require(c.energy_coeff >= 0, "energy_coeff must be >= 0");
    require(c.server_height >= 0, "server_height must be >= 0");
    require(c.area_side_m > 0, "area_side_m must be > 0");
    return result;
}

ValidationResult validate_scenario(const Scenario& s) {
    ValidationResult result = validate_config(s.config);
    auto add = [&](std::string msg) { result.violations.push_back(std::move(msg)); };
    const std::size_t t_count = static_cast<std::size_t>(s.config.slot_count);
    const std::size_t k_count = s.users.size();
    if (k_count == 0) add("scenario has no users");
    if (s.positions.size() != t_count || s.task_bits.size() != t_count || s.fading_draws.size() != t_count) {
        add(fmt::format("per-slot tables must have {} slots", t_count));
        return result;
    }
    for (const auto& u : s.users) {
        if (!(u.cycles_per_sec > 0) || !(u.cycles_per_bit > 0) || !(u.max_power_w > 0) || !(u.energy_budget_j > 0)) {
            add(fmt::format("user {} has a non-positive capability or limit", u.id));
        }
    }
    const double side = s.config.area_side_m;
    for (std::size_t t = 0; t < t_count; ++t) {
        if (s.positions[t].size() != k_count || s.task_bits[t].size() != k_count ||
            s.fading_draws[t].size() != k_count) {
            add(fmt::format("slot {} does not have {} users", t, k_count));
            continue;
        }
        for (std::size_t k = 0; k < k_count; ++k) {
            const Position p = s.positions[t][k];
            if (p.x < 0 || p.x > side || p.y < 0 || p.y > side) {
                add(fmt::format("slot {} user {} outside the area", t, k));
            }
            if (!(s.task_bits[t][k] > 0)) add(fmt::format("slot {} user {} has no task bits", t, k));
        }
    }
    return result;
}

Scenario generate_scenario(const SystemConfig& config, int user_count, std::uint64_t seed,
                           const ScenarioOptions& options) {
    if (user_count < 1) throw InvalidInput("user_count must be >= 1");
    if (const auto v = validate_config(config); !v.ok()) {
        throw InvalidInput("invalid config: " + v.violations.front());
    }

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> coord(0.0, config.area_side_m);
    std::uniform_real_distribution<double> cpu(kUserMinHz, kUserMaxHz);
    std::uniform_int_distribution<int> cpb(kMinCyclesPerBit, kMaxCyclesPerBit);
    std::uniform_real_distribution<double> bits(kMinTaskBits, kMaxTaskBits);
    std::normal_distribution<double> scatter(0.0, std::sqrt(0.5));

    const auto k_count = static_cast<std::size_t>(user_count);
    const auto t_count = static_cast<std::size_t>(config.slot_count);

    Scenario s;
    s.config = config;
    s.rng_seed = seed;
    s.users.resize(k_count);
    std::vector<Position> current(k_count);
    std::vector<Position> waypoint(k_count);
    for (std::size_t k = 0; k < k_count; ++k) {
        auto& u = s.users[k];
        u.id = static_cast<int>(k);
        u.cycles_per_sec = cpu(rng);
        u.cycles_per_bit = cpb(rng);
        u.max_power_w = options.max_power_w;
        u.energy_budget_j = options.energy_budget_j;
        current[k] = {coord(rng), coord(rng)};
        waypoint[k] = {coord(rng), coord(rng)};
    }

    s.positions.resize(t_count);
    s.task_bits.resize(t_count);
    s.fading_draws.resize(t_count);
    for (std::size_t t = 0; t < t_count; ++t) {
        s.positions[t].resize(k_count);
        s.task_bits[t].resize(k_count);
        s.fading_draws[t].resize(k_count);
        for (std::size_t k = 0; k < k_count; ++k) {
            if (t > 0) {
                bool arrived = false;
                current[k] = step_toward(current[k], waypoint[k], options.speed_m_per_slot, arrived);
                if (arrived) waypoint[k] = {coord(rng), coord(rng)};
            }
            s.positions[t][k] = current[k];
            s.task_bits[t][k] = bits(rng);
            const double re = scatter(rng);
            const double im = scatter(rng);
            s.fading_draws[t][k] = options.deterministic_channel ? std::complex<double>{} : std::complex{re, im};
        }
    }
    return s;
}

Scenario generate_dataset(DatasetKind kind, const SystemConfig& base_config, std::uint64_t seed, int user_count,
                          const ScenarioOptions& options) {
    const Range range = bucket_range(kind);
    SystemConfig config = base_config;
    config.slot_count = kDatasetSlots;
    if (kind.family == DatasetFamily::DSCC) {
        config.server_cycles_per_bit = range.lo * config.server_cycles_per_sec;
    }
    Scenario s = generate_scenario(config, user_count, seed, options);

    std::mt19937_64 sweep(seed ^ kSweepStreamSalt);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    switch (kind.family) {
        case DatasetFamily::DSCC:
            break;
        case DatasetFamily::DUSD:
            for (auto& slot : s.task_bits) {
                for (auto& d : slot) d = lerp(range, unit(sweep));
            }
            break;
        case DatasetFamily::DUP:
            for (auto& u : s.users) u.max_power_w = lerp(range, unit(sweep));
            break;
        case DatasetFamily::DUCC:
            // Keep phi_k, solve f_k so that phi_k / f_k hits the drawn s/bit.
            for (auto& u : s.users) u.cycles_per_sec = u.cycles_per_bit / lerp(range, unit(sweep));
            break;
    }
    return s;
}

void to_json(nlohmann::json& j, const Position& p) { j = nlohmann::json::array({p.x, p.y}); }

void from_json(const nlohmann::json& j, Position& p) {
    p.x = j.at(0).get<double>();
    p.y = j.at(1).get<double>();
}

void to_json(nlohmann::json& j, const SystemConfig& c) {
    j = nlohmann::json{{"bandwidth_hz", c.bandwidth_hz},
                       {"noise_power_w", c.noise_power_w},
                       {"server_cycles_per_sec", c.server_cycles_per_sec},
                       {"server_cycles_per_bit", c.server_cycles_per_bit},
                       {"ref_gain", c.ref_gain},
                       {"rician_k", c.rician_k},
                       {"energy_coeff", c.energy_coeff},
                       {"slot_count", c.slot_count},
                       {"slot_duration_s", c.slot_duration_s},
                       {"server_pos", c.server_pos},
                       {"server_height", c.server_height},
                       {"area_side_m", c.area_side_m}};
}

void from_json(const nlohmann::json& j, SystemConfig& c) {
    // Missing keys keep their defaults so hand-written configs can be sparse.
    const SystemConfig d;
    c.bandwidth_hz = j.value("bandwidth_hz", d.bandwidth_hz);
    c.noise_power_w = j.value("noise_power_w", d.noise_power_w);
    c.server_cycles_per_sec = j.value("server_cycles_per_sec", d.server_cycles_per_sec);
    c.server_cycles_per_bit = j.value("server_cycles_per_bit", d.server_cycles_per_bit);
    c.ref_gain = j.value("ref_gain", d.ref_gain);
    c.rician_k = j.value("rician_k", d.rician_k);
    c.energy_coeff = j.value("energy_coeff", d.energy_coeff);
    c.slot_count = j.value("slot_count", d.slot_count);
    c.slot_duration_s = j.value("slot_duration_s", d.slot_duration_s);
    c.server_pos = j.value("server_pos", d.server_pos);
    c.server_height = j.value("server_height", d.server_height);
    c.area_side_m = j.value("area_side_m", d.area_side_m);
}

void to_json(nlohmann::json& j, const MobileUser& u) {
    j = nlohmann::json{{"id", u.id},
                       {"cycles_per_sec", u.cycles_per_sec},
                       {"cycles_per_bit", u.cycles_per_bit},
                       {"max_power_w", u.max_power_w},
                       {"energy_budget_j", u.energy_budget_j}};
}

void from_json(const nlohmann::json& j, MobileUser& u) {
    j.at("id").get_to(u.id);
    j.at("cycles_per_sec").get_to(u.cycles_per_sec);
    j.at("cycles_per_bit").get_to(u.cycles_per_bit);
    j.at("max_power_w").get_to(u.max_power_w);
    j.at("energy_budget_j").get_to(u.energy_budget_j);
}

void to_json(nlohmann::json& j, const Scenario& s) {
    nlohmann::json fading = nlohmann::json::array();
    for (const auto& slot : s.fading_draws) {
        nlohmann::json row = nlohmann::json::array();
        for (const auto& h : slot) row.push_back({h.real(), h.imag()});
        fading.push_back(std::move(row));
    }
    j = nlohmann::json{{"config", s.config},       {"users", s.users},
                       {"positions", s.positions}, {"task_bits", s.task_bits},
                       {"fading_draws", fading},   {"rng_seed", s.rng_seed}};
}

void from_json(const nlohmann::json& j, Scenario& s) {
    j.at("config").get_to(s.config);
    j.at("users").get_to(s.users);
    j.at("positions").get_to(s.positions);
    j.at("task_bits").get_to(s.task_bits);
    s.fading_draws.clear();
    for (const auto& row : j.at("fading_draws")) {
        auto& slot = s.fading_draws.emplace_back();
        for (const auto& h : row) slot.emplace_back(h.at(0).get<double>(), h.at(1).get<double>());
    }
    s.rng_seed = j.value("rng_seed", std::uint64_t{0});
}

}  // namespace mecrag::model
