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

// Frozen output of tests/oracles/derived_values.py (50-digit mpmath).
// Regenerate with: python3 tests/oracles/derived_values.py

#pragma once

namespace mecrag::testing {

inline constexpr double k_distance_100_100_to_150_150_h20 = 73.484692283495342946;
inline constexpr double k_large_scale_d100 = 1.0e-9;
inline constexpr double k_large_scale_d10 = 1.0e-7;
inline constexpr double k_small_scale_hbar1_k0 = 1.0;
inline constexpr double k_channel_gain_d100_k50 = 9.8039215686274509804e-10;
inline constexpr double k_channel_gain_d1_k1e9 = 9.99999999000000001e-6;
inline constexpr double k_rate_single_p2 = 43651216.119906828191;
inline constexpr double k_snr_single_p2 = 19.607843137254901961;
inline constexpr double k_rate_two_users_p1 = 9328858.041414630327;
inline constexpr double k_sinr_two_users_p1 = 0.90909090909090909091;
inline constexpr double k_local_latency_a04 = 0.54;
inline constexpr double k_local_latency_a0 = 0.9;
inline constexpr double k_local_energy_a04 = 0.54;
inline constexpr double k_offload_latency_a04 = 0.0091635476753093903107;
inline constexpr double k_offload_latency_a1_r1e7 = 0.1;
inline constexpr double k_offload_energy_p2 = 0.018327095350618780621;
inline constexpr double k_mec_latency_a04_b02 = 0.06;
inline constexpr double k_mec_latency_a1_b1 = 0.03;
inline constexpr double k_user_latency_example = 0.54;
inline constexpr double k_objective_two_slots = 0.6;
inline constexpr double k_local_only_single_user = 0.9;
inline constexpr double k_full_offload_single_user = 0.052908869188273475777;
inline constexpr double k_alpha_star_p2_b02 = 0.83884104777781315955;
inline constexpr double k_cosine_10_11 = 0.7071067811865475244;
inline constexpr double k_mrr_1_2_4 = 0.58333333333333333333;
inline constexpr double k_hit_rate_7_10 = 0.7;
inline constexpr double k_summary_mean_05_07 = 0.6;
inline constexpr double k_grid_oracle_single_user_res11 = 0.052908869188273475777;

}  // namespace mecrag::testing
