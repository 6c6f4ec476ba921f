// SPDX-License-Identifier: Apache-2.0
//
// tdcp-sim: time-domain channel property simulation toolkit
// Copyright (C) 2026 The tdcp-sim Authors
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

#ifndef TDCP_TRS_GRID_HPP
#define TDCP_TRS_GRID_HPP

#include "common.hpp"
#include "fading_channel.hpp"

#include <algorithm>
#include <bit>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace tdcp
{
    /// OFDM numerology. The cyclic prefix is absorbed into the symbol duration.
    struct Numerology
    {
        double subcarrier_spacing_hz = 30e3;
        int symbols_per_slot = 14;

        double slot_duration() const { return 1e-3 * 15e3 / subcarrier_spacing_hz; }
        double symbol_duration() const { return slot_duration() / symbols_per_slot; }

        void validate() const
        {
            if (!(subcarrier_spacing_hz > 0.0))
                throw ConfigError("numerology: subcarrier spacing must be > 0");
            if (symbols_per_slot != 14)
                throw ConfigError("numerology: only 14 symbols per slot are supported");
        }
    };

    /// Slot offsets a second TRS may be configured with.
    inline constexpr int second_trs_offsets[] = {2, 3, 4, 5, 6, 10};

    struct TrsConfig
    {
        Numerology numerology;
        int comb_spacing = 4;
        int comb_offset = 0;
        std::pair<int, int> symbol_positions{4, 8};
        int slots_per_burst = 2;
        int burst_periodicity_slots = 40; // 20 ms at 30 kHz
        int first_slot = 0;
        std::optional<int> second_trs_offset_slots;
        int second_trs_period_multiple = 1;
        int bandwidth_prbs = 273;
        int tx_element = 0; // transmit element carrying the TRS port

        int num_subcarriers() const { return bandwidth_prbs * 12; }
        int symbols_per_burst() const { return 2 * slots_per_burst; }

        /// Returns an error message, or an empty string when valid.
        std::string check() const
        {
            if (comb_spacing < 1)
                return "trs: comb spacing must be >= 1";
            if (comb_offset < 0 || comb_offset >= comb_spacing)
                return "trs: comb offset must lie in [0, comb spacing)";
            const auto [a, b] = symbol_positions;
            if (a < 0 || b >= numerology.symbols_per_slot || b - a != 4)
                return "trs: the two symbol positions must lie in the slot and be exactly 4 symbols apart";
            if (slots_per_burst != 1 && slots_per_burst != 2)
                return "trs: slots per burst must be 1 or 2";
            if (bandwidth_prbs < 1)
                return "trs: bandwidth must be >= 1 PRB";
            if (burst_periodicity_slots < slots_per_burst)
                return "trs: burst periodicity shorter than the burst";
            if (first_slot < 0)
                return "trs: first slot must be >= 0";
            if (second_trs_offset_slots)
            {
                const int off = *second_trs_offset_slots;
                if (std::find(std::begin(second_trs_offsets), std::end(second_trs_offsets), off) == std::end(second_trs_offsets))
                    return "trs: second TRS offset must be one of 2, 3, 4, 5, 6, 10 slots";
                if (off < slots_per_burst)
                    return "trs: second TRS overlaps the first burst";
                if (second_trs_period_multiple < 1)
                    return "trs: second TRS periodicity multiple must be >= 1";
                if (off + slots_per_burst > burst_periodicity_slots)
                    return "trs: second TRS burst does not fit in the primary period";
            }
            return {};
        }

        void validate() const
        {
            if (auto msg = check(); !msg.empty())
                throw ConfigError(msg);
        }
    };

    struct TrsOccasion
    {
        double absolute_time = 0.0; // seconds
        int slot = 0;
        int symbol = 0;
        int trs_index = 0; // 0 = primary, 1 = second TRS
        std::vector<int> subcarrier_indices;
        std::vector<double> frequencies_hz; // baseband offsets of the indexed subcarriers
    };

    /**
     * Lists TRS occasions with start <= time < end. The primary TRS repeats every
     * burst_periodicity_slots; the optional second TRS is offset by second_trs_offset_slots and
     * repeats at second_trs_period_multiple times that periodicity.
     */
    inline std::vector<TrsOccasion> trs_occasions(const TrsConfig &cfg, double start, double end)
    {
        cfg.validate();
        std::vector<TrsOccasion> out;
        if (!(end > start))
            return out;

        const double tsym = cfg.numerology.symbol_duration();
        const int sps = cfg.numerology.symbols_per_slot;
        std::vector<int> idx;
        for (int k = cfg.comb_offset; k < cfg.num_subcarriers(); k += cfg.comb_spacing)
            idx.push_back(k);
        const auto grid = centered_grid(static_cast<std::size_t>(cfg.num_subcarriers()), cfg.numerology.subcarrier_spacing_hz);
        std::vector<double> freqs;
        for (int k : idx)
            freqs.push_back(grid[static_cast<std::size_t>(k)]);

        auto emit = [&](int trs_index, int base_slot, int period) {
            const long long first_k = static_cast<long long>(std::floor((start / tsym / sps - base_slot - cfg.slots_per_burst) / period));
            for (long long k = std::max(0LL, first_k);; ++k)
            {
                const long long burst = base_slot + k * period;
                if (static_cast<double>(burst * sps) * tsym >= end)
                    break;
                for (int s = 0; s < cfg.slots_per_burst; ++s)
                    for (int sym : {cfg.symbol_positions.first, cfg.symbol_positions.second})
                    {
                        const long long n = (burst + s) * sps + sym;
                        const double t = static_cast<double>(n) * tsym;
                        if (t < start || t >= end)
                            continue;
                        out.push_back({t, static_cast<int>(burst + s), sym, trs_index, idx, freqs});
                    }
            }
        };
        emit(0, cfg.first_slot, cfg.burst_periodicity_slots);
        if (cfg.second_trs_offset_slots)
            emit(1, cfg.first_slot + *cfg.second_trs_offset_slots, cfg.burst_periodicity_slots * cfg.second_trs_period_multiple);
        std::stable_sort(out.begin(), out.end(), [](const TrsOccasion &a, const TrsOccasion &b) { return a.absolute_time < b.absolute_time; });
        return out;
    }

    /// UE-side noisy per-RE channel estimates at one TRS symbol.
    struct ObservedSnapshot
    {
        double time = 0.0;
        CMatrix estimates;           // subcarrier x rx antenna
        double noise_variance = 0.0; // per RE, after optional smoothing
    };

    struct ObserveOptions
    {
        int smoothing_width = 1; // moving average over adjacent TRS subcarriers; 1 = raw LS
    };

    /**
     * Least-squares TRS estimates: true channel of the TRS port plus circularly-symmetric complex
     * Gaussian noise with variance 1 / 10^(snr_db / 10) (profile power is unit). Deterministic for a
     * given (seed, occasion). snr_db = +inf yields the exact channel.
     */
    inline ObservedSnapshot observe(const ChannelSampler &sampler, const TrsOccasion &occasion, double snr_db,
                                    std::uint64_t seed, int tx_element = 0, const ObserveOptions &opts = {})
    {
        if (tx_element < 0 || tx_element >= sampler.num_tx())
            throw std::invalid_argument("observe: TRS transmit element out of range");
        if (opts.smoothing_width < 1 || opts.smoothing_width % 2 == 0)
            throw std::invalid_argument("observe: smoothing width must be odd and >= 1");
        CVector port = CVector::Zero(sampler.num_tx());
        port[tx_element] = 1.0;

        ObservedSnapshot snap;
        snap.time = occasion.absolute_time;
        snap.estimates = sampler.freq_response_port(occasion.absolute_time, occasion.frequencies_hz, port);
        if (std::isinf(snr_db) && snr_db > 0.0)
            return snap;

        const double var = 1.0 / db_to_linear(snr_db);
        Rng rng(derive_seed(seed, {std::bit_cast<std::uint64_t>(occasion.absolute_time),
                                   static_cast<std::uint64_t>(occasion.trs_index)}));
        for (Eigen::Index u = 0; u < snap.estimates.cols(); ++u)
            for (Eigen::Index k = 0; k < snap.estimates.rows(); ++k)
                snap.estimates(k, u) += rng.complex_normal(var);
        snap.noise_variance = var;

        if (opts.smoothing_width > 1)
        {
            const Eigen::Index half = opts.smoothing_width / 2, n = snap.estimates.rows();
            CMatrix smoothed(snap.estimates.rows(), snap.estimates.cols());
            for (Eigen::Index k = 0; k < n; ++k)
            {
                const Eigen::Index lo = std::max<Eigen::Index>(0, k - half), hi = std::min(n - 1, k + half);
                smoothed.row(k) = snap.estimates.middleRows(lo, hi - lo + 1).colwise().mean();
            }
            snap.estimates = std::move(smoothed);
            snap.noise_variance = var / static_cast<double>(opts.smoothing_width);
        }
        return snap;
    }

    inline double default_pair_tolerance(const Numerology &num) { return 0.5 * num.symbol_duration(); }

    /**
     * Index pairs (i, j), i before j, whose time difference matches delay within tolerance.
     * Sorted by (time of i, time of j). Works on any list with an absolute_time or time member.
     */
    template <typename Occ>
    std::vector<std::pair<std::size_t, std::size_t>> snapshot_pairs(const std::vector<Occ> &items, double delay, double tolerance)
    {
        if (!(tolerance >= 0.0))
            throw std::invalid_argument("snapshot_pairs: tolerance must be >= 0");
        auto time_of = [](const Occ &o) {
            if constexpr (requires { o.absolute_time; })
                return o.absolute_time;
            else
                return o.time;
        };
        std::vector<std::size_t> order(items.size());
        for (std::size_t i = 0; i < order.size(); ++i)
            order[i] = i;
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return time_of(items[a]) < time_of(items[b]); });

        std::vector<std::pair<std::size_t, std::size_t>> out;
        for (std::size_t a = 0; a < order.size(); ++a)
            for (std::size_t b = a + 1; b < order.size(); ++b)
            {
                const double dt = time_of(items[order[b]]) - time_of(items[order[a]]);
                if (std::abs(dt - delay) <= tolerance)
                    out.emplace_back(order[a], order[b]);
            }
        return out;
    }
} // namespace tdcp

#endif
