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

#ifndef TDCP_LINK_EVAL_HPP
#define TDCP_LINK_EVAL_HPP

// Throughput-proxy evaluation of the two switching use cases:
//   A: grid-of-beams (Type-I proxy) vs eigen-beamforming (Type-II proxy) precoding under
//      feedback aging;
//   B: one vs two additional DMRS symbols under intra-slot channel variation.
// Spectral efficiency is a log-det capacity proxy; there is no coded link simulation.

#include "common.hpp"
#include "fading_channel.hpp"
#include "policy.hpp"
#include "report_codec.hpp"
#include "tdcp_core.hpp"
#include "trs_grid.hpp"

#include <algorithm>
#include <bit>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

namespace tdcp
{
    enum class PrecoderType
    {
        type1,
        type2
    };

    inline const char *to_string(PrecoderType t) { return t == PrecoderType::type1 ? "TypeI" : "TypeII"; }

    struct PrecoderReport
    {
        CMatrix matrix; // tx elements x rank, orthonormal columns
        PrecoderType type = PrecoderType::type2;
        double computed_at = 0.0;
        int rank = 1;
    };

    /// Stacks per-frequency (rx x tx) matrices into one (freq * rx) x tx matrix.
    inline CMatrix stack_channel(std::span<const CMatrix> per_freq)
    {
        if (per_freq.empty())
            throw std::invalid_argument("stack_channel: empty frequency grid");
        const auto rows = per_freq.front().rows();
        CMatrix out(rows * static_cast<Eigen::Index>(per_freq.size()), per_freq.front().cols());
        for (std::size_t k = 0; k < per_freq.size(); ++k)
            out.middleRows(static_cast<Eigen::Index>(k) * rows, rows) = per_freq[k];
        return out;
    }

    /// Type-II proxy: the rank dominant right singular vectors of H (unquantized).
    inline PrecoderReport precoder_type2(const CMatrix &h, int rank, double computed_at = 0.0)
    {
        if (rank < 1 || rank > std::min(h.rows(), h.cols()))
            throw std::invalid_argument("precoder_type2: rank exceeds channel dimensions");
        Eigen::JacobiSVD<CMatrix> svd(h, Eigen::ComputeThinV);
        return {svd.matrixV().leftCols(rank), PrecoderType::type2, computed_at, rank};
    }

    namespace detail
    {
        // Oversampled 2D DFT beam over one polarization, unit norm.
        inline CVector dft_beam(const AntennaArray &array, int l, int m, int oversampling)
        {
            const int n1 = array.columns, n2 = array.rows;
            CVector v(n1 * n2);
            for (int r = 0; r < n2; ++r)
                for (int c = 0; c < n1; ++c)
                    v[r * n1 + c] = std::polar(1.0, 2.0 * pi * (static_cast<double>(l) * c / (oversampling * n1) +
                                                                 static_cast<double>(m) * r / (oversampling * n2)));
            return v / std::sqrt(static_cast<double>(n1 * n2));
        }
    } // namespace detail

    /// Every Type-I proxy candidate for the array and rank, in search order.
    inline std::vector<CMatrix> type1_codebook(const AntennaArray &array, int oversampling, int rank)
    {
        if (oversampling < 1)
            throw std::invalid_argument("type1_codebook: oversampling must be >= 1");
        if (rank < 1 || rank > 2 || (rank == 2 && array.polarizations != 2))
            throw std::invalid_argument("type1_codebook: rank must be 1, or 2 with a dual-polarized array");
        const int o1 = array.columns > 1 ? oversampling : 1;
        const int o2 = array.rows > 1 ? oversampling : 1;
        const Eigen::Index half = array.elements_per_polarization();
        const Complex phases[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
        std::vector<CMatrix> book;
        for (int m = 0; m < o2 * array.rows; ++m)
            for (int l = 0; l < o1 * array.columns; ++l)
            {
                const CVector v = detail::dft_beam(array, l, m, oversampling);
                if (array.polarizations == 1)
                {
                    book.emplace_back(v);
                    continue;
                }
                const int n_phase = rank == 1 ? 4 : 2;
                for (int p = 0; p < n_phase; ++p)
                {
                    CMatrix w(2 * half, rank);
                    w.col(0) << v, phases[p] * v;
                    if (rank == 2)
                        w.col(1) << v, -phases[p] * v;
                    book.emplace_back(w / std::sqrt(2.0));
                }
            }
        return book;
    }

    /// Type-I proxy: exhaustive search of the oversampled DFT grid with co-phasing,
    /// maximizing ||H W||_F^2.
    inline PrecoderReport precoder_type1(const CMatrix &h, const AntennaArray &array, int oversampling, int rank,
                                         double computed_at = 0.0)
    {
        if (h.cols() != array.num_elements())
            throw std::invalid_argument("precoder_type1: channel width differs from array size");
        if (rank > std::min(h.rows(), h.cols()))
            throw std::invalid_argument("precoder_type1: rank exceeds channel dimensions");
        const CMatrix gram = h.adjoint() * h;
        const auto book = type1_codebook(array, oversampling, rank);
        double best = -1.0;
        std::size_t best_i = 0;
        for (std::size_t i = 0; i < book.size(); ++i)
        {
            const double g = (book[i].adjoint() * gram * book[i]).trace().real();
            if (g > best)
            {
                best = g;
                best_i = i;
            }
        }
        return {book[best_i], PrecoderType::type1, computed_at, rank};
    }

    /// log2 det(I + snr / rank * (H W)(H W)^H) for one frequency.
    inline double spectral_efficiency(const CMatrix &h, const CMatrix &w, double snr_linear)
    {
        const CMatrix hw = h * w;
        const auto rank = static_cast<double>(w.cols());
        CMatrix m = CMatrix::Identity(hw.cols(), hw.cols()) + (snr_linear / rank) * (hw.adjoint() * hw);
        return std::log2(std::max(m.determinant().real(), 1.0));
    }

    inline double mean_spectral_efficiency(std::span<const CMatrix> per_freq, const CMatrix &w, double snr_linear)
    {
        double s = 0.0;
        for (const auto &h : per_freq)
            s += spectral_efficiency(h, w, snr_linear);
        return s / static_cast<double>(per_freq.size());
    }

    struct ThroughputSample
    {
        double spectral_efficiency = 0.0; // bits/s/Hz
        int slot_index = 0;
    };

    /// Period-mean spectral efficiency of a fixed precoder over feedback_period_slots slots
    /// starting at start_time, evaluated on the true (aged) channel.
    inline ThroughputSample aged_throughput(const ChannelSampler &sampler, const PrecoderReport &report, double pdsch_snr_db,
                                            int feedback_period_slots, std::span<const double> freq_grid,
                                            double start_time, const Numerology &num = {})
    {
        if (feedback_period_slots < 1)
            throw std::invalid_argument("aged_throughput: feedback period must be >= 1 slot");
        const double snr = db_to_linear(pdsch_snr_db);
        double sum = 0.0;
        for (int k = 0; k < feedback_period_slots; ++k)
        {
            const auto h = sampler.freq_response(start_time + k * num.slot_duration(), freq_grid);
            sum += mean_spectral_efficiency(h, report.matrix, snr);
        }
        return {sum / feedback_period_slots, feedback_period_slots};
    }

    /// Computes the precoder of the given type for every rank up to max_rank and keeps the one
    /// with the highest spectral efficiency on the channel it was computed from.
    inline PrecoderReport select_precoder(std::span<const CMatrix> per_freq, PrecoderType type, const AntennaArray &array,
                                          int oversampling, int max_rank, double snr_linear, double t)
    {
        const CMatrix stacked = stack_channel(per_freq);
        int limit = std::min<int>(max_rank, static_cast<int>(std::min(per_freq.front().rows(), per_freq.front().cols())));
        if (type == PrecoderType::type1)
            limit = std::min(limit, array.polarizations == 2 ? 2 : 1);
        PrecoderReport best;
        double best_se = -1.0;
        for (int r = 1; r <= limit; ++r)
        {
            auto rep = type == PrecoderType::type2 ? precoder_type2(stacked, r, t)
                                                   : precoder_type1(stacked, array, oversampling, r, t);
            const double se = mean_spectral_efficiency(per_freq, rep.matrix, snr_linear);
            if (se > best_se)
            {
                best_se = se;
                best = std::move(rep);
            }
        }
        return best;
    }

    // ---------------------------------------------------------------------------------------
    // DMRS time-direction density

    /**
     * Per-symbol normalized MSE of DMRS-based channel estimates over one slot. Raw LS estimates
     * at the DMRS symbols; data symbols use linear interpolation in time between the two
     * nearest DMRS symbols and hold the nearest estimate outside the DMRS span.
     */
    inline std::vector<double> dmrs_estimate_mse(const ChannelSampler &sampler, double slot_start,
                                                 std::span<const int> dmrs_positions, double pdsch_snr_db,
                                                 std::span<const double> freq_grid, std::uint64_t seed,
                                                 const Numerology &num = {}, int tx_element = 0,
                                                 double freq_offset_hz = 0.0)
    {
        if (dmrs_positions.empty())
            throw std::invalid_argument("dmrs_estimate_mse: no DMRS positions");
        const int nsym = num.symbols_per_slot;
        for (std::size_t i = 0; i < dmrs_positions.size(); ++i)
            if (dmrs_positions[i] < 0 || dmrs_positions[i] >= nsym || (i > 0 && dmrs_positions[i] <= dmrs_positions[i - 1]))
                throw std::invalid_argument("dmrs_estimate_mse: positions must be sorted and inside the slot");

        CVector port = CVector::Zero(sampler.num_tx());
        port[tx_element] = 1.0;
        const double tsym = num.symbol_duration();
        std::vector<CMatrix> truth(static_cast<std::size_t>(nsym));
        for (int l = 0; l < nsym; ++l)
            truth[static_cast<std::size_t>(l)] = sampler.freq_response_port(slot_start + l * tsym, freq_grid, port);

        const bool noiseless = std::isinf(pdsch_snr_db) && pdsch_snr_db > 0.0;
        const double var = noiseless ? 0.0 : 1.0 / db_to_linear(pdsch_snr_db);
        Rng rng(derive_seed(seed, {0xD3ULL}));
        std::map<int, CMatrix> pilots;
        for (int p : dmrs_positions)
        {
            CMatrix est = truth[static_cast<std::size_t>(p)];
            if (!noiseless)
                for (Eigen::Index u = 0; u < est.cols(); ++u)
                    for (Eigen::Index k = 0; k < est.rows(); ++k)
                        est(k, u) += rng.complex_normal(var);
            pilots.emplace(p, std::move(est));
        }

        std::vector<double> mse(static_cast<std::size_t>(nsym));
        for (int l = 0; l < nsym; ++l)
        {
            CMatrix est;
            if (auto it = pilots.find(l); it != pilots.end())
                est = it->second;
            else if (l < dmrs_positions.front() || l > dmrs_positions.back())
            {
                const int p = l < dmrs_positions.front() ? dmrs_positions.front() : dmrs_positions.back();
                est = std::polar(1.0, 2.0 * pi * freq_offset_hz * tsym * (l - p)) * pilots.at(p);
            }
            else
            {
                auto hi = pilots.upper_bound(l);
                auto lo = std::prev(hi);
                const double w = static_cast<double>(l - lo->first) / (hi->first - lo->first);
                // Interpolate after removing the tracked frequency offset, then restore it.
                const double rad = 2.0 * pi * freq_offset_hz * tsym;
                const Complex rot_lo = std::polar(1.0, rad * (l - lo->first));
                const Complex rot_hi = std::polar(1.0, -rad * (hi->first - l));
                est = (1.0 - w) * rot_lo * lo->second + w * rot_hi * hi->second;
            }
            const auto &h = truth[static_cast<std::size_t>(l)];
            mse[static_cast<std::size_t>(l)] = (est - h).squaredNorm() / h.squaredNorm();
        }
        return mse;
    }

    /// Slot spectral efficiency with DMRS overhead: (1 / 14) * sum over data symbols of
    /// log2(1 + snr / (1 + snr * mse)).
    inline double dmrs_mode_se(std::span<const double> mse_per_symbol, std::span<const int> dmrs_positions, double snr_db)
    {
        const double snr = db_to_linear(snr_db);
        double sum = 0.0;
        for (std::size_t l = 0; l < mse_per_symbol.size(); ++l)
        {
            if (std::find(dmrs_positions.begin(), dmrs_positions.end(), static_cast<int>(l)) != dmrs_positions.end())
                continue;
            sum += std::log2(1.0 + snr / (1.0 + snr * mse_per_symbol[l]));
        }
        return sum / static_cast<double>(mse_per_symbol.size());
    }

    // ---------------------------------------------------------------------------------------
    // Use-case evaluators

    /// Everything an evaluator needs; built from a scenario file by the harness.
    struct LinkScenario
    {
        ChannelModelConfig channel;
        TrsConfig trs;
        double trs_snr_db = 10.0;
        double pdsch_snr_db = 10.0;
        int pdsch_prbs = 24;              // 10 MHz at 30 kHz
        int pdsch_freq_step = 12;         // evaluate every n-th subcarrier (12 = one per PRB)
        int feedback_period_slots = 20;
        int csi_delay_slots = 4;          // slots between the CSI measurement and its first use
        int max_rank = 2;
        int oversampling = 4;
        std::vector<int> dmrs_one_additional{2, 11};
        std::vector<int> dmrs_two_additional{2, 7, 11};
        std::vector<double> speeds_kmh;
        std::vector<double> directions_deg; // empty: uniform random per drop
        std::vector<CorrelationDelay> metric_delays;
        int averaging_bursts = 4;           // TRS periods in the sliding metric average
        int periods_per_drop = 8;           // evaluated feedback periods per drop
        bool noise_bias_correction = false;
        bool frequency_tracking = true;     // remove the TRS-tracked Doppler shift before DMRS interpolation
        int drops = 200;
        std::uint64_t seed = 1;

        std::vector<double> pdsch_grid() const
        {
            const auto full = centered_grid(static_cast<std::size_t>(pdsch_prbs * 12), trs.numerology.subcarrier_spacing_hz);
            std::vector<double> g;
            for (std::size_t k = static_cast<std::size_t>(pdsch_freq_step / 2); k < full.size(); k += static_cast<std::size_t>(pdsch_freq_step))
                g.push_back(full[k]);
            return g;
        }
    };

    /// Runs body(i) for i in [0, n); the harness supplies a parallel implementation.
    using DropExecutor = std::function<void(std::size_t n, const std::function<void(std::size_t)> &body)>;

    inline void serial_executor(std::size_t n, const std::function<void(std::size_t)> &body)
    {
        for (std::size_t i = 0; i < n; ++i)
            body(i);
    }

    /// One feedback period inside a drop.
    struct CycleRecord
    {
        double se_high = 0.0; // high-correlation mode (Type-II / one additional DMRS)
        double se_low = 0.0;  // low-correlation mode (Type-I / two additional DMRS)
        std::map<int, double> metric; // windowed TDCP metric keyed by delay in symbols
    };

    /// One drop: a terminal with fixed speed and direction observed over several TRS periods.
    struct DropRecord
    {
        double speed_kmh = 0.0;
        double direction_deg = 0.0;
        std::vector<CycleRecord> cycles;

        double mean_se_high() const { return mean_of(&CycleRecord::se_high); }
        double mean_se_low() const { return mean_of(&CycleRecord::se_low); }

    private:
        double mean_of(double CycleRecord::*field) const
        {
            double s = 0.0;
            for (const auto &c : cycles)
                s += c.*field;
            return s / static_cast<double>(cycles.size());
        }
    };

    enum class StreamId : std::uint64_t
    {
        evaluation = 1,
        calibration = 2,
    };

    namespace detail
    {
        inline double drop_direction(const LinkScenario &sc, std::size_t drop, Rng &rng)
        {
            const double random_deg = rng.uniform(0.0, 360.0);
            if (sc.directions_deg.empty())
                return random_deg;
            return sc.directions_deg[drop % sc.directions_deg.size()];
        }

        /// TRS metric at each requested delay from the occasions in [window_start, window_end).
        inline std::map<int, double> measure_metrics(const LinkScenario &sc, const ChannelSampler &sampler,
                                                     std::span<const CorrelationDelay> delays, double window_start,
                                                     double window_end, std::uint64_t seed)
        {
            const auto occ = trs_occasions(sc.trs, window_start, window_end);
            std::vector<ObservedSnapshot> snaps;
            snaps.reserve(occ.size());
            for (const auto &o : occ)
                snaps.push_back(observe(sampler, o, sc.trs_snr_db, seed, sc.trs.tx_element));
            std::map<int, double> out;
            const CorrelationOptions copt{sc.noise_bias_correction};
            for (const auto &d : delays)
            {
                const double dt = d.seconds(sc.trs.numerology);
                std::vector<CorrelationSample> samples;
                for (auto [i, j] : snapshot_pairs(occ, dt, default_pair_tolerance(sc.trs.numerology)))
                    samples.push_back({dt, corr_amplitude(snaps[i], snaps[j], copt), std::nullopt});
                if (samples.empty())
                    throw ConfigError("delay " + d.label() + " is not realizable by the TRS configuration");
                out[d.in_symbols()] = average_amplitude(samples);
            }
            return out;
        }

        /// Frequency offset tracked from the TRS: phase of the summed correlations over all
        /// same-slot symbol pairs in [window_start, window_end), divided by 2 pi times their spacing.
        inline double tracked_frequency_offset(const LinkScenario &sc, const ChannelSampler &sampler, double window_start,
                                               double window_end, std::uint64_t seed)
        {
            const auto occ = trs_occasions(sc.trs, window_start, window_end);
            const int spacing = sc.trs.symbol_positions.second - sc.trs.symbol_positions.first;
            const double dt = spacing * sc.trs.numerology.symbol_duration();
            Complex acc(0.0);
            for (auto [i, j] : snapshot_pairs(occ, dt, default_pair_tolerance(sc.trs.numerology)))
            {
                const auto a = observe(sampler, occ[i], sc.trs_snr_db, seed, sc.trs.tx_element);
                const auto b = observe(sampler, occ[j], sc.trs_snr_db, seed, sc.trs.tx_element);
                acc += a.estimates.reshaped().dot(b.estimates.reshaped());
            }
            return std::abs(acc) > 0.0 ? std::arg(acc) / (2.0 * pi * dt) : 0.0;
        }

        // First slot after the TRS bursts of one period (relative to the period start).
        inline int bursts_end_slot(const TrsConfig &trs)
        {
            int last = trs.first_slot + trs.slots_per_burst;
            if (trs.second_trs_offset_slots)
                last = std::max(last, trs.first_slot + *trs.second_trs_offset_slots + trs.slots_per_burst);
            return last;
        }

        inline std::vector<CorrelationDelay> delays_with(std::vector<CorrelationDelay> d, std::optional<CorrelationDelay> extra)
        {
            if (extra && std::find(d.begin(), d.end(), *extra) == d.end())
                d.push_back(*extra);
            std::sort(d.begin(), d.end());
            return d;
        }

        /// Runs a drop: one TRS measurement per TRS period, a sliding average of the last
        /// averaging_bursts measurements, and evaluate(sampler, burst_start, t, trs_seed, seed)
        /// at the end t of the bursts.
        /// The first averaging_bursts - 1 periods only fill the averaging window.
        template <typename Evaluate>
        DropRecord run_drop(const LinkScenario &sc, double speed_kmh, std::size_t drop, std::uint64_t drop_seed,
                            std::span<const CorrelationDelay> delays, Evaluate &&evaluate)
        {
            if (sc.averaging_bursts < 1 || sc.periods_per_drop < 1)
                throw ConfigError("averaging_bursts and periods_per_drop must be >= 1");
            Rng rng(drop_seed);
            DropRecord rec;
            rec.speed_kmh = speed_kmh;
            rec.direction_deg = drop_direction(sc, drop, rng);
            const ChannelSampler sampler = make_sampler(
                sc.channel, {kmh_to_mps(speed_kmh), deg_to_rad(rec.direction_deg), 0.0}, derive_seed(drop_seed, {1}));

            const double slot = sc.trs.numerology.slot_duration();
            const int period = sc.trs.burst_periodicity_slots;
            const int end_slot = bursts_end_slot(sc.trs);
            const int total = sc.averaging_bursts - 1 + sc.periods_per_drop;
            std::vector<std::map<int, double>> history;
            for (int c = 0; c < total; ++c)
            {
                const double t0 = static_cast<double>(c) * period * slot;
                const std::uint64_t trs_seed = derive_seed(drop_seed, {2, static_cast<std::uint64_t>(c)});
                history.push_back(measure_metrics(sc, sampler, delays, t0, t0 + end_slot * slot, trs_seed));
                if (c + 1 < sc.averaging_bursts)
                    continue;
                CycleRecord cyc;
                for (const auto &d : delays)
                {
                    double sum = 0.0;
                    for (int k = c + 1 - sc.averaging_bursts; k <= c; ++k)
                        sum += history[static_cast<std::size_t>(k)].at(d.in_symbols());
                    cyc.metric[d.in_symbols()] = sum / sc.averaging_bursts;
                }
                std::tie(cyc.se_high, cyc.se_low) =
                    evaluate(sampler, t0, t0 + end_slot * slot, trs_seed, derive_seed(drop_seed, {3, static_cast<std::uint64_t>(c)}));
                rec.cycles.push_back(std::move(cyc));
            }
            return rec;
        }
    } // namespace detail

    /// One drop of use case A. In each TRS period the precoders are computed right after the
    /// TRS bursts and then used for one feedback period, csi_delay_slots later.
    inline DropRecord simulate_drop_a(const LinkScenario &sc, double speed_kmh, std::size_t drop, StreamId stream,
                                      std::span<const CorrelationDelay> delays)
    {
        const std::uint64_t drop_seed = derive_seed(sc.seed, {static_cast<std::uint64_t>(stream), 0xA0ULL,
                                                              std::bit_cast<std::uint64_t>(speed_kmh), drop});
        const auto grid = sc.pdsch_grid();
        const double snr = db_to_linear(sc.pdsch_snr_db);
        const double slot = sc.trs.numerology.slot_duration();
        return detail::run_drop(sc, speed_kmh, drop, drop_seed, delays, [&](const ChannelSampler &sampler, double, double t_fb, std::uint64_t, std::uint64_t) {
            const auto h_fb = sampler.freq_response(t_fb, grid);
            const auto w2 = select_precoder(h_fb, PrecoderType::type2, sc.channel.tx, sc.oversampling, sc.max_rank, snr, t_fb);
            const auto w1 = select_precoder(h_fb, PrecoderType::type1, sc.channel.tx, sc.oversampling, sc.max_rank, snr, t_fb);
            double s1 = 0.0, s2 = 0.0;
            for (int k = 0; k < sc.feedback_period_slots; ++k)
            {
                const auto h = sampler.freq_response(t_fb + (sc.csi_delay_slots + k) * slot, grid);
                s1 += mean_spectral_efficiency(h, w1.matrix, snr);
                s2 += mean_spectral_efficiency(h, w2.matrix, snr);
            }
            return std::pair{s2 / sc.feedback_period_slots, s1 / sc.feedback_period_slots};
        });
    }

    /// One drop of use case B. In each TRS period one data slot right after the burst is
    /// evaluated with both DMRS patterns.
    inline DropRecord simulate_drop_b(const LinkScenario &sc, double speed_kmh, std::size_t drop, StreamId stream,
                                      std::span<const CorrelationDelay> delays)
    {
        const std::uint64_t drop_seed = derive_seed(sc.seed, {static_cast<std::uint64_t>(stream), 0xB0ULL,
                                                              std::bit_cast<std::uint64_t>(speed_kmh), drop});
        const auto grid = centered_grid(static_cast<std::size_t>(sc.pdsch_prbs * 12), sc.trs.numerology.subcarrier_spacing_hz);
        return detail::run_drop(sc, speed_kmh, drop, drop_seed, delays, [&](const ChannelSampler &sampler, double t0, double t, std::uint64_t trs_seed, std::uint64_t seed) {
            const double f0 = sc.frequency_tracking ? detail::tracked_frequency_offset(sc, sampler, t0, t, trs_seed) : 0.0;
            const auto mse1 = dmrs_estimate_mse(sampler, t, sc.dmrs_one_additional, sc.pdsch_snr_db, grid,
                                                derive_seed(seed, {1}), sc.trs.numerology, sc.trs.tx_element, f0);
            const auto mse2 = dmrs_estimate_mse(sampler, t, sc.dmrs_two_additional, sc.pdsch_snr_db, grid,
                                                derive_seed(seed, {2}), sc.trs.numerology, sc.trs.tx_element, f0);
            return std::pair{dmrs_mode_se(mse1, sc.dmrs_one_additional, sc.pdsch_snr_db),
                             dmrs_mode_se(mse2, sc.dmrs_two_additional, sc.pdsch_snr_db)};
        });
    }

    enum class UseCase
    {
        a,
        b
    };

    /// Simulates drops for every speed; records are ordered by (speed, drop).
    inline std::vector<DropRecord> simulate_drops(const LinkScenario &sc, UseCase uc, StreamId stream,
                                                  std::span<const CorrelationDelay> delays,
                                                  const DropExecutor &exec = serial_executor)
    {
        if (sc.drops < 1)
            throw ConfigError("drops must be >= 1");
        if (sc.speeds_kmh.empty())
            throw ConfigError("no speeds configured");
        const std::size_t per = static_cast<std::size_t>(sc.drops);
        std::vector<DropRecord> out(sc.speeds_kmh.size() * per);
        exec(out.size(), [&](std::size_t i) {
            const double v = sc.speeds_kmh[i / per];
            out[i] = uc == UseCase::a ? simulate_drop_a(sc, v, i % per, stream, delays)
                                      : simulate_drop_b(sc, v, i % per, stream, delays);
        });
        return out;
    }

    /// Calibration samples for the policy delay (mode A = high-correlation mode).
    inline std::vector<CalibrationSample> calibration_samples(std::span<const DropRecord> records, const CorrelationDelay &delay)
    {
        std::vector<CalibrationSample> s;
        for (const auto &r : records)
            for (const auto &c : r.cycles)
                s.push_back({r.speed_kmh, c.metric.at(delay.in_symbols()), c.se_high, c.se_low});
        return s;
    }

    struct ScenarioRow
    {
        double speed_kmh = 0.0;
        std::string scheme;
        std::string delay_label;
        double trs_snr_db = 0.0;
        double pdsch_snr_db = 0.0;
        double mean_se = 0.0;
        double mean_metric = std::numeric_limits<double>::quiet_NaN();
        double genie_agreement = std::numeric_limits<double>::quiet_NaN(); // switched rows only
    };

    struct ScenarioResult
    {
        std::vector<ScenarioRow> rows;
        std::optional<double> threshold;

        const ScenarioRow &row(double speed_kmh, const std::string &scheme) const
        {
            for (const auto &r : rows)
                if (r.speed_kmh == speed_kmh && r.scheme == scheme)
                    return r;
            throw std::out_of_range("no row for scheme " + scheme);
        }
    };

    inline std::string mode_names(UseCase uc, bool high)
    {
        if (uc == UseCase::a)
            return high ? "TypeII" : "TypeI";
        return high ? "DMRS-1+1" : "DMRS-1+2";
    }

    /**
     * Summarizes drop records into per-speed rows: both fixed modes, the switched scheme (when a
     * policy is given) and the genie that picks the better mode in every drop.
     */
    inline ScenarioResult summarize(const LinkScenario &sc, UseCase uc, std::span<const DropRecord> records,
                                    const std::optional<SwitchingPolicy> &policy)
    {
        ScenarioResult res;
        if (policy)
            res.threshold = policy->threshold;
        const std::size_t per = static_cast<std::size_t>(sc.drops);
        const std::string hi = mode_names(uc, true), lo = mode_names(uc, false);
        const std::optional<CorrelationDelay> metric_delay =
            policy ? std::optional(policy->metric_delay)
                   : (sc.metric_delays.empty() ? std::nullopt : std::optional(sc.metric_delays.front()));
        const std::string label = metric_delay ? metric_delay->label() : "";

        for (std::size_t s = 0; s < sc.speeds_kmh.size(); ++s)
        {
            double sum_hi = 0.0, sum_lo = 0.0, sum_sw = 0.0, sum_genie = 0.0, sum_metric = 0.0;
            double sum_agree = 0.0;
            for (std::size_t d = 0; d < per; ++d)
            {
                const auto &r = records[s * per + d];
                const double hi_mean = r.mean_se_high(), lo_mean = r.mean_se_low();
                sum_hi += hi_mean;
                sum_lo += lo_mean;
                sum_genie += std::max(hi_mean, lo_mean);
                double m = 0.0, sw = 0.0;
                std::size_t matches = 0;
                // Drops are independent terminals; the decision state lives within one drop.
                std::optional<ModeDecision> prev;
                for (const auto &c : r.cycles)
                {
                    if (metric_delay)
                        m += c.metric.at(metric_delay->in_symbols());
                    if (policy)
                    {
                        prev = decide_mode(c.metric.at(policy->metric_delay.in_symbols()), prev, *policy);
                        const bool pick_hi = prev->mode == policy->high_corr_mode;
                        sw += pick_hi ? c.se_high : c.se_low;
                        if (pick_hi == (hi_mean >= lo_mean))
                            ++matches;
                    }
                }
                const double nc = static_cast<double>(r.cycles.size());
                sum_metric += m / nc;
                sum_sw += sw / nc;
                sum_agree += static_cast<double>(matches) / nc;
            }
            const double n = static_cast<double>(per);
            const double v = sc.speeds_kmh[s];
            const double metric = metric_delay ? sum_metric / n : std::numeric_limits<double>::quiet_NaN();
            auto row = [&](std::string scheme, double se) {
                return ScenarioRow{v, std::move(scheme), label, sc.trs_snr_db, sc.pdsch_snr_db, se, metric,
                                   std::numeric_limits<double>::quiet_NaN()};
            };
            res.rows.push_back(row(lo, sum_lo / n));
            res.rows.push_back(row(hi, sum_hi / n));
            if (policy)
            {
                auto sw = row("switched-" + label, sum_sw / n);
                sw.genie_agreement = sum_agree / n;
                res.rows.push_back(sw);
            }
            res.rows.push_back(row("genie", sum_genie / n));
        }
        return res;
    }

    inline SwitchingPolicy default_policy(UseCase uc, CorrelationDelay delay, double threshold)
    {
        SwitchingPolicy p;
        p.metric_delay = delay;
        p.threshold = threshold;
        p.high_corr_mode = mode_names(uc, true);
        p.low_corr_mode = mode_names(uc, false);
        return p;
    }

    /// Calibrates the policy threshold on drops from the calibration stream.
    inline double calibrate_usecase(const LinkScenario &sc, UseCase uc, const CorrelationDelay &delay,
                                    const DropExecutor &exec = serial_executor)
    {
        const auto delays = detail::delays_with(sc.metric_delays, delay);
        const auto recs = simulate_drops(sc, uc, StreamId::calibration, delays, exec);
        const auto samples = calibration_samples(recs, delay);
        return calibrate_threshold(samples);
    }

    inline ScenarioResult eval_usecase(const LinkScenario &sc, UseCase uc, const std::optional<SwitchingPolicy> &policy,
                                       const DropExecutor &exec = serial_executor)
    {
        if (policy)
        {
            policy->validate();
            if (!delay_realizable(policy->metric_delay, sc.trs))
                throw ConfigError("policy delay " + policy->metric_delay.label() + " is not realizable by the TRS configuration");
        }
        const auto delays = detail::delays_with(sc.metric_delays, policy ? std::optional(policy->metric_delay) : std::nullopt);
        const auto recs = simulate_drops(sc, uc, StreamId::evaluation, delays, exec);
        return summarize(sc, uc, recs, policy);
    }

    /// Use case A: grid-of-beams vs eigen-beamforming precoding.
    inline ScenarioResult eval_usecase_a(const LinkScenario &sc, const std::optional<SwitchingPolicy> &policy,
                                         const DropExecutor &exec = serial_executor)
    {
        return eval_usecase(sc, UseCase::a, policy, exec);
    }

    /// Use case B: one vs two additional DMRS symbols.
    inline ScenarioResult eval_usecase_b(const LinkScenario &sc, const std::optional<SwitchingPolicy> &policy,
                                         const DropExecutor &exec = serial_executor)
    {
        return eval_usecase(sc, UseCase::b, policy, exec);
    }
} // namespace tdcp

#endif
