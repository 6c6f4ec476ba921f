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

#ifndef TDCP_POLICY_HPP
#define TDCP_POLICY_HPP

#include "report_codec.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace tdcp
{
    /// Threshold rule on the averaged correlation amplitude. High correlation (slowly varying
    /// channel) selects high_corr_mode.
    struct SwitchingPolicy
    {
        CorrelationDelay metric_delay = CorrelationDelay::slots(3);
        double threshold = 0.9;
        double hysteresis = 0.0;
        std::string high_corr_mode = "high";
        std::string low_corr_mode = "low";

        void validate() const
        {
            if (!metric_delay.is_allowed())
                throw ConfigError("policy: delay " + metric_delay.label() + " is not in the allowed set");
            if (!(hysteresis >= 0.0))
                throw ConfigError("policy: hysteresis must be >= 0");
            if (!(threshold - hysteresis >= 0.0) || !(threshold + hysteresis <= 1.0))
                throw ConfigError("policy: threshold +/- hysteresis must lie in [0, 1]");
            if (high_corr_mode == low_corr_mode)
                throw ConfigError("policy: the two modes must differ");
        }
    };

    struct ModeDecision
    {
        std::string mode;
        double metric_value = 0.0;
        double decided_at = 0.0;
    };

    inline ModeDecision decide_mode(double metric, const std::optional<ModeDecision> &previous,
                                    const SwitchingPolicy &policy, double time = 0.0)
    {
        if (!(metric >= 0.0) || metric > 1.0)
            throw std::invalid_argument("decide_mode: metric outside [0, 1]");
        std::string mode;
        if (metric > policy.threshold + policy.hysteresis)
            mode = policy.high_corr_mode;
        else if (metric < policy.threshold - policy.hysteresis)
            mode = policy.low_corr_mode;
        else
            mode = previous ? previous->mode : policy.high_corr_mode;
        return {mode, metric, time};
    }

    /// One calibration observation: throughput_a is the high-correlation mode's throughput.
    struct CalibrationSample
    {
        double speed_kmh = 0.0;
        double metric = 0.0;
        double throughput_a = 0.0;
        double throughput_b = 0.0;
    };

    /// Mean throughput when metric > threshold selects mode A and mode B otherwise.
    inline double switched_mean_throughput(std::span<const CalibrationSample> samples, double threshold)
    {
        double sum = 0.0;
        for (const auto &s : samples)
            sum += s.metric > threshold ? s.throughput_a : s.throughput_b;
        return sum / static_cast<double>(samples.size());
    }

    /**
     * Threshold maximizing the switched mean throughput. The objective is constant between
     * consecutive distinct metric values, so the candidates are the midpoints of those gaps
     * (plus the midpoints of [0, min] and [max, 1]). Ties go to the larger threshold.
     */
    inline double calibrate_threshold(std::span<const CalibrationSample> samples)
    {
        if (samples.empty())
            throw std::invalid_argument("calibrate_threshold: no samples");
        std::vector<double> m;
        m.reserve(samples.size());
        for (const auto &s : samples)
        {
            if (!(s.metric >= 0.0) || s.metric > 1.0)
                throw std::invalid_argument("calibrate_threshold: metric outside [0, 1]");
            m.push_back(s.metric);
        }
        std::sort(m.begin(), m.end());
        m.erase(std::unique(m.begin(), m.end()), m.end());

        std::vector<double> candidates;
        candidates.push_back(0.5 * m.front());
        for (std::size_t i = 1; i < m.size(); ++i)
            candidates.push_back(0.5 * (m[i - 1] + m[i]));
        candidates.push_back(0.5 * (m.back() + 1.0));

        // Sweep candidates in ascending order, moving samples from mode A to mode B as the
        // threshold passes their metric. Summation order is fixed by the sorted metrics.
        std::vector<const CalibrationSample *> sorted;
        for (const auto &s : samples)
            sorted.push_back(&s);
        std::stable_sort(sorted.begin(), sorted.end(), [](auto *a, auto *b) {
            if (a->metric != b->metric)
                return a->metric < b->metric;
            if (a->throughput_a != b->throughput_a)
                return a->throughput_a < b->throughput_a;
            return a->throughput_b < b->throughput_b;
        });

        double best = -1.0;
        double best_value = -std::numeric_limits<double>::infinity();
        std::size_t moved = 0;
        for (double th : candidates)
        {
            while (moved < sorted.size() && !(sorted[moved]->metric > th))
                ++moved;
            double sum = 0.0;
            for (std::size_t i = 0; i < sorted.size(); ++i)
                sum += i < moved ? sorted[i]->throughput_b : sorted[i]->throughput_a;
            if (sum >= best_value)
            {
                best_value = sum;
                best = th;
            }
        }
        return best;
    }

    /// Per-SNR calibrated thresholds, linearly interpolated in dB and clamped at the ends.
    class SnrThresholdMap
    {
    public:
        void set(double snr_db, double threshold) { table_[snr_db] = threshold; }
        bool empty() const { return table_.empty(); }
        const std::map<double, double> &entries() const { return table_; }

        double lookup(double snr_db) const
        {
            if (table_.empty())
                throw std::logic_error("SnrThresholdMap: empty");
            auto hi = table_.lower_bound(snr_db);
            if (hi == table_.end())
                return std::prev(hi)->second;
            if (hi == table_.begin() || hi->first == snr_db)
                return hi->second;
            auto lo = std::prev(hi);
            const double w = (snr_db - lo->first) / (hi->first - lo->first);
            return lo->second + w * (hi->second - lo->second);
        }

    private:
        std::map<double, double> table_;
    };
} // namespace tdcp

#endif
