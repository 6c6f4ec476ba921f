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

#ifndef TDCP_TDCP_CORE_HPP
#define TDCP_TDCP_CORE_HPP

#include "common.hpp"
#include "trs_grid.hpp"

#include <optional>
#include <span>
#include <stdexcept>
#include <utility>

namespace tdcp
{
    /// Correlation amplitude (and optionally phase) at one correlation delay.
    struct CorrelationSample
    {
        double delay = 0.0;     // seconds
        double amplitude = 0.0; // in [0, 1]
        std::optional<double> phase;
    };

    struct DopplerEstimate
    {
        double f_d = 0.0; // Hz
    };

    struct CorrelationOptions
    {
        // Subtract the snapshots' noise power (N * noise_variance) from the energy terms.
        bool noise_bias_correction = false;
    };

    namespace detail
    {
        struct CorrelationSums
        {
            Complex cross;  // sum b * conj(a)
            double energy_a;
            double energy_b;
        };

        inline CorrelationSums correlation_sums(const CMatrix &a, const CMatrix &b)
        {
            if (a.rows() != b.rows() || a.cols() != b.cols())
                throw std::invalid_argument("correlation: snapshot shapes differ");
            CorrelationSums s{Complex(0.0), a.squaredNorm(), b.squaredNorm()};
            if (!(s.energy_a > 0.0) || !(s.energy_b > 0.0))
                throw std::domain_error("correlation: undefined for an all-zero snapshot");
            // sum over all (subcarrier, rx) elements of b_n * conj(a_n)
            s.cross = a.reshaped().dot(b.reshaped());
            return s;
        }
    } // namespace detail

    /**
     * Normalized instantaneous autocorrelation amplitude between two snapshots,
     *
     *   c = |sum_n b_n a_n^*| / (sqrt(sum_n |b_n|^2) sqrt(sum_n |a_n|^2)),
     *
     * with n running over every (subcarrier, rx antenna) element. Invariant to independent
     * positive scaling and global phase rotation of either snapshot.
     */
    inline double corr_amplitude(const CMatrix &a, const CMatrix &b)
    {
        const auto s = detail::correlation_sums(a, b);
        return std::min(1.0, std::abs(s.cross) / (std::sqrt(s.energy_a) * std::sqrt(s.energy_b)));
    }

    inline double corr_amplitude(const ObservedSnapshot &a, const ObservedSnapshot &b, const CorrelationOptions &opts = {})
    {
        if (!opts.noise_bias_correction)
            return corr_amplitude(a.estimates, b.estimates);
        const auto s = detail::correlation_sums(a.estimates, b.estimates);
        const double n = static_cast<double>(a.estimates.size());
        const double ea = s.energy_a - n * a.noise_variance;
        const double eb = s.energy_b - n * b.noise_variance;
        if (!(ea > 0.0) || !(eb > 0.0))
            return 0.0;
        return std::min(1.0, std::abs(s.cross) / (std::sqrt(ea) * std::sqrt(eb)));
    }

    /**
     * Correlation phase after frequency-offset compensation: arg(sum b a^*) plus the linear
     * rotation 2 pi residual_offset_hz delay, wrapped to (-pi, pi]. A receiver tuned to the
     * received frequency has residual_offset_hz equal to minus the mean Doppler shift.
     */
    inline double corr_phase(const CMatrix &a, const CMatrix &b, double delay, double residual_offset_hz)
    {
        const auto s = detail::correlation_sums(a, b);
        return wrap_phase(std::arg(s.cross) + 2.0 * pi * residual_offset_hz * delay);
    }

    inline double corr_phase(const ObservedSnapshot &a, const ObservedSnapshot &b, double delay, double residual_offset_hz)
    {
        return corr_phase(a.estimates, b.estimates, delay, residual_offset_hz);
    }

    /// Arithmetic mean of amplitudes at one delay; phases never enter.
    inline double average_amplitude(std::span<const CorrelationSample> samples)
    {
        if (samples.empty())
            throw std::invalid_argument("average_amplitude: no samples");
        double sum = 0.0;
        for (const auto &s : samples)
        {
            if (s.delay != samples.front().delay)
                throw std::invalid_argument("average_amplitude: samples have different delays");
            sum += s.amplitude;
        }
        return sum / static_cast<double>(samples.size());
    }

    /// RMS Doppler spread from the second-order expansion of the normalized autocorrelation:
    /// f_d = sqrt(1 - c) / (sqrt(2) pi delay).
    inline DopplerEstimate doppler_spread_from_corr(double c, double delay)
    {
        if (!(c >= 0.0) || c > 1.0)
            throw std::invalid_argument("doppler_spread_from_corr: correlation must lie in [0, 1]");
        if (!(delay > 0.0))
            throw std::invalid_argument("doppler_spread_from_corr: delay must be > 0");
        return {std::sqrt(1.0 - c) / (std::sqrt(2.0) * pi * delay)};
    }

    /// Maximum minus minimum Doppler over rays whose power exceeds threshold_db relative to the
    /// total. Kept only as a reference for how fragile this measure is.
    inline double doppler_spread_max_min(std::span<const std::pair<double, double>> rays, double detection_threshold_db)
    {
        if (rays.empty())
            throw std::invalid_argument("doppler_spread_max_min: no rays");
        double total = 0.0;
        for (const auto &[f, p] : rays)
            total += p;
        const double floor = total * db_to_linear(detection_threshold_db);
        bool any = false;
        double lo = 0.0, hi = 0.0;
        for (const auto &[f, p] : rays)
        {
            if (!(p > floor))
                continue;
            lo = any ? std::min(lo, f) : f;
            hi = any ? std::max(hi, f) : f;
            any = true;
        }
        return any ? hi - lo : 0.0;
    }

    /// Zeroth-order Bessel function of the first kind. Power series for small arguments,
    /// Miller's backward recurrence otherwise; absolute error below 1e-10.
    inline double bessel_j0(double x)
    {
        x = std::abs(x);
        if (x < 8.0)
        {
            const double q = -0.25 * x * x;
            double term = 1.0, sum = 1.0;
            for (int k = 1; k < 60; ++k)
            {
                term *= q / (static_cast<double>(k) * k);
                sum += term;
                if (std::abs(term) < 1e-17)
                    break;
            }
            return sum;
        }
        int n = 2 * ((static_cast<int>(x) + 30 + static_cast<int>(std::sqrt(40.0 * x))) / 2);
        double next = 0.0, cur = 1e-30, norm = 0.0, j0 = 0.0;
        for (int k = n; k > 0; --k)
        {
            const double prev = 2.0 * k / x * cur - next;
            next = cur;
            cur = prev;
            if ((k - 1) % 2 == 0 && k - 1 > 0)
                norm += 2.0 * cur;
            if (std::abs(cur) > 1e250)
            {
                cur *= 1e-250;
                next *= 1e-250;
                norm *= 1e-250;
            }
        }
        j0 = cur;
        norm += j0;
        return j0 / norm;
    }

    /// |J0(2 pi f_D delay)|: Jakes-model correlation amplitude.
    inline double jakes_autocorr_reference(double max_doppler_hz, double delay)
    {
        if (!(max_doppler_hz >= 0.0) || !(delay >= 0.0))
            throw std::invalid_argument("jakes_autocorr_reference: inputs must be >= 0");
        return std::abs(bessel_j0(2.0 * pi * max_doppler_hz * delay));
    }
} // namespace tdcp

#endif
