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

#ifndef TDCP_COMMON_HPP
#define TDCP_COMMON_HPP

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstdint>
#include <initializer_list>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

namespace tdcp
{
    using Complex = std::complex<double>;
    using CMatrix = Eigen::MatrixXcd;
    using CVector = Eigen::VectorXcd;

    inline constexpr double pi = std::numbers::pi;
    inline constexpr double speed_of_light = 299792458.0; // m/s

    /// Base class for all errors raised by the toolkit.
    class Error : public std::runtime_error
    {
    public:
        using std::runtime_error::runtime_error;
    };

    /// Invalid configuration (scenario files, report configs, tables).
    class ConfigError : public Error
    {
    public:
        using Error::Error;
    };

    /// Malformed serialized data.
    class FramingError : public Error
    {
    public:
        using Error::Error;
    };

    inline double kmh_to_mps(double kmh) { return kmh / 3.6; }
    inline double deg_to_rad(double deg) { return deg * pi / 180.0; }
    inline double rad_to_deg(double rad) { return rad * 180.0 / pi; }
    inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
    inline double linear_to_db(double lin) { return 10.0 * std::log10(lin); }

    /// Maximum Doppler shift for a terminal moving at speed_mps on carrier_hz.
    inline double max_doppler_hz(double speed_mps, double carrier_hz)
    {
        return speed_mps * carrier_hz / speed_of_light;
    }

    /// Wraps an angle to (-pi, pi].
    inline double wrap_phase(double phi)
    {
        double w = std::remainder(phi, 2.0 * pi);
        if (w <= -pi)
            w += 2.0 * pi;
        return w;
    }

    // splitmix64 finalizer; used to derive independent stream seeds.
    inline std::uint64_t mix64(std::uint64_t x)
    {
        x += 0x9E3779B97F4A7C15ULL;
        x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
        x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
        return x ^ (x >> 31);
    }

    /// Derives a child seed from a base seed and a list of stream identifiers.
    inline std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> ids)
    {
        std::uint64_t s = mix64(base);
        for (auto id : ids)
            s = mix64(s ^ mix64(id + 0x632BE59BD9B4E019ULL));
        return s;
    }

    /// Seeded random source. Outputs depend only on the seed.
    class Rng
    {
    public:
        explicit Rng(std::uint64_t seed) : engine_(seed) {}

        double uniform(double lo = 0.0, double hi = 1.0)
        {
            // 53 random mantissa bits; avoids implementation-defined distributions.
            const double u = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
            return lo + (hi - lo) * u;
        }

        double normal()
        {
            if (has_spare_)
            {
                has_spare_ = false;
                return spare_;
            }
            double u1 = 0.0;
            while (u1 <= 0.0)
                u1 = uniform();
            const double u2 = uniform();
            const double r = std::sqrt(-2.0 * std::log(u1));
            spare_ = r * std::sin(2.0 * pi * u2);
            has_spare_ = true;
            return r * std::cos(2.0 * pi * u2);
        }

        /// Circularly-symmetric complex Gaussian with E|z|^2 = variance.
        Complex complex_normal(double variance)
        {
            const double s = std::sqrt(variance / 2.0);
            const double re = normal();
            const double im = normal();
            return {s * re, s * im};
        }

        double phase() { return uniform(-pi, pi); }

        std::mt19937_64 &engine() { return engine_; }

    private:
        std::mt19937_64 engine_;
        double spare_ = 0.0;
        bool has_spare_ = false;
    };
} // namespace tdcp

#endif
