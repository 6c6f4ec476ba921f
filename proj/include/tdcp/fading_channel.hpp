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

#ifndef TDCP_FADING_CHANNEL_HPP
#define TDCP_FADING_CHANNEL_HPP

// Time-varying, frequency-selective MIMO channel generators.
//
// Every sampler is a superposition of discrete paths. A path has one delay and a
// bundle of rays; each ray carries a Doppler frequency and a complex gain per
// (rx, tx) element pair. The response at time t and baseband frequency f is
//
//   H(t, f) = sum_p sum_r g_{p,r} exp(j 2 pi nu_{p,r} t) exp(-j 2 pi f tau_p).
//
// All randomness is drawn at construction; evaluation is pure.

#include "common.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <istream>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace tdcp
{
    struct VelocityVector
    {
        double speed_mps = 0.0;
        double azimuth_rad = 0.0;
        double elevation_rad = 0.0;

        void validate() const
        {
            if (!(speed_mps >= 0.0) || !std::isfinite(speed_mps))
                throw std::invalid_argument("VelocityVector: speed must be finite and >= 0");
            if (!std::isfinite(azimuth_rad) || !std::isfinite(elevation_rad))
                throw std::invalid_argument("VelocityVector: angles must be finite");
        }

        Eigen::Vector3d vector() const
        {
            return speed_mps * Eigen::Vector3d(std::cos(elevation_rad) * std::cos(azimuth_rad),
                                               std::cos(elevation_rad) * std::sin(azimuth_rad),
                                               std::sin(elevation_rad));
        }
    };

    struct Tap
    {
        double delay_s;
        double power; // linear
    };

    /// Power-delay profile of a tapped delay line. Powers are normalized to sum to one.
    class TapProfile
    {
    public:
        explicit TapProfile(std::vector<Tap> taps) : taps_(std::move(taps))
        {
            if (taps_.empty())
                throw std::invalid_argument("TapProfile: at least one tap is required");
            double sum = 0.0;
            for (std::size_t i = 0; i < taps_.size(); ++i)
            {
                const auto &t = taps_[i];
                if (!(t.delay_s >= 0.0) || !std::isfinite(t.delay_s))
                    throw std::invalid_argument("TapProfile: tap delays must be finite and >= 0");
                if (!(t.power > 0.0) || !std::isfinite(t.power))
                    throw std::invalid_argument("TapProfile: tap powers must be finite and > 0");
                if (i > 0 && !(t.delay_s > taps_[i - 1].delay_s))
                    throw std::invalid_argument("TapProfile: tap delays must be strictly increasing");
                sum += t.power;
            }
            for (auto &t : taps_)
                t.power /= sum;
        }

        /// n equal-power taps spaced by spacing_s, starting at zero delay.
        static TapProfile uniform(std::size_t n, double spacing_s)
        {
            std::vector<Tap> taps(n);
            for (std::size_t i = 0; i < n; ++i)
                taps[i] = {static_cast<double>(i) * spacing_s, 1.0};
            return TapProfile(std::move(taps));
        }

        std::span<const Tap> taps() const { return taps_; }
        std::size_t size() const { return taps_.size(); }

    private:
        std::vector<Tap> taps_;
    };

    /// Sub-path angle offsets for one cluster, in units of the per-cluster spread.
    inline constexpr std::array<double, 20> default_ray_offsets = {
        0.0447, -0.0447, 0.1413, -0.1413, 0.2492, -0.2492, 0.3715, -0.3715, 0.5129, -0.5129,
        0.6797, -0.6797, 0.8844, -0.8844, 1.1481, -1.1481, 1.5195, -1.5195, 2.1551, -2.1551};

    struct CdlCluster
    {
        double normalized_delay;
        double power_db;
        double aod_deg, aoa_deg, zod_deg, zoa_deg;
    };

    /// Clustered-delay-line parameter table, as read from a table file.
    struct CdlTable
    {
        std::string name;
        std::vector<CdlCluster> clusters;
        double c_asd_deg = 0.0, c_asa_deg = 0.0, c_zsd_deg = 0.0, c_zsa_deg = 0.0;
        double cross_polar_ratio_db = 0.0;
        std::array<double, 20> ray_offsets = default_ray_offsets;

        void validate() const
        {
            if (clusters.empty())
                throw ConfigError("CDL table '" + name + "': no clusters");
            if (clusters.front().normalized_delay != 0.0)
                throw ConfigError("CDL table '" + name + "': normalized delays must start at 0");
            for (const auto &c : clusters)
                if (!(c.normalized_delay >= 0.0))
                    throw ConfigError("CDL table '" + name + "': negative normalized delay");
        }
    };

    /**
     * Parses a CDL table.
     *
     * Format: one cluster per line with six numeric columns
     * (normalized_delay power_db aod_deg aoa_deg zod_deg zoa_deg), then keyed scalar lines
     * `c_asd = ...`, `c_asa = ...`, `c_zsd = ...`, `c_zsa = ...`, `xpr_db = ...` and an optional
     * `ray_offsets = <20 values>` line. `#` starts a comment; `name = ...` labels the table.
     */
    inline CdlTable parse_cdl_table(std::istream &in, const std::string &source = "<stream>")
    {
        CdlTable table;
        table.name = source;
        bool have[5] = {false, false, false, false, false};
        std::string line;
        int line_no = 0;
        auto fail = [&](const std::string &msg) {
            throw ConfigError(source + ":" + std::to_string(line_no) + ": " + msg);
        };
        while (std::getline(in, line))
        {
            ++line_no;
            if (auto hash = line.find('#'); hash != std::string::npos)
                line.erase(hash);
            if (line.find_first_not_of(" \t\r") == std::string::npos)
                continue;

            if (auto eq = line.find('='); eq != std::string::npos)
            {
                std::string key = line.substr(0, eq);
                key.erase(std::remove_if(key.begin(), key.end(), [](unsigned char ch) { return std::isspace(ch); }), key.end());
                std::istringstream vs(line.substr(eq + 1));
                if (key == "name")
                {
                    vs >> table.name;
                    continue;
                }
                if (key == "ray_offsets")
                {
                    std::vector<double> v;
                    double x;
                    while (vs >> x)
                        v.push_back(x);
                    if (v.size() != 20)
                        fail("ray_offsets must list exactly 20 values");
                    std::copy(v.begin(), v.end(), table.ray_offsets.begin());
                    continue;
                }
                static const char *keys[5] = {"c_asd", "c_asa", "c_zsd", "c_zsa", "xpr_db"};
                double *dst[5] = {&table.c_asd_deg, &table.c_asa_deg, &table.c_zsd_deg, &table.c_zsa_deg,
                                  &table.cross_polar_ratio_db};
                int idx = -1;
                for (int k = 0; k < 5; ++k)
                    if (key == keys[k])
                        idx = k;
                if (idx < 0)
                    fail("unknown key '" + key + "'");
                if (have[idx])
                    fail("duplicate key '" + key + "'");
                std::string rest;
                if (!(vs >> *dst[idx]) || (vs >> rest))
                    fail("expected one number for '" + key + "'");
                have[idx] = true;
                continue;
            }

            std::istringstream ls(line);
            CdlCluster c{};
            std::string rest;
            if (!(ls >> c.normalized_delay >> c.power_db >> c.aod_deg >> c.aoa_deg >> c.zod_deg >> c.zoa_deg) || (ls >> rest))
                fail("cluster rows need exactly 6 numeric columns");
            table.clusters.push_back(c);
        }
        for (int k = 0; k < 5; ++k)
            if (!have[k])
                throw ConfigError(source + ": missing per-cluster spread or xpr_db line");
        table.validate();
        return table;
    }

    inline CdlTable load_cdl_table(const std::string &path)
    {
        std::ifstream f(path);
        if (!f)
            throw ConfigError("cannot open CDL table file '" + path + "'");
        return parse_cdl_table(f, path);
    }

    enum class ElementPattern
    {
        isotropic,
        directional // 3-sector element pattern, 65 deg beamwidth, 8 dBi
    };

    /// Uniform planar array in the y-z plane, broadside along +x.
    /// Element index = pol * (rows * columns) + row * columns + column.
    struct AntennaArray
    {
        int rows = 1;    // vertical direction
        int columns = 1; // horizontal direction
        int polarizations = 1;
        double horizontal_spacing = 0.5; // wavelengths
        double vertical_spacing = 0.5;   // wavelengths
        ElementPattern element_pattern = ElementPattern::isotropic;
        double slant_deg = 0.0; // slant of polarization 0; polarization 1 is slant + 90

        static AntennaArray base_station()
        {
            return {2, 4, 2, 0.5, 0.8, ElementPattern::isotropic, -45.0};
        }

        /// Two co-located, cross-polarized isotropic elements.
        static AntennaArray user_equipment()
        {
            return {1, 1, 2, 0.5, 0.5, ElementPattern::isotropic, 0.0};
        }

        static AntennaArray single() { return {}; }

        int num_elements() const { return rows * columns * polarizations; }
        int elements_per_polarization() const { return rows * columns; }

        void validate() const
        {
            if (rows < 1 || columns < 1)
                throw std::invalid_argument("AntennaArray: rows and columns must be >= 1");
            if (polarizations != 1 && polarizations != 2)
                throw std::invalid_argument("AntennaArray: polarizations must be 1 or 2");
            if (!(horizontal_spacing > 0.0) || !(vertical_spacing > 0.0))
                throw std::invalid_argument("AntennaArray: spacings must be > 0");
        }

        /// Position of element e in wavelengths.
        Eigen::Vector3d position(int e) const
        {
            const int k = e % elements_per_polarization();
            const int row = k / columns;
            const int col = k % columns;
            return {0.0, col * horizontal_spacing, row * vertical_spacing};
        }

        double slant_rad(int e) const
        {
            const int pol = e / elements_per_polarization();
            return deg_to_rad(slant_deg + 90.0 * pol);
        }

        /// Linear power gain towards (zenith, azimuth) in degrees.
        double power_gain(double zenith_deg, double azimuth_deg) const
        {
            if (element_pattern == ElementPattern::isotropic)
                return 1.0;
            const double phi = rad_to_deg(wrap_phase(deg_to_rad(azimuth_deg)));
            const double av = -std::min(12.0 * std::pow((zenith_deg - 90.0) / 65.0, 2), 30.0);
            const double ah = -std::min(12.0 * std::pow(phi / 65.0, 2), 30.0);
            const double a = -std::min(-(av + ah), 30.0);
            return db_to_linear(a + 8.0);
        }
    };

    /// One ray in explicit form; used to build deterministic test channels.
    struct RaySpec
    {
        double delay_s;
        double doppler_hz;
        double power;
        double phase_rad = 0.0;
    };

    class ChannelSampler;
    using FreqResponse = std::vector<CMatrix>; // one (rx x tx) matrix per frequency

    /**
     * Deterministic channel realization. Immutable after construction and safe to
     * evaluate concurrently.
     */
    class ChannelSampler
    {
    public:
        struct Path
        {
            double delay_s = 0.0;
            Eigen::VectorXd doppler_hz; // one per ray
            CMatrix gains;              // (rx * tx) x rays, pair index = rx + num_rx * tx
        };

        ChannelSampler(int num_rx, int num_tx, std::vector<Path> paths)
            : num_rx_(num_rx), num_tx_(num_tx), paths_(std::move(paths))
        {
        }

        int num_rx() const { return num_rx_; }
        int num_tx() const { return num_tx_; }
        std::span<const Path> paths() const { return paths_; }

        /// Expected power per (rx, tx) pair, averaged over pairs.
        double total_power() const
        {
            double p = 0.0;
            for (const auto &path : paths_)
                p += path.gains.squaredNorm();
            return p / static_cast<double>(num_rx_ * num_tx_);
        }

        /// (Doppler, power) of every ray, power averaged over element pairs.
        std::vector<std::pair<double, double>> ray_dopplers() const
        {
            std::vector<std::pair<double, double>> out;
            const double pairs = static_cast<double>(num_rx_ * num_tx_);
            for (const auto &path : paths_)
                for (Eigen::Index r = 0; r < path.doppler_hz.size(); ++r)
                    out.emplace_back(path.doppler_hz[r], path.gains.col(r).squaredNorm() / pairs);
            return out;
        }

        /// Per-path coefficient vectors (rx * tx) at time t.
        std::vector<CVector> path_coefficients(double t) const
        {
            std::vector<CVector> coef;
            coef.reserve(paths_.size());
            for (const auto &path : paths_)
            {
                CVector ph(path.doppler_hz.size());
                for (Eigen::Index r = 0; r < ph.size(); ++r)
                    ph[r] = std::polar(1.0, 2.0 * pi * path.doppler_hz[r] * t);
                coef.emplace_back(path.gains * ph);
            }
            return coef;
        }

        /// H(t, f) for each frequency of the grid (baseband offsets in Hz).
        FreqResponse freq_response(double t, std::span<const double> freqs) const
        {
            const auto coef = path_coefficients(t);
            FreqResponse out(freqs.size(), CMatrix::Zero(num_rx_, num_tx_));
            for_each_phasor(freqs, [&](std::size_t p, std::size_t k, Complex w) {
                out[k].reshaped() += w * coef[p];
            });
            return out;
        }

        /// Channel seen through one transmit port with element weights tx_weights.
        /// Returns a (frequency x rx) matrix.
        CMatrix freq_response_port(double t, std::span<const double> freqs, const CVector &tx_weights) const
        {
            const auto coef = path_coefficients(t);
            std::vector<CVector> port(coef.size());
            for (std::size_t p = 0; p < coef.size(); ++p)
                port[p] = coef[p].reshaped(num_rx_, num_tx_) * tx_weights;
            CMatrix out = CMatrix::Zero(static_cast<Eigen::Index>(freqs.size()), num_rx_);
            for_each_phasor(freqs, [&](std::size_t p, std::size_t k, Complex w) {
                out.row(static_cast<Eigen::Index>(k)) += w * port[p].transpose();
            });
            return out;
        }

    private:
        // Calls fn(path, freq_index, exp(-j 2 pi f tau_p)) for all pairs. Uniform grids use a
        // phasor recurrence; the per-path restart keeps rounding drift below 1e-12.
        template <typename Fn>
        void for_each_phasor(std::span<const double> freqs, Fn &&fn) const
        {
            const std::size_t n = freqs.size();
            if (n == 0)
                return;
            bool uniform = n > 2;
            const double step = n > 1 ? freqs[1] - freqs[0] : 0.0;
            for (std::size_t k = 2; uniform && k < n; ++k)
                uniform = std::abs((freqs[k] - freqs[k - 1]) - step) <= 1e-9 * std::max(1.0, std::abs(step));
            constexpr std::size_t restart = 64;
            for (std::size_t p = 0; p < paths_.size(); ++p)
            {
                const double tau = paths_[p].delay_s;
                if (!uniform)
                {
                    for (std::size_t k = 0; k < n; ++k)
                        fn(p, k, std::polar(1.0, -2.0 * pi * freqs[k] * tau));
                    continue;
                }
                const Complex rot = std::polar(1.0, -2.0 * pi * step * tau);
                Complex w;
                for (std::size_t k = 0; k < n; ++k)
                {
                    if (k % restart == 0)
                        w = std::polar(1.0, -2.0 * pi * freqs[k] * tau);
                    fn(p, k, w);
                    w *= rot;
                }
            }
        }

        int num_rx_;
        int num_tx_;
        std::vector<Path> paths_;
    };

    /**
     * Tapped-delay-line sampler with Jakes (sum-of-rays) fading on every tap and element pair.
     *
     * Ray m of a tap arrives at angle 2 pi (m + u) / num_rays with u ~ U[0, 1) drawn per tap and
     * pair, and carries an independent uniform phase.
     */
    inline ChannelSampler make_tdl(const TapProfile &profile, double max_doppler_hz, int num_rays, std::uint64_t seed,
                                   int num_rx = 1, int num_tx = 1)
    {
        if (!(max_doppler_hz >= 0.0) || !std::isfinite(max_doppler_hz))
            throw std::invalid_argument("make_tdl: max Doppler must be finite and >= 0");
        if (num_rays < 8)
            throw std::invalid_argument("make_tdl: num_rays must be >= 8");
        if (num_rx < 1 || num_tx < 1)
            throw std::invalid_argument("make_tdl: antenna counts must be >= 1");

        Rng rng(derive_seed(seed, {0x7D1ULL}));
        const int pairs = num_rx * num_tx;
        std::vector<ChannelSampler::Path> paths;
        paths.reserve(profile.size());
        for (const auto &tap : profile.taps())
        {
            ChannelSampler::Path path;
            path.delay_s = tap.delay_s;
            path.doppler_hz.resize(static_cast<Eigen::Index>(pairs) * num_rays);
            path.gains = CMatrix::Zero(pairs, static_cast<Eigen::Index>(pairs) * num_rays);
            const double amp = std::sqrt(tap.power / num_rays);
            for (int q = 0; q < pairs; ++q)
            {
                const double rotation = rng.uniform();
                for (int m = 0; m < num_rays; ++m)
                {
                    const Eigen::Index col = static_cast<Eigen::Index>(q) * num_rays + m;
                    const double alpha = 2.0 * pi * (m + rotation) / num_rays;
                    path.doppler_hz[col] = max_doppler_hz * std::cos(alpha);
                    path.gains(q, col) = std::polar(amp, rng.phase());
                }
            }
            paths.push_back(std::move(path));
        }
        return ChannelSampler(num_rx, num_tx, std::move(paths));
    }

    /// Single-antenna sampler built from explicit rays; rays sharing a delay share a path.
    inline ChannelSampler make_from_rays(std::span<const RaySpec> rays)
    {
        if (rays.empty())
            throw std::invalid_argument("make_from_rays: no rays");
        std::vector<RaySpec> sorted(rays.begin(), rays.end());
        std::stable_sort(sorted.begin(), sorted.end(), [](const RaySpec &a, const RaySpec &b) { return a.delay_s < b.delay_s; });
        std::vector<ChannelSampler::Path> paths;
        for (std::size_t i = 0; i < sorted.size();)
        {
            std::size_t j = i;
            while (j < sorted.size() && sorted[j].delay_s == sorted[i].delay_s)
                ++j;
            ChannelSampler::Path path;
            path.delay_s = sorted[i].delay_s;
            const auto n = static_cast<Eigen::Index>(j - i);
            path.doppler_hz.resize(n);
            path.gains.resize(1, n);
            for (Eigen::Index r = 0; r < n; ++r)
            {
                const auto &ray = sorted[i + static_cast<std::size_t>(r)];
                if (!(ray.power >= 0.0))
                    throw std::invalid_argument("make_from_rays: negative ray power");
                path.doppler_hz[r] = ray.doppler_hz;
                path.gains(0, r) = std::polar(std::sqrt(ray.power), ray.phase_rad);
            }
            paths.push_back(std::move(path));
            i = j;
        }
        return ChannelSampler(1, 1, std::move(paths));
    }

    namespace detail
    {
        inline double power_weighted_rms(std::span<const double> values, std::span<const double> powers, double mean)
        {
            double num = 0.0, den = 0.0;
            for (std::size_t i = 0; i < values.size(); ++i)
            {
                num += powers[i] * (values[i] - mean) * (values[i] - mean);
                den += powers[i];
            }
            return std::sqrt(num / den);
        }

        // Circular power-weighted mean (degrees) and deviations wrapped to (-180, 180].
        inline std::pair<double, std::vector<double>> azimuth_deviations(std::span<const double> deg, std::span<const double> powers)
        {
            Complex acc = 0.0;
            for (std::size_t i = 0; i < deg.size(); ++i)
                acc += powers[i] * std::polar(1.0, deg_to_rad(deg[i]));
            const double mean = rad_to_deg(std::arg(acc));
            std::vector<double> dev(deg.size());
            for (std::size_t i = 0; i < deg.size(); ++i)
                dev[i] = rad_to_deg(wrap_phase(deg_to_rad(deg[i] - mean)));
            return {mean, dev};
        }

        inline Eigen::Vector3d direction(double zenith_deg, double azimuth_deg)
        {
            const double th = deg_to_rad(zenith_deg), ph = deg_to_rad(azimuth_deg);
            return {std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph), std::cos(th)};
        }

        inline double fold_zenith(double deg)
        {
            deg = std::fmod(deg, 360.0);
            if (deg < 0.0)
                deg += 360.0;
            return deg > 180.0 ? 360.0 - deg : deg;
        }
    } // namespace detail

    /// Cluster-level quantities after delay and angle scaling.
    struct ScaledCdl
    {
        std::vector<double> delays_s;
        std::vector<double> powers; // linear, sum 1
        std::vector<double> aod_deg, aoa_deg, zod_deg, zoa_deg;
    };

    /// RMS delay spread of a discrete power-delay profile.
    inline double rms_delay_spread(std::span<const double> delays, std::span<const double> powers)
    {
        double p = 0.0, m1 = 0.0;
        for (std::size_t i = 0; i < delays.size(); ++i)
        {
            p += powers[i];
            m1 += powers[i] * delays[i];
        }
        return detail::power_weighted_rms(delays, powers, m1 / p);
    }

    /// Cluster-level RMS azimuth spread (degrees) about the circular power-weighted mean.
    inline double rms_azimuth_spread(std::span<const double> deg, std::span<const double> powers)
    {
        auto [mean, dev] = detail::azimuth_deviations(deg, powers);
        return detail::power_weighted_rms(dev, powers, 0.0);
    }

    /**
     * Scales a CDL table to the requested delay spread and arrival angle spreads. Delays are
     * scaled so the RMS delay spread equals the target; arrival azimuths and zeniths are scaled
     * linearly about their power-weighted means so the cluster-level RMS spreads equal the targets.
     */
    inline ScaledCdl scale_cdl(const CdlTable &table, double delay_spread_s, double asa_deg, double zsa_deg)
    {
        table.validate();
        if (!(delay_spread_s > 0.0) || !(asa_deg > 0.0) || !(zsa_deg > 0.0))
            throw std::invalid_argument("scale_cdl: target spreads must be > 0");
        ScaledCdl s;
        const std::size_t n = table.clusters.size();
        std::vector<double> norm_delay(n);
        double psum = 0.0;
        for (std::size_t i = 0; i < n; ++i)
        {
            const auto &c = table.clusters[i];
            norm_delay[i] = c.normalized_delay;
            s.powers.push_back(db_to_linear(c.power_db));
            psum += s.powers.back();
            s.aod_deg.push_back(c.aod_deg);
            s.zod_deg.push_back(c.zod_deg);
        }
        for (auto &p : s.powers)
            p /= psum;

        const double ds_model = n > 1 ? rms_delay_spread(norm_delay, s.powers) : 0.0;
        const double dscale = ds_model > 0.0 ? delay_spread_s / ds_model : delay_spread_s;
        for (double d : norm_delay)
            s.delays_s.push_back(d * dscale);

        std::vector<double> aoa(n), zoa(n);
        for (std::size_t i = 0; i < n; ++i)
        {
            aoa[i] = table.clusters[i].aoa_deg;
            zoa[i] = table.clusters[i].zoa_deg;
        }
        auto [mu_a, dev_a] = detail::azimuth_deviations(aoa, s.powers);
        const double as_model = detail::power_weighted_rms(dev_a, s.powers, 0.0);
        auto scaled_aoa = [&](double k) {
            std::vector<double> a(n);
            for (std::size_t i = 0; i < n; ++i)
                a[i] = mu_a + k * dev_a[i];
            return a;
        };
        // Scaling moves the circular mean, so refine the factor until the spread is exact.
        double ka = as_model > 0.0 ? asa_deg / as_model : 1.0;
        for (int it = 0; it < 100 && as_model > 0.0; ++it)
        {
            const double got = rms_azimuth_spread(scaled_aoa(ka), s.powers);
            if (std::abs(got - asa_deg) < 1e-12 * asa_deg)
                break;
            ka *= asa_deg / got;
        }
        s.aoa_deg = scaled_aoa(ka);

        double mu_z = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            mu_z += s.powers[i] * zoa[i];
        const double zs_model = detail::power_weighted_rms(zoa, s.powers, mu_z);
        const double kz = zs_model > 0.0 ? zsa_deg / zs_model : 1.0;
        for (std::size_t i = 0; i < n; ++i)
            s.zoa_deg.push_back(mu_z + kz * (zoa[i] - mu_z));
        return s;
    }

    /**
     * Clustered-delay-line sampler. Each cluster expands into 20 rays at the table's fixed
     * offsets, with random intra-cluster coupling of departure/arrival offsets, four random
     * polarization phases per ray and a Doppler term r_rx . v / lambda. The result is normalized
     * to unit expected power per element pair.
     */
    inline ChannelSampler make_cdl(const CdlTable &table, double target_delay_spread_s, double target_asa_deg,
                                   double target_zsa_deg, const AntennaArray &tx, const AntennaArray &rx,
                                   const VelocityVector &velocity, double carrier_hz, std::uint64_t seed)
    {
        tx.validate();
        rx.validate();
        velocity.validate();
        if (!(carrier_hz > 0.0))
            throw std::invalid_argument("make_cdl: carrier frequency must be > 0");
        const ScaledCdl sc = scale_cdl(table, target_delay_spread_s, target_asa_deg, target_zsa_deg);

        Rng rng(derive_seed(seed, {0xCD1ULL}));
        const double lambda = speed_of_light / carrier_hz;
        const Eigen::Vector3d v = velocity.vector();
        const double inv_kappa = std::sqrt(1.0 / db_to_linear(table.cross_polar_ratio_db));
        const int ntx = tx.num_elements(), nrx = rx.num_elements();
        constexpr int rays = 20;

        auto permutation = [&rng]() {
            std::array<int, rays> p;
            for (int i = 0; i < rays; ++i)
                p[i] = i;
            for (int i = rays - 1; i > 0; --i)
                std::swap(p[i], p[static_cast<int>(rng.uniform() * (i + 1)) % (i + 1)]);
            return p;
        };

        std::vector<ChannelSampler::Path> paths;
        double expected_power = 0.0;
        for (std::size_t n = 0; n < sc.powers.size(); ++n)
        {
            ChannelSampler::Path path;
            path.delay_s = sc.delays_s[n];
            path.doppler_hz.resize(rays);
            path.gains.resize(static_cast<Eigen::Index>(nrx) * ntx, rays);
            const auto perm_aod = permutation();
            const auto perm_zoa = permutation();
            const auto perm_zod = permutation();
            const double ray_amp = std::sqrt(sc.powers[n] / rays);
            for (int m = 0; m < rays; ++m)
            {
                const double aoa = sc.aoa_deg[n] + table.c_asa_deg * table.ray_offsets[m];
                const double aod = sc.aod_deg[n] + table.c_asd_deg * table.ray_offsets[perm_aod[m]];
                const double zoa = detail::fold_zenith(sc.zoa_deg[n] + table.c_zsa_deg * table.ray_offsets[perm_zoa[m]]);
                const double zod = detail::fold_zenith(sc.zod_deg[n] + table.c_zsd_deg * table.ray_offsets[perm_zod[m]]);
                const Eigen::Vector3d r_rx = detail::direction(zoa, aoa);
                const Eigen::Vector3d r_tx = detail::direction(zod, aod);
                path.doppler_hz[m] = r_rx.dot(v) / lambda;

                Eigen::Matrix2cd pol;
                pol << std::polar(1.0, rng.phase()), inv_kappa * std::polar(1.0, rng.phase()),
                    inv_kappa * std::polar(1.0, rng.phase()), std::polar(1.0, rng.phase());
                Eigen::Matrix2d pol_power;
                pol_power << 1.0, inv_kappa * inv_kappa, inv_kappa * inv_kappa, 1.0;

                const double g_rx = std::sqrt(rx.power_gain(zoa, aoa));
                const double g_tx = std::sqrt(tx.power_gain(zod, aod));
                for (int s = 0; s < ntx; ++s)
                {
                    const Eigen::Vector2d f_tx(g_tx * std::cos(tx.slant_rad(s)), g_tx * std::sin(tx.slant_rad(s)));
                    const Complex a_tx = std::polar(1.0, 2.0 * pi * r_tx.dot(tx.position(s)));
                    for (int u = 0; u < nrx; ++u)
                    {
                        const Eigen::Vector2d f_rx(g_rx * std::cos(rx.slant_rad(u)), g_rx * std::sin(rx.slant_rad(u)));
                        const Complex a_rx = std::polar(1.0, 2.0 * pi * r_rx.dot(rx.position(u)));
                        const Complex coupling = f_rx.dot(pol * f_tx.cast<Complex>());
                        path.gains(u + nrx * s, m) = ray_amp * coupling * a_rx * a_tx;
                        expected_power += ray_amp * ray_amp * f_rx.cwiseAbs2().dot(pol_power * f_tx.cwiseAbs2());
                    }
                }
            }
            paths.push_back(std::move(path));
        }
        const double norm = 1.0 / std::sqrt(expected_power / (static_cast<double>(nrx) * ntx));
        for (auto &p : paths)
            p.gains *= norm;
        return ChannelSampler(nrx, ntx, std::move(paths));
    }

    /// Evaluates the channel on a frequency grid (Hz offsets from the carrier).
    inline FreqResponse freq_response(const ChannelSampler &sampler, double t, std::span<const double> freq_grid)
    {
        return sampler.freq_response(t, freq_grid);
    }

    /// Channel model selection shared by the experiment drivers.
    struct ChannelModelConfig
    {
        enum class Kind
        {
            tdl,
            cdl
        };
        Kind kind = Kind::cdl;
        CdlTable table;                 // CDL only
        double delay_spread_s = 100e-9; // CDL only
        double asa_deg = 45.0;          // CDL only
        double zsa_deg = 10.0;          // CDL only
        std::vector<Tap> tdl_taps;      // TDL only; empty selects 32 equal taps 10 ns apart
        int num_rays = 64;              // TDL rays per tap and element pair
        AntennaArray tx = AntennaArray::base_station();
        AntennaArray rx = AntennaArray::user_equipment();
        double carrier_hz = 3.5e9;

        std::string label() const { return kind == Kind::tdl ? "TDL" : (table.name.empty() ? "CDL" : table.name); }
    };

    inline TapProfile default_tdl_profile() { return TapProfile::uniform(32, 10e-9); }

    inline ChannelSampler make_sampler(const ChannelModelConfig &cfg, const VelocityVector &velocity, std::uint64_t seed)
    {
        if (cfg.kind == ChannelModelConfig::Kind::tdl)
        {
            velocity.validate();
            const TapProfile profile = cfg.tdl_taps.empty() ? default_tdl_profile() : TapProfile(cfg.tdl_taps);
            return make_tdl(profile, max_doppler_hz(velocity.speed_mps, cfg.carrier_hz), cfg.num_rays, seed,
                            cfg.rx.num_elements(), cfg.tx.num_elements());
        }
        return make_cdl(cfg.table, cfg.delay_spread_s, cfg.asa_deg, cfg.zsa_deg, cfg.tx, cfg.rx, velocity, cfg.carrier_hz, seed);
    }

    /// Baseband frequency offsets of n subcarriers centred on the carrier.
    inline std::vector<double> centered_grid(std::size_t n, double spacing_hz)
    {
        std::vector<double> f(n);
        const double mid = (static_cast<double>(n) - 1.0) / 2.0;
        for (std::size_t k = 0; k < n; ++k)
            f[k] = (static_cast<double>(k) - mid) * spacing_hz;
        return f;
    }
} // namespace tdcp

#endif
