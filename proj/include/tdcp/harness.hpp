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

#ifndef TDCP_HARNESS_HPP
#define TDCP_HARNESS_HPP

#include "scenario.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

namespace tdcp
{
    /// Runs body(i) for all i on `jobs` threads. Each index is visited exactly once; callers write
    /// results into index-addressed slots, so the outcome does not depend on the thread count.
    inline DropExecutor parallel_executor(unsigned jobs)
    {
        if (jobs <= 1)
            return serial_executor;
        return [jobs](std::size_t n, const std::function<void(std::size_t)> &body) {
            std::atomic<std::size_t> next{0};
            std::exception_ptr failure;
            std::mutex failure_mutex;
            auto worker = [&] {
                for (std::size_t i = next++; i < n; i = next++)
                {
                    try
                    {
                        body(i);
                    }
                    catch (...)
                    {
                        std::lock_guard lock(failure_mutex);
                        if (!failure)
                            failure = std::current_exception();
                        next = n;
                    }
                }
            };
            std::vector<std::thread> pool;
            const auto count = std::min<std::size_t>(jobs, n);
            for (std::size_t t = 1; t < count; ++t)
                pool.emplace_back(worker);
            worker();
            for (auto &th : pool)
                th.join();
            if (failure)
                std::rethrow_exception(failure);
        };
    }

    inline unsigned default_jobs()
    {
        const unsigned n = std::thread::hardware_concurrency();
        return n == 0 ? 1 : n;
    }

    /// Fixed-point text with '.' as decimal separator regardless of the global locale.
    inline std::string format_number(double v, int decimals = 6)
    {
        if (std::isnan(v))
            return "nan";
        if (std::isinf(v))
            return v > 0 ? "inf" : "-inf";
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
        std::string s = buf;
        for (char &c : s)
            if (c == ',')
                c = '.';
        // "-0.000000" prints as "0.000000"
        if (s.front() == '-' && s.find_first_not_of("0.", 1) == std::string::npos)
            s.erase(0, 1);
        return s;
    }

    /**
     * Aperiodic report triggered at `trigger_time`: the UE measures over the TRS occasions of
     * the preceding primary period, averages per delay and quantizes per `cfg`.
     */
    inline TdcpReport trigger_report(const LinkScenario &sc, const ChannelSampler &sampler, const TdcpReportConfig &cfg,
                                     double trigger_time, std::uint64_t seed)
    {
        const auto &num = sc.trs.numerology;
        const double period = sc.trs.burst_periodicity_slots * num.slot_duration();
        const double start = std::max(0.0, trigger_time - period);
        const auto occ = trs_occasions(sc.trs, start, trigger_time);
        std::vector<ObservedSnapshot> snaps;
        for (const auto &o : occ)
            snaps.push_back(observe(sampler, o, sc.trs_snr_db, seed, sc.trs.tx_element));
        std::vector<double> amplitudes, phases;
        for (const auto &d : cfg.delays)
        {
            const double dt = d.seconds(num);
            std::vector<CorrelationSample> samples;
            Complex acc(0.0);
            for (auto [i, j] : snapshot_pairs(occ, dt, default_pair_tolerance(num)))
            {
                samples.push_back({dt, corr_amplitude(snaps[i], snaps[j], {sc.noise_bias_correction}), std::nullopt});
                acc += snaps[i].estimates.reshaped().dot(snaps[j].estimates.reshaped());
            }
            if (samples.empty())
                throw Error("trigger at " + format_number(trigger_time) + " s: no TRS pair at " + d.label());
            amplitudes.push_back(average_amplitude(samples));
            phases.push_back(std::arg(acc));
        }
        if (cfg.report_phase)
            return build_report(cfg, amplitudes, std::span<const double>(phases), trigger_time);
        return build_report(cfg, amplitudes, std::nullopt, trigger_time);
    }

    struct AutocorrRow
    {
        std::string model;
        double direction_deg = 0.0;
        double speed_kmh = 0.0;
        double delay_s = 0.0;
        double mean_amplitude = 0.0;
        double stddev = 0.0;
    };

    /**
     * Autocorrelation amplitude against delay: for every (speed, direction) `drops` channel
     * realizations are observed on the TRS grid at t = 0 and t = delay.
     */
    inline std::vector<AutocorrRow> run_autocorr(const Scenario &sc, const DropExecutor &exec = serial_executor)
    {
        const auto &link = sc.link;
        const auto delays = sc.autocorr.delays();
        const std::vector<double> speeds = link.speeds_kmh.empty() ? std::vector<double>{10.0} : link.speeds_kmh;
        const std::vector<double> directions = link.directions_deg.empty() ? std::vector<double>{0.0} : link.directions_deg;
        const auto occ0 = trs_occasions(link.trs, 0.0, link.trs.burst_periodicity_slots * link.trs.numerology.slot_duration());
        if (occ0.empty())
            throw ConfigError("autocorr: the TRS configuration has no occasion");

        const std::size_t per = static_cast<std::size_t>(link.drops);
        const std::size_t groups = speeds.size() * directions.size();
        std::vector<std::vector<double>> amp(groups * per);
        exec(groups * per, [&](std::size_t i) {
            const std::size_t g = i / per, d = i % per;
            const double v = speeds[g / directions.size()], dir = directions[g % directions.size()];
            const std::uint64_t seed = derive_seed(link.seed, {0xAC0ULL, std::bit_cast<std::uint64_t>(v), std::bit_cast<std::uint64_t>(dir), d});
            const ChannelSampler sampler = make_sampler(link.channel, {kmh_to_mps(v), deg_to_rad(dir), 0.0}, seed);
            TrsOccasion occ = occ0.front();
            occ.absolute_time = 0.0;
            const auto ref = observe(sampler, occ, sc.autocorr.snr_db, derive_seed(seed, {1}), link.trs.tx_element);
            auto &out = amp[i];
            out.reserve(delays.size());
            for (double dt : delays)
            {
                occ.absolute_time = dt;
                const auto later = observe(sampler, occ, sc.autocorr.snr_db, derive_seed(seed, {1}), link.trs.tx_element);
                out.push_back(corr_amplitude(ref, later, {link.noise_bias_correction}));
            }
        });

        std::vector<AutocorrRow> rows;
        for (std::size_t g = 0; g < groups; ++g)
            for (std::size_t k = 0; k < delays.size(); ++k)
            {
                double sum = 0.0, sq = 0.0;
                for (std::size_t d = 0; d < per; ++d)
                {
                    const double a = amp[g * per + d][k];
                    sum += a;
                    sq += a * a;
                }
                const double n = static_cast<double>(per);
                const double mean = sum / n;
                const double var = per > 1 ? std::max(0.0, (sq - n * mean * mean) / (n - 1.0)) : 0.0;
                rows.push_back({link.channel.label(), directions[g % directions.size()], speeds[g / directions.size()],
                                delays[k], mean, std::sqrt(var)});
            }
        return rows;
    }

    inline void write_autocorr_csv(std::ostream &os, const std::vector<AutocorrRow> &rows)
    {
        os << "model,direction_deg,speed_kmh,delay_s,mean_amplitude,stddev\n";
        for (const auto &r : rows)
            os << r.model << ',' << format_number(r.direction_deg, 3) << ',' << format_number(r.speed_kmh, 3) << ','
               << format_number(r.delay_s, 9) << ',' << format_number(r.mean_amplitude) << ',' << format_number(r.stddev) << '\n';
    }

    /// Link scenario of a use case: default speeds filled in, policy delay added to the metrics.
    inline LinkScenario usecase_link(const Scenario &sc, UseCase uc)
    {
        LinkScenario link = sc.link;
        link.speeds_kmh = sc.speeds_for(uc == UseCase::b);
        return link;
    }

    /// Threshold of the scenario policy, calibrated on the calibration stream when set to auto.
    inline double resolve_threshold(const Scenario &sc, UseCase uc, const DropExecutor &exec = serial_executor)
    {
        if (!sc.policy)
            throw ConfigError("the scenario has no [policy] section");
        if (!sc.policy->auto_threshold)
            return sc.policy->policy.threshold;
        return calibrate_usecase(usecase_link(sc, uc), uc, sc.policy->policy.metric_delay, exec);
    }

    inline ScenarioResult run_usecase(const Scenario &sc, UseCase uc, const DropExecutor &exec = serial_executor)
    {
        const LinkScenario link = usecase_link(sc, uc);
        std::optional<SwitchingPolicy> policy;
        if (sc.policy)
        {
            policy = default_policy(uc, sc.policy->policy.metric_delay, resolve_threshold(sc, uc, exec));
            policy->hysteresis = sc.policy->policy.hysteresis;
        }
        return eval_usecase(link, uc, policy, exec);
    }

    inline void write_usecase_csv(std::ostream &os, const ScenarioResult &res)
    {
        os << "speed_kmh,scheme,delay_label,trs_snr_db,pdsch_snr_db,mean_se_bpshz,mean_metric,genie_agreement\n";
        for (const auto &r : res.rows)
            os << format_number(r.speed_kmh, 3) << ',' << r.scheme << ',' << r.delay_label << ','
               << format_number(r.trs_snr_db, 3) << ',' << format_number(r.pdsch_snr_db, 3) << ',' << format_number(r.mean_se)
               << ',' << format_number(r.mean_metric) << ',' << format_number(r.genie_agreement) << '\n';
    }

    /// Writes text with LF line endings; throws Error when the file cannot be written.
    inline void write_file(const std::string &path, const std::string &text)
    {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out)
            throw Error("cannot write " + path);
        out << text;
        out.flush();
        if (!out)
            throw Error("error writing " + path);
    }
} // namespace tdcp

#endif
