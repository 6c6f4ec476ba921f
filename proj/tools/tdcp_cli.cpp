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

#include "tdcp/tdcp.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <iterator>
#include <sstream>

namespace
{
    constexpr int exit_config = 2;
    constexpr int exit_runtime = 3;

    struct RunOptions
    {
        std::string scenario;
        std::string out;
        std::optional<std::uint64_t> seed;
        std::optional<int> drops;
        unsigned jobs = tdcp::default_jobs();
    };

    void add_run_options(CLI::App *cmd, RunOptions &o)
    {
        cmd->add_option("--scenario", o.scenario, "Scenario file")->required();
        cmd->add_option("--out", o.out, "Output file (default: stdout)");
        cmd->add_option("--seed", o.seed, "Override the scenario seed");
        cmd->add_option("--drops", o.drops, "Override the number of drops per speed")->check(CLI::PositiveNumber);
        cmd->add_option("--jobs", o.jobs, "Worker threads (default: all cores)")->check(CLI::PositiveNumber);
    }

    tdcp::Scenario load(const RunOptions &o)
    {
        auto sc = tdcp::load_scenario(o.scenario);
        if (o.seed)
            sc.link.seed = *o.seed;
        if (o.drops)
            sc.link.drops = *o.drops;
        return sc;
    }

    void emit(const std::string &path, const std::string &text)
    {
        if (path.empty() || path == "-")
            std::cout << text << std::flush;
        else
            tdcp::write_file(path, text);
    }

    std::vector<double> parse_numbers(const std::string &list, const char *what)
    {
        std::vector<double> v;
        std::stringstream ss(list);
        std::string item;
        while (std::getline(ss, item, ','))
        {
            std::istringstream is(item);
            is.imbue(std::locale::classic());
            double x = 0.0;
            if (!(is >> x) || !(is >> std::ws).eof())
                throw tdcp::ConfigError(std::string("invalid ") + what + " value '" + item + "'");
            v.push_back(x);
        }
        return v;
    }

    std::vector<tdcp::CorrelationDelay> parse_delays(const std::string &list)
    {
        std::vector<tdcp::CorrelationDelay> d;
        std::stringstream ss(list);
        std::string item;
        while (std::getline(ss, item, ','))
            d.push_back(tdcp::CorrelationDelay::parse(item));
        return d;
    }

    std::string to_hex(std::span<const std::uint8_t> bytes)
    {
        static const char digits[] = "0123456789abcdef";
        std::string s;
        for (auto b : bytes)
        {
            s += digits[b >> 4];
            s += digits[b & 15];
        }
        return s;
    }

    std::vector<std::uint8_t> from_hex(const std::string &text)
    {
        std::string h;
        for (char c : text)
            if (!std::isspace(static_cast<unsigned char>(c)))
                h += c;
        if (h.size() % 2 != 0)
            throw tdcp::FramingError("hex input has an odd number of digits");
        std::vector<std::uint8_t> out;
        for (std::size_t i = 0; i < h.size(); i += 2)
        {
            unsigned v = 0;
            auto [p, ec] = std::from_chars(h.data() + i, h.data() + i + 2, v, 16);
            if (ec != std::errc() || p != h.data() + i + 2)
                throw tdcp::FramingError("invalid hex digit near offset " + std::to_string(i));
            out.push_back(static_cast<std::uint8_t>(v));
        }
        return out;
    }
} // namespace

int main(int argc, char **argv)
{
    CLI::App app{"Time-domain channel property simulation toolkit"};
    app.require_subcommand(1);

    RunOptions run;
    auto *autocorr = app.add_subcommand("autocorr", "Autocorrelation amplitude against delay (CSV)");
    auto *usecase_a = app.add_subcommand("usecase-a", "Type-I / Type-II feedback switching evaluation (CSV)");
    auto *usecase_b = app.add_subcommand("usecase-b", "DMRS pattern switching evaluation (CSV)");
    auto *calibrate = app.add_subcommand("calibrate", "Calibrate the policy threshold; writes the scenario with it filled in");
    for (auto *cmd : {autocorr, usecase_a, usecase_b, calibrate})
        add_run_options(cmd, run);
    std::string calib_usecase = "a";
    calibrate->add_option("--usecase", calib_usecase, "Use case to calibrate for")->check(CLI::IsMember({"a", "b"}));

    auto *report = app.add_subcommand("report", "Encode or decode TDCP reports");
    report->require_subcommand(1);
    auto *encode = report->add_subcommand("encode", "Quantize and serialize a report; prints hex");
    auto *decode = report->add_subcommand("decode", "Parse a serialized report; prints CSV");

    std::string enc_delays, enc_amps, enc_phases, enc_scenario, enc_out, enc_max_delay = "10slot";
    int enc_abits = 7, enc_pbits = 6, enc_max_num = 4;
    std::optional<int> enc_second;
    long long enc_time_ns = 0;
    encode->add_option("--delays", enc_delays, "Comma-separated delays, e.g. 4os,1slot,3slot")->required();
    encode->add_option("--amplitudes", enc_amps, "Comma-separated amplitudes in [0, 1]")->required();
    encode->add_option("--phases", enc_phases, "Comma-separated phases in radians (enables phase reporting)");
    encode->add_option("--amplitude-bits", enc_abits)->check(CLI::Range(1, 16));
    encode->add_option("--phase-bits", enc_pbits)->check(CLI::Range(1, 16));
    encode->add_option("--time-ns", enc_time_ns, "Measurement time stamp in ns");
    encode->add_option("--scenario", enc_scenario, "Take TRS and UE capability from a scenario");
    encode->add_option("--second-trs-offset", enc_second, "Second TRS offset in slots (without --scenario)");
    encode->add_option("--max-delay", enc_max_delay, "UE capability: largest delay (without --scenario)");
    encode->add_option("--max-num-delays", enc_max_num, "UE capability: number of delays (without --scenario)");
    encode->add_option("--out", enc_out, "Write the raw bytes to this file instead of printing hex");

    std::string dec_hex, dec_in, dec_out;
    auto *hex_opt = decode->add_option("--hex", dec_hex, "Report bytes as hex");
    decode->add_option("--in", dec_in, "File with the raw report bytes")->excludes(hex_opt);
    decode->add_option("--out", dec_out, "Output file (default: stdout)");

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError &e)
    {
        const int code = app.exit(e);
        return code == 0 ? 0 : exit_config;
    }

    try
    {
        const auto exec = tdcp::parallel_executor(run.jobs);
        if (*autocorr)
        {
            const auto sc = load(run);
            std::ostringstream os;
            tdcp::write_autocorr_csv(os, tdcp::run_autocorr(sc, exec));
            emit(run.out, os.str());
        }
        else if (*usecase_a || *usecase_b)
        {
            const auto sc = load(run);
            std::ostringstream os;
            tdcp::write_usecase_csv(os, tdcp::run_usecase(sc, *usecase_a ? tdcp::UseCase::a : tdcp::UseCase::b, exec));
            emit(run.out, os.str());
        }
        else if (*calibrate)
        {
            const auto sc = load(run);
            const auto uc = calib_usecase == "a" ? tdcp::UseCase::a : tdcp::UseCase::b;
            auto forced = sc;
            if (!forced.policy)
                throw tdcp::ConfigError("the scenario has no [policy] section");
            forced.policy->auto_threshold = true;
            const double th = tdcp::resolve_threshold(forced, uc, exec);
            emit(run.out, tdcp::with_threshold(sc, th));
        }
        else if (*encode)
        {
            tdcp::TdcpReportConfig cfg;
            cfg.delays = parse_delays(enc_delays);
            cfg.amplitude_bits = enc_abits;
            cfg.phase_bits = enc_pbits;
            cfg.report_phase = !enc_phases.empty();
            tdcp::TrsConfig trs;
            tdcp::UeCapability cap;
            if (!enc_scenario.empty())
            {
                const auto sc = tdcp::load_scenario(enc_scenario);
                trs = sc.link.trs;
                cap = sc.capability;
            }
            else
            {
                trs.second_trs_offset_slots = enc_second;
                cap.max_delay = tdcp::CorrelationDelay::parse(enc_max_delay);
                cap.max_num_delays = enc_max_num;
            }
            const auto violations = tdcp::validate_config(cfg, cap, trs);
            if (!violations.empty())
            {
                for (const auto &v : violations)
                    std::cerr << "error: " << v.rule << ": " << v.detail << '\n';
                return exit_config;
            }
            const auto amps = parse_numbers(enc_amps, "amplitude");
            std::optional<std::vector<double>> phases;
            if (cfg.report_phase)
                phases = parse_numbers(enc_phases, "phase");
            if (amps.size() != cfg.delays.size() || (phases && phases->size() != cfg.delays.size()))
                throw tdcp::ConfigError("one amplitude (and phase) per delay is required");
            for (double a : amps)
                if (!(a >= 0.0 && a <= 1.0))
                    throw tdcp::ConfigError("amplitudes must lie in [0, 1]");
            const auto r = tdcp::build_report(cfg, amps, phases ? std::optional<std::span<const double>>(*phases) : std::nullopt,
                                              static_cast<double>(enc_time_ns) * 1e-9);
            const auto bytes = tdcp::serialize_report(r);
            if (enc_out.empty())
                std::cout << to_hex(bytes) << '\n';
            else
                tdcp::write_file(enc_out, std::string(bytes.begin(), bytes.end()));
        }
        else if (*decode)
        {
            std::vector<std::uint8_t> bytes;
            if (!dec_in.empty())
            {
                std::ifstream in(dec_in, std::ios::binary);
                if (!in)
                    throw tdcp::ConfigError("cannot open " + dec_in);
                bytes.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
            }
            else if (!dec_hex.empty())
                bytes = from_hex(dec_hex);
            else
                throw tdcp::ConfigError("report decode needs --hex or --in");
            const auto r = tdcp::deserialize_report(bytes);
            tdcp::TdcpReportConfig cfg{r.delays, r.phase_index.has_value(), r.amplitude_bits, r.phase_bits};
            const auto decoded = tdcp::parse_report(r, cfg);
            std::ostringstream os;
            os << "delay,delay_s,amplitude,phase_rad,time_s\n";
            for (const auto &s : decoded.samples)
            {
                const auto &d = r.delays[static_cast<std::size_t>(&s - decoded.samples.data())];
                os << d.label() << ',' << tdcp::format_number(s.delay, 9) << ',' << tdcp::format_number(s.amplitude) << ','
                   << (s.phase ? tdcp::format_number(*s.phase) : std::string("")) << ','
                   << tdcp::format_number(decoded.measurement_time, 9) << '\n';
            }
            emit(dec_out, os.str());
        }
    }
    catch (const tdcp::ConfigError &e)
    {
        std::cerr << "config error: " << e.what() << '\n';
        return exit_config;
    }
    catch (const std::exception &e)
    {
        std::cerr << "error: " << e.what() << '\n';
        return exit_runtime;
    }
    return 0;
}
