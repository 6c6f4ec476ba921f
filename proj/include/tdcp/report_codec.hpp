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

#ifndef TDCP_REPORT_CODEC_HPP
#define TDCP_REPORT_CODEC_HPP

#include "common.hpp"
#include "tdcp_core.hpp"
#include "trs_grid.hpp"

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace tdcp
{
    /// A correlation delay expressed in OFDM symbols or slots. Any value can be represented so
    /// that configuration errors stay reportable; is_allowed() checks the reportable set
    /// {4 symbols, 1, 2, 3, 4, 5, 6, 10 slots}.
    class CorrelationDelay
    {
    public:
        enum class Unit
        {
            symbols,
            slots
        };

        constexpr CorrelationDelay() = default;
        constexpr CorrelationDelay(Unit unit, int count) : unit_(unit), count_(count) {}

        static constexpr CorrelationDelay symbols(int n) { return {Unit::symbols, n}; }
        static constexpr CorrelationDelay slots(int n) { return {Unit::slots, n}; }

        /// Parses "4os", "4 OS", "1slot", "3 slots", "10slot". Throws ConfigError otherwise.
        static CorrelationDelay parse(std::string text)
        {
            std::string s;
            for (unsigned char ch : text)
                if (!std::isspace(ch))
                    s.push_back(static_cast<char>(std::tolower(ch)));
            std::size_t pos = 0;
            while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos])))
                ++pos;
            if (pos == 0 || pos > 4)
                throw ConfigError("cannot parse delay '" + text + "'");
            const int n = std::stoi(s.substr(0, pos));
            const std::string unit = s.substr(pos);
            if (unit == "os" || unit == "sym" || unit == "symbol" || unit == "symbols")
                return symbols(n);
            if (unit == "slot" || unit == "slots")
                return slots(n);
            throw ConfigError("cannot parse delay '" + text + "'");
        }

        Unit unit() const { return unit_; }
        int count() const { return count_; }

        bool is_allowed() const
        {
            if (unit_ == Unit::symbols)
                return count_ == 4;
            return (count_ >= 1 && count_ <= 6) || count_ == 10;
        }

        /// Length in OFDM symbols (14 per slot).
        int in_symbols() const { return unit_ == Unit::symbols ? count_ : 14 * count_; }

        double seconds(const Numerology &num) const { return in_symbols() * num.symbol_duration(); }

        std::string label() const
        {
            return std::to_string(count_) + (unit_ == Unit::symbols ? "os" : "slot");
        }

        /// Wire code: 0 for 4 symbols, otherwise the number of slots.
        std::uint8_t code() const
        {
            if (!is_allowed())
                throw std::invalid_argument("delay " + label() + " has no wire code");
            return unit_ == Unit::symbols ? 0 : static_cast<std::uint8_t>(count_);
        }

        static CorrelationDelay from_code(std::uint8_t code)
        {
            CorrelationDelay d = code == 0 ? symbols(4) : slots(code);
            if (!d.is_allowed())
                throw FramingError("unknown delay code " + std::to_string(code));
            return d;
        }

        friend bool operator==(const CorrelationDelay &a, const CorrelationDelay &b)
        {
            return a.in_symbols() == b.in_symbols();
        }
        friend auto operator<=>(const CorrelationDelay &a, const CorrelationDelay &b)
        {
            return a.in_symbols() <=> b.in_symbols();
        }

    private:
        Unit unit_ = Unit::slots;
        int count_ = 1;
    };

    inline constexpr CorrelationDelay allowed_delays[] = {
        CorrelationDelay::symbols(4), CorrelationDelay::slots(1), CorrelationDelay::slots(2),
        CorrelationDelay::slots(3), CorrelationDelay::slots(4), CorrelationDelay::slots(5),
        CorrelationDelay::slots(6), CorrelationDelay::slots(10)};

    struct UeCapability
    {
        CorrelationDelay max_delay = CorrelationDelay::slots(10);
        int max_num_delays = 4;
        bool phase_supported = true;

        static UeCapability most_capable() { return {}; }
        static UeCapability least_capable() { return {CorrelationDelay::slots(1), 1, false}; }
    };

    struct TdcpReportConfig
    {
        std::vector<CorrelationDelay> delays;
        bool report_phase = false;
        int amplitude_bits = 7;
        int phase_bits = 6;
    };

    struct Violation
    {
        std::string rule;
        std::string detail;
    };

    /// True when the TRS configuration produces at least one occasion pair at this delay.
    inline bool delay_realizable(const CorrelationDelay &delay, const TrsConfig &trs)
    {
        const double period = trs.burst_periodicity_slots * std::max(1, trs.second_trs_period_multiple) *
                              trs.numerology.slot_duration();
        const double start = trs.first_slot * trs.numerology.slot_duration();
        auto occ = trs_occasions(trs, start, start + period);
        return !snapshot_pairs(occ, delay.seconds(trs.numerology), default_pair_tolerance(trs.numerology)).empty();
    }

    /// Rules that depend on the delay list alone (count, allowed set, ordering).
    inline std::vector<Violation> validate_delays(std::span<const CorrelationDelay> delays)
    {
        std::vector<Violation> v;
        if (delays.empty())
            v.push_back({"at least one delay", "no delays configured"});
        if (delays.size() > 4)
            v.push_back({"max four delays", std::to_string(delays.size()) + " delays configured"});
        for (std::size_t i = 0; i < delays.size(); ++i)
        {
            if (!delays[i].is_allowed())
                v.push_back({"delay not in allowed set", delays[i].label()});
            if (i > 0 && delays[i] == delays[i - 1])
                v.push_back({"delays distinct", delays[i].label() + " repeated"});
            else if (i > 0 && delays[i] < delays[i - 1])
                v.push_back({"delays ascending", delays[i].label() + " after " + delays[i - 1].label()});
        }
        return v;
    }

    /// Every rule the configuration violates; empty means valid.
    inline std::vector<Violation> validate_config(const TdcpReportConfig &cfg, const UeCapability &cap, const TrsConfig &trs)
    {
        auto v = validate_delays(cfg.delays);
        if (static_cast<int>(cfg.delays.size()) > cap.max_num_delays)
            v.push_back({"exceeds UE delay count capability",
                         std::to_string(cfg.delays.size()) + " > " + std::to_string(cap.max_num_delays)});
        for (const auto &d : cfg.delays)
            if (d > cap.max_delay)
                v.push_back({"exceeds UE capability", d.label() + " > " + cap.max_delay.label()});
        if (cfg.report_phase && !cap.phase_supported)
            v.push_back({"phase not supported by UE", ""});
        if (cfg.amplitude_bits < 1 || cfg.amplitude_bits > 16)
            v.push_back({"amplitude bits in 1..16", std::to_string(cfg.amplitude_bits)});
        if (cfg.report_phase && (cfg.phase_bits < 1 || cfg.phase_bits > 16))
            v.push_back({"phase bits in 1..16", std::to_string(cfg.phase_bits)});
        if (auto msg = trs.check(); !msg.empty())
            v.push_back({"valid TRS configuration", msg});
        else
            for (const auto &d : cfg.delays)
                if (d.is_allowed() && !delay_realizable(d, trs))
                    v.push_back({"delay realizable by TRS", d.label() + " has no TRS occasion pair"});
        return v;
    }

    /// Uniform mid-rise quantizer with 2^bits levels on [0, 1].
    struct AmplitudeQuantizer
    {
        int bits = 7;

        std::uint32_t levels() const { return 1u << bits; }
        double step() const { return 1.0 / levels(); }

        std::uint32_t quantize(double c) const
        {
            if (!(c >= 0.0) || c > 1.0)
                throw std::invalid_argument("quantize_amplitude: value outside [0, 1]");
            return std::min(static_cast<std::uint32_t>(c * levels()), levels() - 1);
        }

        double dequantize(std::uint32_t index) const
        {
            if (index >= levels())
                throw std::invalid_argument("dequantize_amplitude: index out of range");
            return (index + 0.5) * step();
        }
    };

    /// Uniform wrap-around quantizer with 2^bits levels on (-pi, pi].
    struct PhaseQuantizer
    {
        int bits = 6;

        std::uint32_t levels() const { return 1u << bits; }
        double step() const { return 2.0 * pi / levels(); }

        std::uint32_t quantize(double phase) const
        {
            if (!std::isfinite(phase))
                throw std::invalid_argument("quantize_phase: non-finite phase");
            const auto n = static_cast<long long>(levels());
            long long k = std::llround(wrap_phase(phase) / step()) % n;
            return static_cast<std::uint32_t>(k < 0 ? k + n : k);
        }

        double dequantize(std::uint32_t index) const
        {
            if (index >= levels())
                throw std::invalid_argument("dequantize_phase: index out of range");
            return wrap_phase(index * step());
        }
    };

    struct TdcpReport
    {
        std::vector<CorrelationDelay> delays;
        std::vector<std::uint32_t> amplitude_index;
        std::optional<std::vector<std::uint32_t>> phase_index;
        int amplitude_bits = 7;
        int phase_bits = 6;
        double measurement_time = 0.0; // seconds, serialized with nanosecond resolution
    };

    struct DecodedReport
    {
        std::vector<CorrelationSample> samples;
        double measurement_time = 0.0;
    };

    inline TdcpReport build_report(const TdcpReportConfig &cfg, std::span<const double> amplitudes,
                                   std::optional<std::span<const double>> phases, double time)
    {
        if (amplitudes.size() != cfg.delays.size())
            throw std::invalid_argument("build_report: amplitude count differs from configured delays");
        if (cfg.report_phase != phases.has_value())
            throw std::invalid_argument(cfg.report_phase ? "build_report: phases required by configuration"
                                                         : "build_report: phases given but not configured");
        if (phases && phases->size() != cfg.delays.size())
            throw std::invalid_argument("build_report: phase count differs from configured delays");

        TdcpReport r;
        r.delays = cfg.delays;
        r.amplitude_bits = cfg.amplitude_bits;
        r.phase_bits = cfg.phase_bits;
        r.measurement_time = time;
        const AmplitudeQuantizer aq{cfg.amplitude_bits};
        for (double a : amplitudes)
            r.amplitude_index.push_back(aq.quantize(a));
        if (phases)
        {
            const PhaseQuantizer pq{cfg.phase_bits};
            r.phase_index.emplace();
            for (double p : *phases)
                r.phase_index->push_back(pq.quantize(p));
        }
        return r;
    }

    inline DecodedReport parse_report(const TdcpReport &report, const TdcpReportConfig &cfg, const Numerology &num = {})
    {
        if (report.phase_index.has_value() != cfg.report_phase)
            throw FramingError(cfg.report_phase ? "report lacks configured phase fields"
                                                : "report carries phase fields that were not configured");
        if (report.delays != cfg.delays)
            throw FramingError("report delays differ from configuration");
        if (report.amplitude_index.size() != report.delays.size() ||
            (report.phase_index && report.phase_index->size() != report.delays.size()))
            throw FramingError("report field counts differ from delay count");
        if (report.amplitude_bits != cfg.amplitude_bits || (cfg.report_phase && report.phase_bits != cfg.phase_bits))
            throw FramingError("report quantizer widths differ from configuration");

        DecodedReport out;
        out.measurement_time = report.measurement_time;
        const AmplitudeQuantizer aq{report.amplitude_bits};
        const PhaseQuantizer pq{report.phase_bits};
        for (std::size_t i = 0; i < report.delays.size(); ++i)
        {
            CorrelationSample s;
            s.delay = report.delays[i].seconds(num);
            s.amplitude = aq.dequantize(report.amplitude_index[i]);
            if (report.phase_index)
                s.phase = pq.dequantize((*report.phase_index)[i]);
            out.samples.push_back(s);
        }
        return out;
    }

    inline constexpr std::uint8_t report_format_version = 1;

    /**
     * Byte layout (big-endian):
     *   [0] version = 1   [1] flags, bit 0 = phase present   [2] amplitude bits   [3] phase bits (0 if none)
     *   [4] delay count K (1..4)   [5..12] measurement time, signed 64-bit nanoseconds
     *   then K records: delay code (u8), amplitude index (u16), phase index (u16, if present)
     * Delay code 0 is 4 OFDM symbols; code n >= 1 is n slots.
     */
    inline std::vector<std::uint8_t> serialize_report(const TdcpReport &r)
    {
        const bool phase = r.phase_index.has_value();
        if (r.delays.empty() || r.delays.size() > 4)
            throw std::invalid_argument("serialize_report: 1..4 delays required");
        if (r.amplitude_index.size() != r.delays.size() || (phase && r.phase_index->size() != r.delays.size()))
            throw std::invalid_argument("serialize_report: field counts differ from delay count");
        if (r.amplitude_bits < 1 || r.amplitude_bits > 16 || (phase && (r.phase_bits < 1 || r.phase_bits > 16)))
            throw std::invalid_argument("serialize_report: quantizer width out of range");

        std::vector<std::uint8_t> out;
        out.push_back(report_format_version);
        out.push_back(phase ? 1 : 0);
        out.push_back(static_cast<std::uint8_t>(r.amplitude_bits));
        out.push_back(static_cast<std::uint8_t>(phase ? r.phase_bits : 0));
        out.push_back(static_cast<std::uint8_t>(r.delays.size()));
        const auto ns = static_cast<std::uint64_t>(std::llround(r.measurement_time * 1e9));
        for (int shift = 56; shift >= 0; shift -= 8)
            out.push_back(static_cast<std::uint8_t>(ns >> shift));
        auto put16 = [&out](std::uint32_t v) {
            out.push_back(static_cast<std::uint8_t>(v >> 8));
            out.push_back(static_cast<std::uint8_t>(v));
        };
        for (std::size_t i = 0; i < r.delays.size(); ++i)
        {
            out.push_back(r.delays[i].code());
            if (r.amplitude_index[i] >= (1u << r.amplitude_bits))
                throw std::invalid_argument("serialize_report: amplitude index out of range");
            put16(r.amplitude_index[i]);
            if (phase)
            {
                if ((*r.phase_index)[i] >= (1u << r.phase_bits))
                    throw std::invalid_argument("serialize_report: phase index out of range");
                put16((*r.phase_index)[i]);
            }
        }
        return out;
    }

    inline TdcpReport deserialize_report(std::span<const std::uint8_t> bytes)
    {
        constexpr std::size_t header = 13;
        if (bytes.size() < header)
            throw FramingError("report truncated: " + std::to_string(bytes.size()) + " bytes, header needs 13");
        if (bytes[0] != report_format_version)
            throw FramingError("unsupported report version " + std::to_string(bytes[0]));
        if (bytes[1] & ~1u)
            throw FramingError("reserved flag bits set");
        TdcpReport r;
        const bool phase = bytes[1] & 1u;
        r.amplitude_bits = bytes[2];
        r.phase_bits = phase ? bytes[3] : 6;
        if (r.amplitude_bits < 1 || r.amplitude_bits > 16 || (phase && (bytes[3] < 1 || bytes[3] > 16)) || (!phase && bytes[3] != 0))
            throw FramingError("invalid quantizer widths");
        const std::size_t k = bytes[4];
        if (k < 1 || k > 4)
            throw FramingError("delay count must be 1..4, got " + std::to_string(k));
        std::uint64_t ns = 0;
        for (std::size_t i = 5; i < header; ++i)
            ns = (ns << 8) | bytes[i];
        r.measurement_time = static_cast<double>(static_cast<std::int64_t>(ns)) * 1e-9;
        const std::size_t rec = phase ? 5 : 3;
        if (bytes.size() != header + k * rec)
            throw FramingError("report length " + std::to_string(bytes.size()) + " does not match " +
                               std::to_string(header + k * rec) + " expected for " + std::to_string(k) + " delays");
        if (phase)
            r.phase_index.emplace();
        for (std::size_t i = 0; i < k; ++i)
        {
            const auto *p = bytes.data() + header + i * rec;
            r.delays.push_back(CorrelationDelay::from_code(p[0]));
            const std::uint32_t a = (std::uint32_t{p[1]} << 8) | p[2];
            if (a >= (1u << r.amplitude_bits))
                throw FramingError("amplitude index out of range");
            r.amplitude_index.push_back(a);
            if (phase)
            {
                const std::uint32_t ph = (std::uint32_t{p[3]} << 8) | p[4];
                if (ph >= (1u << r.phase_bits))
                    throw FramingError("phase index out of range");
                r.phase_index->push_back(ph);
            }
        }
        return r;
    }
} // namespace tdcp

#endif
