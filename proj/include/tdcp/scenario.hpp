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

#ifndef TDCP_SCENARIO_HPP
#define TDCP_SCENARIO_HPP

#include "link_eval.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace tdcp
{
    /**
     * Sectioned key-value text:
     *
     *     # comment
     *     seed = 7
     *     [trs]
     *     snr_db = 10      # trailing comment
     *
     * Keys before the first section header belong to the unnamed top-level section.
     */
    class ConfigDocument
    {
    public:
        struct Entry
        {
            std::string section;
            std::string key;
            std::string value;
            int line = 0;
            mutable bool used = false;
        };

        static ConfigDocument parse(std::istream &in, const std::string &source)
        {
            ConfigDocument doc;
            doc.source_ = source;
            std::string raw, section;
            int line_no = 0;
            std::map<std::string, int> sections_seen;
            while (std::getline(in, raw))
            {
                ++line_no;
                doc.lines_.push_back(raw);
                std::string line = trim(raw.substr(0, raw.find('#')));
                if (line.empty())
                    continue;
                if (line.front() == '[')
                {
                    if (line.back() != ']')
                        throw doc.error(line_no, "malformed section header");
                    section = trim(line.substr(1, line.size() - 2));
                    if (section.empty())
                        throw doc.error(line_no, "empty section name");
                    if (auto [it, fresh] = sections_seen.emplace(section, line_no); !fresh)
                        throw doc.error(line_no, "duplicate section [" + section + "] (first on line " + std::to_string(it->second) + ")");
                    doc.section_lines_[section] = line_no;
                    continue;
                }
                const auto eq = line.find('=');
                if (eq == std::string::npos)
                    throw doc.error(line_no, "expected 'key = value'");
                Entry e{section, trim(line.substr(0, eq)), trim(line.substr(eq + 1)), line_no};
                if (e.key.empty())
                    throw doc.error(line_no, "missing key");
                if (const Entry *prev = doc.find(section, e.key))
                    throw doc.error(line_no, "duplicate key '" + doc.qualified(section, e.key) + "' (first on line " +
                                                 std::to_string(prev->line) + ")");
                doc.entries_.push_back(std::move(e));
            }
            return doc;
        }

        const Entry *find(const std::string &section, const std::string &key) const
        {
            for (const auto &e : entries_)
                if (e.section == section && e.key == key)
                    return &e;
            return nullptr;
        }

        /// Looks a key up and marks it as consumed.
        const Entry *take(const std::string &section, const std::string &key) const
        {
            const Entry *e = find(section, key);
            if (e)
                e->used = true;
            return e;
        }

        bool has_section(const std::string &section) const { return section_lines_.count(section) > 0; }
        const std::map<std::string, int> &sections() const { return section_lines_; }

        /// Throws on the first entry that was never consumed.
        void reject_unused() const
        {
            for (const auto &e : entries_)
                if (!e.used)
                    throw error(e.line, "unknown key '" + qualified(e.section, e.key) + "'");
        }

        ConfigError error(int line, const std::string &msg) const
        {
            return ConfigError(source_ + ":" + std::to_string(line) + ": " + msg);
        }

        const std::string &source() const { return source_; }
        const std::vector<std::string> &lines() const { return lines_; }
        std::optional<int> section_line(const std::string &section) const
        {
            auto it = section_lines_.find(section);
            return it == section_lines_.end() ? std::nullopt : std::optional(it->second);
        }

        static std::string trim(const std::string &s)
        {
            const auto b = s.find_first_not_of(" \t\r");
            if (b == std::string::npos)
                return {};
            return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
        }

        static std::string qualified(const std::string &section, const std::string &key)
        {
            return section.empty() ? key : section + "." + key;
        }

    private:
        std::string source_;
        std::vector<Entry> entries_;
        std::vector<std::string> lines_;
        std::map<std::string, int> section_lines_;
    };

    /// Delay sweep of the autocorrelation experiment.
    struct AutocorrSpec
    {
        double delay_step_s = 0.25e-3;
        double delay_max_s = 5e-3;
        double snr_db = std::numeric_limits<double>::infinity();

        std::vector<double> delays() const
        {
            std::vector<double> d;
            const auto n = static_cast<std::size_t>(std::floor(delay_max_s / delay_step_s + 1e-9));
            for (std::size_t i = 0; i <= n; ++i)
                d.push_back(static_cast<double>(i) * delay_step_s);
            return d;
        }
    };

    struct PolicySpec
    {
        SwitchingPolicy policy;
        bool auto_threshold = true;
    };

    struct Scenario
    {
        std::string source;
        std::vector<std::string> source_lines;
        std::optional<int> policy_section_line;
        std::optional<int> threshold_line;

        LinkScenario link;
        TdcpReportConfig report;
        UeCapability capability;
        std::optional<PolicySpec> policy;
        AutocorrSpec autocorr;

        /// Speeds of the use case when none are configured.
        std::vector<double> speeds_for(bool usecase_b) const
        {
            if (!link.speeds_kmh.empty())
                return link.speeds_kmh;
            if (usecase_b)
                return {90, 120, 180, 250, 300, 350, 500};
            return {3, 10, 20, 30, 60};
        }
    };

    namespace detail
    {
        class ValueReader
        {
        public:
            ValueReader(const ConfigDocument &doc, std::string section) : doc_(doc), section_(std::move(section)) {}

            bool present(const std::string &key) const { return doc_.find(section_, key) != nullptr; }

            template <typename T>
            void get(const std::string &key, T &out) const
            {
                if (const auto *e = doc_.take(section_, key))
                    out = convert<T>(*e, e->value);
            }

            template <typename T>
            void get_list(const std::string &key, std::vector<T> &out) const
            {
                const auto *e = doc_.take(section_, key);
                if (!e)
                    return;
                out.clear();
                std::stringstream ss(e->value);
                std::string item;
                while (std::getline(ss, item, ','))
                {
                    item = ConfigDocument::trim(item);
                    if (item.empty())
                        throw doc_.error(e->line, "empty list element in '" + key + "'");
                    out.push_back(convert<T>(*e, item));
                }
            }

            const ConfigDocument::Entry *entry(const std::string &key) const { return doc_.take(section_, key); }

            ConfigError error(const ConfigDocument::Entry &e, const std::string &msg) const { return doc_.error(e.line, msg); }

        private:
            template <typename T>
            T convert(const ConfigDocument::Entry &e, const std::string &text) const
            {
                const std::string where = "'" + ConfigDocument::qualified(section_, e.key) + "'";
                if constexpr (std::is_same_v<T, bool>)
                {
                    if (text == "true" || text == "yes" || text == "on")
                        return true;
                    if (text == "false" || text == "no" || text == "off")
                        return false;
                    throw doc_.error(e.line, where + ": expected true or false, got '" + text + "'");
                }
                else if constexpr (std::is_same_v<T, std::string>)
                    return text;
                else if constexpr (std::is_same_v<T, CorrelationDelay>)
                {
                    try
                    {
                        return CorrelationDelay::parse(text);
                    }
                    catch (const ConfigError &err)
                    {
                        throw doc_.error(e.line, where + ": " + err.what());
                    }
                }
                else if constexpr (std::is_integral_v<T>)
                {
                    T v{};
                    auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
                    if (ec != std::errc() || p != text.data() + text.size())
                        throw doc_.error(e.line, where + ": expected an integer, got '" + text + "'");
                    return v;
                }
                else
                {
                    if (text == "inf" || text == "+inf")
                        return std::numeric_limits<double>::infinity();
                    std::istringstream is(text);
                    is.imbue(std::locale::classic());
                    double v = 0.0;
                    is >> v;
                    if (is.fail() || !is.eof() || !std::isfinite(v))
                        throw doc_.error(e.line, where + ": expected a number, got '" + text + "'");
                    return v;
                }
            }

            const ConfigDocument &doc_;
            std::string section_;
        };

        inline AntennaArray parse_array(const ValueReader &r, const std::string &key, AntennaArray base)
        {
            const auto *e = r.entry(key);
            if (!e)
                return base;
            int rows = 0, cols = 0, pols = 0;
            char x1 = 0, x2 = 0;
            std::istringstream is(e->value);
            if (!(is >> rows >> x1 >> cols >> x2 >> pols) || x1 != 'x' || x2 != 'x' || rows < 1 || cols < 1 ||
                (pols != 1 && pols != 2) || !(is >> std::ws).eof())
                throw r.error(*e, "'" + key + "': expected ROWSxCOLUMNSxPOLARIZATIONS, e.g. 2x4x2");
            base.rows = rows;
            base.columns = cols;
            base.polarizations = pols;
            return base;
        }
    } // namespace detail

    /// Parses a scenario; relative file references resolve against base_dir.
    inline Scenario parse_scenario(std::istream &in, const std::string &source, const std::filesystem::path &base_dir = ".")
    {
        const auto doc = ConfigDocument::parse(in, source);
        static const std::vector<std::string> known_sections{"channel", "trs", "pdsch", "report", "capability", "policy", "autocorr"};
        for (const auto &[name, line] : doc.sections())
            if (std::find(known_sections.begin(), known_sections.end(), name) == known_sections.end())
                throw doc.error(line, "unknown section [" + name + "]");

        Scenario sc;
        sc.source = source;
        sc.source_lines = doc.lines();
        auto &link = sc.link;

        {
            detail::ValueReader r(doc, "");
            long long seed = 1;
            r.get("seed", seed);
            if (seed < 0)
                throw doc.error(doc.find("", "seed")->line, "'seed' must be >= 0");
            link.seed = static_cast<std::uint64_t>(seed);
            r.get("drops", link.drops);
            r.get_list("speeds_kmh", link.speeds_kmh);
            r.get_list("directions_deg", link.directions_deg);
            r.get("carrier_hz", link.channel.carrier_hz);
            double scs_khz = link.trs.numerology.subcarrier_spacing_hz / 1e3;
            r.get("subcarrier_spacing_khz", scs_khz);
            link.trs.numerology.subcarrier_spacing_hz = scs_khz * 1e3;
        }
        {
            detail::ValueReader r(doc, "channel");
            auto &ch = link.channel;
            std::string model = "cdl";
            r.get("model", model);
            if (model == "tdl" || model == "TDL")
                ch.kind = ChannelModelConfig::Kind::tdl;
            else if (model == "cdl" || model == "CDL")
                ch.kind = ChannelModelConfig::Kind::cdl;
            else
                throw doc.error(doc.find("channel", "model")->line, "'channel.model' must be tdl or cdl");
            if (const auto *e = r.entry("table"))
            {
                if (ch.kind != ChannelModelConfig::Kind::cdl)
                    throw doc.error(e->line, "'channel.table' requires model = cdl");
                std::filesystem::path p(e->value);
                if (p.is_relative())
                    p = base_dir / p;
                try
                {
                    ch.table = load_cdl_table(p.string());
                }
                catch (const Error &err)
                {
                    throw doc.error(e->line, err.what());
                }
            }
            else if (ch.kind == ChannelModelConfig::Kind::cdl)
                throw doc.error(doc.section_line("channel").value_or(1), "model = cdl requires 'channel.table'");
            double ds_ns = ch.delay_spread_s * 1e9;
            r.get("delay_spread_ns", ds_ns);
            ch.delay_spread_s = ds_ns * 1e-9;
            r.get("asa_deg", ch.asa_deg);
            r.get("zsa_deg", ch.zsa_deg);
            int taps = 32;
            double spacing_ns = 10.0;
            const bool custom_taps = r.present("tdl_taps") || r.present("tdl_tap_spacing_ns");
            r.get("tdl_taps", taps);
            r.get("tdl_tap_spacing_ns", spacing_ns);
            if (custom_taps)
            {
                if (taps < 1 || !(spacing_ns >= 0.0))
                    throw doc.error(doc.section_line("channel").value_or(1), "tdl taps must be >= 1 with spacing >= 0");
                const auto profile = TapProfile::uniform(static_cast<std::size_t>(taps), spacing_ns * 1e-9);
                ch.tdl_taps.assign(profile.taps().begin(), profile.taps().end());
            }
            r.get("rays", ch.num_rays);
            ch.tx = detail::parse_array(r, "tx_array", ch.tx);
            ch.rx = detail::parse_array(r, "rx_array", ch.rx);
        }
        {
            detail::ValueReader r(doc, "trs");
            auto &t = link.trs;
            r.get("comb", t.comb_spacing);
            r.get("comb_offset", t.comb_offset);
            std::vector<int> sym;
            r.get_list("symbols", sym);
            if (!sym.empty())
            {
                if (sym.size() != 2)
                    throw doc.error(doc.find("trs", "symbols")->line, "'trs.symbols' takes exactly two positions");
                t.symbol_positions = {sym[0], sym[1]};
            }
            r.get("slots_per_burst", t.slots_per_burst);
            r.get("periodicity_slots", t.burst_periodicity_slots);
            r.get("first_slot", t.first_slot);
            if (const auto *e = r.entry("second_offset_slots"))
            {
                if (e->value != "none")
                {
                    int off = 0;
                    detail::ValueReader(doc, "trs").get("second_offset_slots", off);
                    t.second_trs_offset_slots = off;
                }
            }
            r.get("second_period_multiple", t.second_trs_period_multiple);
            r.get("bandwidth_prbs", t.bandwidth_prbs);
            r.get("tx_element", t.tx_element);
            r.get("snr_db", link.trs_snr_db);
            r.get("averaging_bursts", link.averaging_bursts);
            r.get("noise_bias_correction", link.noise_bias_correction);
        }
        {
            detail::ValueReader r(doc, "pdsch");
            r.get("snr_db", link.pdsch_snr_db);
            r.get("prbs", link.pdsch_prbs);
            r.get("freq_step", link.pdsch_freq_step);
            r.get("feedback_period_slots", link.feedback_period_slots);
            r.get("csi_delay_slots", link.csi_delay_slots);
            r.get("max_rank", link.max_rank);
            r.get("oversampling", link.oversampling);
            r.get_list("dmrs_one_additional", link.dmrs_one_additional);
            r.get_list("dmrs_two_additional", link.dmrs_two_additional);
            r.get("periods_per_drop", link.periods_per_drop);
            r.get("frequency_tracking", link.frequency_tracking);
        }
        {
            detail::ValueReader r(doc, "report");
            r.get_list("delays", sc.report.delays);
            r.get("phase", sc.report.report_phase);
            r.get("amplitude_bits", sc.report.amplitude_bits);
            r.get("phase_bits", sc.report.phase_bits);
        }
        {
            detail::ValueReader r(doc, "capability");
            r.get("max_delay", sc.capability.max_delay);
            r.get("max_num_delays", sc.capability.max_num_delays);
            r.get("phase_supported", sc.capability.phase_supported);
        }
        if (doc.has_section("policy"))
        {
            detail::ValueReader r(doc, "policy");
            PolicySpec ps;
            r.get("delay", ps.policy.metric_delay);
            r.get("hysteresis", ps.policy.hysteresis);
            sc.policy_section_line = doc.section_line("policy");
            if (const auto *e = r.entry("threshold"))
            {
                sc.threshold_line = e->line;
                if (e->value != "auto")
                {
                    ps.auto_threshold = false;
                    detail::ValueReader(doc, "policy").get("threshold", ps.policy.threshold);
                }
            }
            sc.policy = ps;
        }
        {
            detail::ValueReader r(doc, "autocorr");
            double step_ms = sc.autocorr.delay_step_s * 1e3, max_ms = sc.autocorr.delay_max_s * 1e3;
            r.get("delay_step_ms", step_ms);
            r.get("delay_max_ms", max_ms);
            r.get("snr_db", sc.autocorr.snr_db);
            sc.autocorr.delay_step_s = step_ms * 1e-3;
            sc.autocorr.delay_max_s = max_ms * 1e-3;
        }
        doc.reject_unused();

        // Semantic validation; the location is the section that carries the offending value.
        auto fail = [&](const std::string &section, const std::string &msg) {
            return doc.error(doc.section_line(section).value_or(1), msg);
        };
        if (link.drops < 1)
            throw fail("", "'drops' must be >= 1");
        for (double v : link.speeds_kmh)
            if (!(v >= 0.0))
                throw fail("", "'speeds_kmh' entries must be >= 0");
        if (!(link.channel.carrier_hz > 0.0))
            throw fail("", "'carrier_hz' must be positive");
        if (!(link.trs.numerology.subcarrier_spacing_hz > 0.0))
            throw fail("", "'subcarrier_spacing_khz' must be positive");
        if (!(link.channel.delay_spread_s >= 0.0) || !(link.channel.asa_deg >= 0.0) || !(link.channel.zsa_deg >= 0.0))
            throw fail("channel", "spreads must be >= 0");
        if (link.channel.num_rays < 8)
            throw fail("channel", "'rays' must be >= 8");
        if (const auto msg = link.trs.check(); !msg.empty())
            throw fail("trs", msg);
        if (link.trs.tx_element < 0 || link.trs.tx_element >= link.channel.tx.num_elements())
            throw fail("trs", "'tx_element' outside the transmit array");
        if (link.averaging_bursts < 1)
            throw fail("trs", "'averaging_bursts' must be >= 1");
        if (link.pdsch_prbs < 1 || link.pdsch_freq_step < 1 || link.feedback_period_slots < 1 || link.csi_delay_slots < 0 ||
            link.max_rank < 1 || link.max_rank > 2 || link.oversampling < 1 || link.periods_per_drop < 1)
            throw fail("pdsch", "prbs, freq_step, feedback_period_slots, oversampling, periods_per_drop must be >= 1, "
                                "csi_delay_slots >= 0 and max_rank 1 or 2");
        for (const auto *dm : {&link.dmrs_one_additional, &link.dmrs_two_additional})
            for (std::size_t i = 0; i < dm->size(); ++i)
                if ((*dm)[i] < 0 || (*dm)[i] >= link.trs.numerology.symbols_per_slot || (i > 0 && (*dm)[i] <= (*dm)[i - 1]))
                    throw fail("pdsch", "DMRS positions must be ascending symbol indices inside the slot");
        if (!(sc.autocorr.delay_step_s > 0.0) || !(sc.autocorr.delay_max_s >= 0.0))
            throw fail("autocorr", "'delay_step_ms' must be > 0 and 'delay_max_ms' >= 0");

        if (!sc.report.delays.empty())
        {
            const auto violations = validate_config(sc.report, sc.capability, link.trs);
            if (!violations.empty())
            {
                std::string msg = "report configuration rejected:";
                for (const auto &v : violations)
                    msg += " [" + v.rule + "] " + v.detail + ";";
                msg.pop_back();
                throw fail("report", msg);
            }
        }
        if (sc.policy)
        {
            try
            {
                if (!sc.policy->auto_threshold)
                    sc.policy->policy.validate();
                else if (!sc.policy->policy.metric_delay.is_allowed())
                    sc.policy->policy.validate();
            }
            catch (const ConfigError &err)
            {
                throw fail("policy", err.what());
            }
            if (!delay_realizable(sc.policy->policy.metric_delay, link.trs))
                throw fail("policy", "delay " + sc.policy->policy.metric_delay.label() + " is not realizable by the TRS configuration");
        }
        link.metric_delays = sc.report.delays;
        return sc;
    }

    inline Scenario load_scenario(const std::filesystem::path &path)
    {
        std::ifstream in(path);
        if (!in)
            throw ConfigError("cannot open scenario file " + path.string());
        return parse_scenario(in, path.string(), path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path());
    }

    /// Scenario text with the policy threshold replaced by a calibrated value.
    inline std::string with_threshold(const Scenario &sc, double threshold)
    {
        char buf[64];
        std::snprintf(buf, sizeof buf, "threshold = %.6f", threshold);
        std::vector<std::string> lines = sc.source_lines;
        if (sc.threshold_line)
            lines[static_cast<std::size_t>(*sc.threshold_line - 1)] = buf;
        else if (sc.policy_section_line)
            lines.insert(lines.begin() + *sc.policy_section_line, buf);
        else
        {
            lines.emplace_back("");
            lines.emplace_back("[policy]");
            lines.emplace_back("delay = " + (sc.policy ? sc.policy->policy.metric_delay : CorrelationDelay::slots(3)).label());
            lines.emplace_back(buf);
        }
        std::string out;
        for (const auto &l : lines)
            out += l + "\n";
        return out;
    }
} // namespace tdcp

#endif
