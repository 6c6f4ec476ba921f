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

#include "tdcp/harness.hpp"

#include <catch_amalgamated.hpp>

#include <clocale>
#include <set>
#include <sstream>

using namespace tdcp;
using Catch::Matchers::WithinAbs;

namespace
{
    Scenario parse(const std::string &text)
    {
        std::istringstream in(text);
        return parse_scenario(in, "harness.cfg", TDCP_SCENARIO_DIR);
    }

    const char *small_a = R"(seed = 5
drops = 3
speeds_kmh = 3, 60
[channel]
model = tdl
tdl_taps = 3
tdl_tap_spacing_ns = 100
rays = 16
tx_array = 1x2x2
[trs]
bandwidth_prbs = 24
second_offset_slots = 3
averaging_bursts = 2
[pdsch]
prbs = 4
feedback_period_slots = 4
periods_per_drop = 2
[report]
delays = 1slot, 3slot
[policy]
delay = 3slot
threshold = auto
)";

    std::vector<std::string> csv_lines(const std::string &s)
    {
        std::vector<std::string> out;
        std::istringstream in(s);
        for (std::string l; std::getline(in, l);)
            out.push_back(l);
        return out;
    }
}

TEST_CASE("number formatting", "[harness]")
{
    CHECK(format_number(1.5) == "1.500000");
    CHECK(format_number(-0.0000001, 3) == "0.000");
    CHECK(format_number(-2.25, 1) == "-2.2");
    CHECK(format_number(std::nan("")) == "nan");
    CHECK(format_number(std::numeric_limits<double>::infinity()) == "inf");
    CHECK(format_number(-std::numeric_limits<double>::infinity()) == "-inf");
    CHECK(format_number(1e-9, 9) == "0.000000001");
    // a comma-decimal C locale must not leak into the output
    if (std::setlocale(LC_NUMERIC, "de_DE.UTF-8") || std::setlocale(LC_NUMERIC, "fr_FR.UTF-8"))
    {
        CHECK(format_number(1.5) == "1.500000");
        std::setlocale(LC_NUMERIC, "C");
    }
}

TEST_CASE("parallel executor", "[harness]")
{
    for (unsigned jobs : {1u, 2u, 8u, 64u})
    {
        std::vector<int> hits(1000, 0);
        parallel_executor(jobs)(hits.size(), [&](std::size_t i) { hits[i] += 1; });
        CHECK(std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; }));
        parallel_executor(jobs)(0, [](std::size_t) { FAIL("called on empty range"); });
        CHECK_THROWS_AS(parallel_executor(jobs)(100, [](std::size_t i) {
                            if (i == 37)
                                throw ConfigError("boom");
                        }),
                        ConfigError);
    }
    CHECK(default_jobs() >= 1);
}

TEST_CASE("use case A output is identical for any job count", "[harness][determinism]")
{
    const auto sc = parse(small_a);
    std::string reference;
    for (unsigned jobs : {1u, 3u, 8u})
    {
        std::ostringstream os;
        write_usecase_csv(os, run_usecase(sc, UseCase::a, parallel_executor(jobs)));
        if (reference.empty())
            reference = os.str();
        CHECK(os.str() == reference);
    }
    const auto lines = csv_lines(reference);
    REQUIRE(lines.size() == 1 + 2 * 4);
    CHECK(lines[0] == "speed_kmh,scheme,delay_label,trs_snr_db,pdsch_snr_db,mean_se_bpshz,mean_metric,genie_agreement");
    std::set<std::string> schemes;
    for (std::size_t i = 1; i < lines.size(); ++i)
    {
        CHECK(std::count(lines[i].begin(), lines[i].end(), ',') == 7);
        schemes.insert(lines[i].substr(lines[i].find(',') + 1, lines[i].find(',', lines[i].find(',') + 1) - lines[i].find(',') - 1));
    }
    CHECK(schemes == std::set<std::string>{"TypeI", "TypeII", "switched-3slot", "genie"});
    CHECK(reference.find('\r') == std::string::npos);
    CHECK(reference.back() == '\n');
}

TEST_CASE("genie dominates every scheme", "[harness]")
{
    const auto sc = parse(small_a);
    const auto res = run_usecase(sc, UseCase::a, parallel_executor(4));
    REQUIRE(res.threshold.has_value());
    for (double v : {3.0, 60.0})
    {
        const double g = res.row(v, "genie").mean_se;
        for (const char *s : {"TypeI", "TypeII", "switched-3slot"})
            CHECK(g >= res.row(v, s).mean_se - 1e-12);
    }
}

TEST_CASE("use case B rows and fixed threshold", "[harness]")
{
    auto text = std::string(small_a);
    text.replace(text.find("threshold = auto"), 16, "threshold = 0.9");
    text.replace(text.find("delays = 1slot, 3slot"), 21, "delays = 4os");
    text.replace(text.find("delay = 3slot"), 13, "delay = 4os");
    text.replace(text.find("tx_array = 1x2x2"), 16, "tx_array = 1x1x1");
    text.replace(text.find("speeds_kmh = 3, 60"), 18, "speeds_kmh = 90, 500");
    const auto sc = parse(text);
    CHECK(resolve_threshold(sc, UseCase::b) == 0.9);
    const auto res = run_usecase(sc, UseCase::b, parallel_executor(2));
    CHECK(res.rows.size() == 8);
    CHECK(res.row(90.0, "switched-4os").delay_label == "4os");
    CHECK(*res.threshold == 0.9);
}

TEST_CASE("usecase without a policy", "[harness]")
{
    auto text = std::string(small_a);
    text.erase(text.find("[policy]"));
    const auto sc = parse(text);
    CHECK_THROWS_AS(resolve_threshold(sc, UseCase::a), ConfigError);
    const auto res = run_usecase(sc, UseCase::a);
    CHECK(res.rows.size() == 6);
    CHECK_FALSE(res.threshold.has_value());
}

TEST_CASE("autocorrelation sweep", "[harness]")
{
    const auto sc = parse(R"(drops = 4
speeds_kmh = 10, 120
directions_deg = 0, 90
[channel]
model = tdl
tx_array = 1x1x1
[trs]
bandwidth_prbs = 24
[autocorr]
delay_step_ms = 1
delay_max_ms = 3
)");
    std::string reference;
    for (unsigned jobs : {1u, 5u})
    {
        const auto rows = run_autocorr(sc, parallel_executor(jobs));
        REQUIRE(rows.size() == 2 * 2 * 4);
        CHECK(rows[0].model == "TDL");
        CHECK(rows[0].delay_s == 0.0);
        CHECK_THAT(rows[0].mean_amplitude, WithinAbs(1.0, 1e-12));
        CHECK_THAT(rows[0].stddev, WithinAbs(0.0, 1e-6));
        for (const auto &r : rows)
        {
            CHECK(r.mean_amplitude >= 0.0);
            CHECK(r.mean_amplitude <= 1.0 + 1e-12);
        }
        std::ostringstream os;
        write_autocorr_csv(os, rows);
        if (reference.empty())
            reference = os.str();
        CHECK(os.str() == reference);
    }
    const auto lines = csv_lines(reference);
    CHECK(lines[0] == "model,direction_deg,speed_kmh,delay_s,mean_amplitude,stddev");
    CHECK(lines[1].rfind("TDL,0.000,10.000,0.000000000,1.000000,", 0) == 0);
}

TEST_CASE("aperiodic report through the harness", "[harness]")
{
    const auto sc = parse(small_a);
    const auto sampler = make_sampler(sc.link.channel, {kmh_to_mps(30.0), 0.0, 0.0}, 3);
    const auto r = trigger_report(sc.link, sampler, sc.report, 0.025, 9);
    CHECK(r.delays == sc.report.delays);
    CHECK(parse_report(r, sc.report).samples.size() == 2);
}

TEST_CASE("file output", "[harness]")
{
    CHECK_THROWS_AS(write_file("/nonexistent-dir/out.csv", "x"), Error);
}
