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

using namespace tdcp;
using Catch::Matchers::WithinAbs;

namespace
{
    bool has_rule(const std::vector<Violation> &v, const std::string &rule)
    {
        return std::any_of(v.begin(), v.end(), [&](const Violation &x) { return x.rule == rule; });
    }

    TrsConfig two_trs(int offset)
    {
        TrsConfig t;
        t.second_trs_offset_slots = offset;
        return t;
    }

    TdcpReportConfig cfg_of(std::vector<CorrelationDelay> d, bool phase = false)
    {
        TdcpReportConfig c;
        c.delays = std::move(d);
        c.report_phase = phase;
        return c;
    }
}

TEST_CASE("delay parsing and labels", "[codec]")
{
    CHECK(CorrelationDelay::parse("4os") == CorrelationDelay::symbols(4));
    CHECK(CorrelationDelay::parse("4 OS") == CorrelationDelay::symbols(4));
    CHECK(CorrelationDelay::parse("3 slots") == CorrelationDelay::slots(3));
    CHECK(CorrelationDelay::parse("10slot").label() == "10slot");
    CHECK_FALSE(CorrelationDelay::parse("7 slots").is_allowed());
    CHECK_FALSE(CorrelationDelay::parse("3os").is_allowed());
    CHECK_THROWS_AS(CorrelationDelay::parse("slot"), ConfigError);
    CHECK_THROWS_AS(CorrelationDelay::parse("3 ms"), ConfigError);
    // 4/14 of a 0.5 ms slot
    CHECK_THAT(CorrelationDelay::symbols(4).seconds({}), WithinAbs(0.142857e-3, 1e-9));
    CHECK(CorrelationDelay::symbols(4) < CorrelationDelay::slots(1));
    for (const auto &d : allowed_delays)
        CHECK(CorrelationDelay::from_code(d.code()) == d);
    CHECK_THROWS_AS(CorrelationDelay::from_code(7), FramingError);
    CHECK_THROWS_AS(CorrelationDelay::slots(7).code(), std::invalid_argument);
}

TEST_CASE("validate_config examples", "[codec]")
{
    const auto cap = UeCapability::most_capable();
    const auto trs = two_trs(2);
    CHECK(validate_config(cfg_of({CorrelationDelay::symbols(4), CorrelationDelay::slots(1), CorrelationDelay::slots(2)}), cap, trs).empty());

    auto five = cfg_of({CorrelationDelay::symbols(4), CorrelationDelay::slots(1), CorrelationDelay::slots(2),
                        CorrelationDelay::slots(3), CorrelationDelay::slots(4)});
    CHECK(has_rule(validate_config(five, cap, trs), "max four delays"));

    CHECK(has_rule(validate_config(cfg_of({CorrelationDelay::parse("7 slots")}), cap, trs), "delay not in allowed set"));

    UeCapability small = cap;
    small.max_delay = CorrelationDelay::slots(1);
    CHECK(has_rule(validate_config(cfg_of({CorrelationDelay::slots(2)}), small, trs), "exceeds UE capability"));

    CHECK(has_rule(validate_config(cfg_of({}), cap, trs), "at least one delay"));
    CHECK(has_rule(validate_config(cfg_of({CorrelationDelay::slots(2), CorrelationDelay::slots(1)}), cap, trs), "delays ascending"));
    CHECK(has_rule(validate_config(cfg_of({CorrelationDelay::slots(1), CorrelationDelay::slots(1)}), cap, trs), "delays distinct"));
    CHECK(has_rule(validate_config(cfg_of({CorrelationDelay::slots(1)}, true), UeCapability::least_capable(), trs),
                   "phase not supported by UE"));
    UeCapability one = cap;
    one.max_num_delays = 1;
    CHECK(has_rule(validate_config(cfg_of({CorrelationDelay::slots(1), CorrelationDelay::slots(2)}), one, trs),
                   "exceeds UE delay count capability"));
    auto bits = cfg_of({CorrelationDelay::slots(1)});
    bits.amplitude_bits = 0;
    CHECK(has_rule(validate_config(bits, cap, trs), "amplitude bits in 1..16"));
    TrsConfig bad;
    bad.comb_offset = 9;
    CHECK(has_rule(validate_config(cfg_of({CorrelationDelay::slots(1)}), cap, bad), "valid TRS configuration"));
}

TEST_CASE("delays longer than one slot need a matching second TRS", "[codec]")
{
    const auto cap = UeCapability::most_capable();
    const TrsConfig single;
    CHECK(validate_config(cfg_of({CorrelationDelay::symbols(4), CorrelationDelay::slots(1)}), cap, single).empty());
    for (int n : {2, 3, 4, 5, 6, 10})
    {
        CAPTURE(n);
        const auto d = CorrelationDelay::slots(n);
        CHECK(has_rule(validate_config(cfg_of({d}), cap, single), "delay realizable by TRS"));
        CHECK(validate_config(cfg_of({d}), cap, two_trs(n)).empty());
        CHECK(delay_realizable(d, two_trs(n)));
    }
    // offset 3: first burst slots {0,1}, second {3,4} give pairs at 1..4 slots, not 5 or more
    CHECK(delay_realizable(CorrelationDelay::slots(2), two_trs(3)));
    CHECK(delay_realizable(CorrelationDelay::slots(4), two_trs(3)));
    CHECK_FALSE(delay_realizable(CorrelationDelay::slots(5), two_trs(3)));
    CHECK_FALSE(delay_realizable(CorrelationDelay::slots(10), two_trs(3)));
}

TEST_CASE("validate_config is monotone in the delay list", "[codec][property]")
{
    Rng rng(5);
    std::vector<CorrelationDelay> pool(std::begin(allowed_delays), std::end(allowed_delays));
    pool.push_back(CorrelationDelay::slots(7));
    pool.push_back(CorrelationDelay::symbols(2));
    const std::vector<std::optional<int>> offsets{std::nullopt, 2, 3, 5, 10};
    for (int trial = 0; trial < 500; ++trial)
    {
        TrsConfig trs;
        trs.second_trs_offset_slots = offsets[static_cast<std::size_t>(rng.uniform() * offsets.size())];
        UeCapability cap;
        cap.max_delay = allowed_delays[static_cast<std::size_t>(rng.uniform() * 8)];
        cap.max_num_delays = 1 + static_cast<int>(rng.uniform() * 4);
        cap.phase_supported = rng.uniform() < 0.5;
        auto cfg = cfg_of({}, rng.uniform() < 0.5);
        auto before = validate_config(cfg, cap, trs);
        for (int k = 0; k < 6; ++k)
        {
            cfg.delays.push_back(pool[static_cast<std::size_t>(rng.uniform() * pool.size())]);
            const auto after = validate_config(cfg, cap, trs);
            for (const auto &v : before)
            {
                // "at least one delay" is the only rule satisfied by adding a delay
                if (v.rule == "at least one delay")
                    continue;
                INFO(v.rule << ": " << v.detail);
                CHECK(has_rule(after, v.rule));
            }
            before = after;
        }
    }
}

TEST_CASE("amplitude quantizer", "[codec]")
{
    const AmplitudeQuantizer q{7};
    CHECK(q.levels() == 128);
    CHECK(q.quantize(0.0) == 0);
    CHECK(q.quantize(1.0) == 127);
    CHECK(std::abs(q.dequantize(q.quantize(1.0)) - 1.0) <= q.step() / 2);
    CHECK_THROWS_AS(q.quantize(1.0 + 1e-12), std::invalid_argument);
    CHECK_THROWS_AS(q.quantize(-1e-12), std::invalid_argument);
    CHECK_THROWS_AS(q.quantize(std::nan("")), std::invalid_argument);
    CHECK_THROWS_AS(q.dequantize(128), std::invalid_argument);
    Rng rng(6);
    for (int i = 0; i < 20000; ++i)
    {
        const double c = rng.uniform();
        REQUIRE(std::abs(q.dequantize(q.quantize(c)) - c) <= std::ldexp(1.0, -8) + 1e-15);
    }
    for (int bits = 1; bits <= 16; ++bits)
    {
        const AmplitudeQuantizer qb{bits};
        for (std::uint32_t k = 0; k < qb.levels(); k += std::max(1u, qb.levels() / 512))
            REQUIRE(qb.quantize(qb.dequantize(k)) == k);
    }
}

TEST_CASE("phase quantizer", "[codec]")
{
    const PhaseQuantizer q{6};
    CHECK(q.levels() == 64);
    const auto a = q.quantize(-pi + 1e-9), b = q.quantize(pi);
    const auto gap = std::min((a - b + 64) % 64, (b - a + 64) % 64);
    CHECK(gap <= 1);
    CHECK(q.quantize(0.0) == 0);
    CHECK(q.quantize(2.0 * pi + 0.1) == q.quantize(0.1));
    CHECK_THROWS_AS(q.quantize(std::numeric_limits<double>::infinity()), std::invalid_argument);
    Rng rng(7);
    for (int i = 0; i < 20000; ++i)
    {
        const double p = rng.uniform(-pi, pi);
        REQUIRE(std::abs(wrap_phase(q.dequantize(q.quantize(p)) - p)) <= q.step() / 2 + 1e-12);
    }
    for (int bits = 1; bits <= 16; ++bits)
    {
        const PhaseQuantizer qb{bits};
        for (std::uint32_t k = 0; k < qb.levels(); k += std::max(1u, qb.levels() / 512))
            REQUIRE(qb.quantize(qb.dequantize(k)) == k);
    }
}

TEST_CASE("build and parse reports", "[codec]")
{
    auto cfg = cfg_of({CorrelationDelay::slots(1)});
    const std::vector<double> half{0.5};
    auto r = build_report(cfg, half, std::nullopt, 0.02);
    CHECK_FALSE(r.phase_index.has_value());
    auto d = parse_report(r, cfg);
    REQUIRE(d.samples.size() == 1);
    CHECK(std::abs(d.samples[0].amplitude - 0.5) <= 1.0 / 256);
    CHECK_FALSE(d.samples[0].phase.has_value());
    CHECK_THAT(d.samples[0].delay, WithinAbs(0.5e-3, 1e-15));
    CHECK(d.measurement_time == 0.02);

    const std::vector<double> two{0.5, 0.6};
    CHECK_THROWS_AS(build_report(cfg, two, std::nullopt, 0.0), std::invalid_argument);
    const std::vector<double> ph{0.3};
    CHECK_THROWS_AS(build_report(cfg, half, std::span<const double>(ph), 0.0), std::invalid_argument);

    auto pcfg = cfg_of({CorrelationDelay::slots(1)}, true);
    CHECK_THROWS_AS(build_report(pcfg, half, std::nullopt, 0.0), std::invalid_argument);
    auto pr = build_report(pcfg, half, std::span<const double>(ph), 0.0);
    REQUIRE(pr.phase_index.has_value());
    auto pd = parse_report(pr, pcfg);
    CHECK(std::abs(*pd.samples[0].phase - 0.3) <= pi / 64 + 1e-12);
    CHECK_THROWS_AS(parse_report(pr, cfg), FramingError);
    CHECK_THROWS_AS(parse_report(r, pcfg), FramingError);
    CHECK_THROWS_AS(parse_report(r, cfg_of({CorrelationDelay::slots(2)})), FramingError);
}

TEST_CASE("byte layout", "[codec]")
{
    auto cfg = cfg_of({CorrelationDelay::symbols(4), CorrelationDelay::slots(10)}, true);
    const std::vector<double> amp{1.0, 0.0};
    const std::vector<double> ph{0.0, -pi / 2};
    const auto r = build_report(cfg, amp, std::span<const double>(ph), 1.5e-3);
    const auto bytes = serialize_report(r);
    const std::vector<std::uint8_t> expected{
        1, 1, 7, 6, 2,
        0, 0, 0, 0, 0, 0x16, 0xE3, 0x60, // 1 500 000 ns
        0, 0, 127, 0, 0,
        10, 0, 0, 0, 48};
    CHECK(bytes == expected);
    const auto back = deserialize_report(bytes);
    CHECK(back.delays == r.delays);
    CHECK(back.amplitude_index == r.amplitude_index);
    CHECK(back.phase_index == r.phase_index);
    CHECK(back.measurement_time == 1.5e-3);
    CHECK(serialize_report(back) == bytes);
}

TEST_CASE("deserialization rejects malformed input", "[codec]")
{
    auto cfg = cfg_of({CorrelationDelay::slots(1)});
    const std::vector<double> amp{0.9};
    const auto good = serialize_report(build_report(cfg, amp, std::nullopt, 0.0));
    CHECK_NOTHROW(deserialize_report(good));
    auto mutate = [&](std::size_t i, std::uint8_t v) {
        auto b = good;
        b[i] = v;
        return b;
    };
    CHECK_THROWS_AS(deserialize_report(std::vector<std::uint8_t>(good.begin(), good.end() - 1)), FramingError);
    CHECK_THROWS_AS(deserialize_report(std::vector<std::uint8_t>(good.begin(), good.begin() + 5)), FramingError);
    auto longer = good;
    longer.push_back(0);
    CHECK_THROWS_AS(deserialize_report(longer), FramingError);
    CHECK_THROWS_AS(deserialize_report(mutate(0, 2)), FramingError);
    CHECK_THROWS_AS(deserialize_report(mutate(1, 2)), FramingError);
    CHECK_THROWS_AS(deserialize_report(mutate(2, 0)), FramingError);
    CHECK_THROWS_AS(deserialize_report(mutate(3, 6)), FramingError);
    CHECK_THROWS_AS(deserialize_report(mutate(4, 5)), FramingError);
    CHECK_THROWS_AS(deserialize_report(mutate(13, 7)), FramingError);
    CHECK_THROWS_AS(deserialize_report(mutate(14, 1)), FramingError); // index 256+ with 7 bits
}

TEST_CASE("serialization round trip over random reports", "[codec][property]")
{
    Rng rng(9);
    for (int trial = 0; trial < 2000; ++trial)
    {
        TdcpReport r;
        const auto k = 1 + static_cast<std::size_t>(rng.uniform() * 4);
        for (std::size_t i = 0; i < k; ++i)
            r.delays.push_back(allowed_delays[static_cast<std::size_t>(rng.uniform() * 8)]);
        r.amplitude_bits = 1 + static_cast<int>(rng.uniform() * 16);
        for (std::size_t i = 0; i < k; ++i)
            r.amplitude_index.push_back(static_cast<std::uint32_t>(rng.uniform() * (1u << r.amplitude_bits)));
        if (rng.uniform() < 0.5)
        {
            r.phase_bits = 1 + static_cast<int>(rng.uniform() * 16);
            r.phase_index.emplace();
            for (std::size_t i = 0; i < k; ++i)
                r.phase_index->push_back(static_cast<std::uint32_t>(rng.uniform() * (1u << r.phase_bits)));
        }
        r.measurement_time = std::round(rng.uniform(0.0, 100.0) * 1e9) * 1e-9;
        const auto b = serialize_report(r);
        const auto back = deserialize_report(b);
        REQUIRE(back.delays == r.delays);
        REQUIRE(back.amplitude_index == r.amplitude_index);
        REQUIRE(back.phase_index == r.phase_index);
        REQUIRE(back.amplitude_bits == r.amplitude_bits);
        if (r.phase_index)
            REQUIRE(back.phase_bits == r.phase_bits);
        REQUIRE(back.measurement_time == r.measurement_time);
    }
}

TEST_CASE("aperiodic trigger measures the preceding period", "[codec][trigger]")
{
    LinkScenario sc;
    sc.channel.kind = ChannelModelConfig::Kind::tdl;
    sc.channel.tx = AntennaArray{1, 1, 1};
    sc.trs.second_trs_offset_slots = 3;
    sc.trs_snr_db = 30.0;
    const auto sampler = make_sampler(sc.channel, {kmh_to_mps(30.0), 0.0, 0.0}, 11);
    auto cfg = cfg_of({CorrelationDelay::symbols(4), CorrelationDelay::slots(3)}, true);
    const auto r = trigger_report(sc, sampler, cfg, 0.03, 1);
    CHECK(r.measurement_time == 0.03);
    const auto d = parse_report(r, cfg);
    REQUIRE(d.samples.size() == 2);
    CHECK(d.samples[0].amplitude >= d.samples[1].amplitude - 1.0 / 128);
    CHECK(d.samples[1].amplitude < 1.0);
    const auto again = trigger_report(sc, sampler, cfg, 0.03, 1);
    CHECK(serialize_report(again) == serialize_report(r));
    // nothing transmitted before the first burst completes
    CHECK_THROWS_AS(trigger_report(sc, sampler, cfg, 1e-4, 1), Error);
}
