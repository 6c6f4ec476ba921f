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

#include "tdcp/trs_grid.hpp"

#include <catch_amalgamated.hpp>

using namespace tdcp;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace
{
    double slot() { return Numerology{}.slot_duration(); }

    ChannelSampler flat_static()
    {
        const std::vector<RaySpec> rays{{0.0, 0.0, 1.0, 0.0}};
        return make_from_rays(rays);
    }
}

TEST_CASE("numerology at 30 kHz", "[trs]")
{
    const Numerology num;
    CHECK_THAT(num.slot_duration(), WithinAbs(0.5e-3, 1e-15));
    CHECK_THAT(4.0 * num.symbol_duration(), WithinAbs(0.142857e-3, 1e-9));
    CHECK_THROWS_AS((Numerology{30e3, 12}.validate()), ConfigError);
}

TEST_CASE("default TRS gives four occasions per period", "[trs]")
{
    const TrsConfig cfg;
    const auto occ = trs_occasions(cfg, 0.0, 40 * slot());
    REQUIRE(occ.size() == 4);
    CHECK(occ[0].slot == 0);
    CHECK(occ[0].symbol == 4);
    CHECK(occ[1].symbol == 8);
    CHECK(occ[2].slot == 1);
    CHECK(occ[3].slot == 1);
    CHECK(occ[0].subcarrier_indices.size() == 273 * 12 / 4);
    CHECK(occ[0].subcarrier_indices[1] - occ[0].subcarrier_indices[0] == 4);
    for (std::size_t i = 1; i < occ.size(); ++i)
        CHECK(occ[i].absolute_time > occ[i - 1].absolute_time);
}

TEST_CASE("occasion count scales with the window", "[trs]")
{
    TrsConfig cfg;
    for (int periods : {1, 3, 10})
    {
        const double window = periods * cfg.burst_periodicity_slots * slot();
        CHECK(trs_occasions(cfg, 0.0, window).size() == static_cast<std::size_t>(periods * cfg.symbols_per_burst()));
        cfg.second_trs_offset_slots = 3;
        CHECK(trs_occasions(cfg, 0.0, window).size() == static_cast<std::size_t>(2 * periods * cfg.symbols_per_burst()));
        cfg.second_trs_period_multiple = 2;
        const auto occ = trs_occasions(cfg, 0.0, window);
        CHECK(occ.size() == static_cast<std::size_t>(periods * cfg.symbols_per_burst() + (periods + 1) / 2 * cfg.symbols_per_burst()));
        cfg.second_trs_offset_slots.reset();
        cfg.second_trs_period_multiple = 1;
    }
    CHECK(trs_occasions(cfg, 1.0, 1.0).empty());
    // windows not starting at zero
    CHECK(trs_occasions(cfg, 20 * slot(), 60 * slot()).size() == 4);
    CHECK(trs_occasions(cfg, (40 + 5.0 / 14.0) * slot(), 80 * slot()).size() == 3);
}

TEST_CASE("TRS configuration validation", "[trs]")
{
    TrsConfig cfg;
    CHECK(cfg.check().empty());
    cfg.second_trs_offset_slots = 7;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg.second_trs_offset_slots = 1;
    CHECK_FALSE(cfg.check().empty());
    cfg = {};
    cfg.symbol_positions = {4, 9};
    CHECK_FALSE(cfg.check().empty());
    cfg = {};
    cfg.comb_offset = 4;
    CHECK_FALSE(cfg.check().empty());
    cfg = {};
    cfg.slots_per_burst = 3;
    CHECK_FALSE(cfg.check().empty());
    cfg = {};
    cfg.burst_periodicity_slots = 10;
    cfg.second_trs_offset_slots = 10;
    CHECK_FALSE(cfg.check().empty());
    for (int off : second_trs_offsets)
    {
        TrsConfig ok;
        ok.second_trs_offset_slots = off;
        CHECK(ok.check().empty());
    }
}

TEST_CASE("snapshot pairs follow the configured spacings", "[trs]")
{
    TrsConfig cfg;
    const double tol = default_pair_tolerance(cfg.numerology);
    const auto occ = trs_occasions(cfg, 0.0, 40 * slot());
    CHECK(snapshot_pairs(occ, 4 * cfg.numerology.symbol_duration(), tol).size() == 2);
    CHECK(snapshot_pairs(occ, slot(), tol).size() == 2);
    CHECK(snapshot_pairs(occ, 3 * slot(), tol).empty());

    cfg.second_trs_offset_slots = 3;
    const auto occ2 = trs_occasions(cfg, 0.0, 40 * slot());
    const auto p3 = snapshot_pairs(occ2, 3 * slot(), tol);
    REQUIRE(p3.size() == 4);
    for (auto [i, j] : p3)
    {
        CHECK(occ2[i].trs_index == 0);
        CHECK(occ2[j].trs_index == 1);
        CHECK_THAT(occ2[j].absolute_time - occ2[i].absolute_time, WithinAbs(3 * slot(), 1e-12));
    }
    // a 2-slot spacing also appears between the second slot of the first burst and the second TRS
    CHECK(snapshot_pairs(occ2, 2 * slot(), tol).size() == 2);
}

TEST_CASE("snapshot pairs do not depend on input order", "[trs]")
{
    TrsConfig cfg;
    cfg.second_trs_offset_slots = 5;
    const auto occ = trs_occasions(cfg, 0.0, 120 * slot());
    auto rev = occ;
    std::reverse(rev.begin(), rev.end());
    for (double d : {slot(), 5 * slot(), 4 * slot()})
    {
        const auto a = snapshot_pairs(occ, d, default_pair_tolerance(cfg.numerology));
        const auto b = snapshot_pairs(rev, d, default_pair_tolerance(cfg.numerology));
        REQUIRE(a.size() == b.size());
        const std::size_t n = occ.size();
        for (std::size_t k = 0; k < a.size(); ++k)
        {
            CHECK(a[k].first == n - 1 - b[k].first);
            CHECK(a[k].second == n - 1 - b[k].second);
        }
    }
    CHECK_THROWS_AS(snapshot_pairs(occ, slot(), -1.0), std::invalid_argument);
}

TEST_CASE("observe adds noise of the configured variance", "[trs]")
{
    const auto s = flat_static();
    TrsConfig cfg;
    const auto occ = trs_occasions(cfg, 0.0, 400 * slot());
    double err = 0.0;
    std::size_t n = 0;
    for (const auto &o : occ)
    {
        const auto snap = observe(s, o, 10.0, 77);
        CHECK(snap.noise_variance == 0.1);
        for (Eigen::Index k = 0; k < snap.estimates.rows(); ++k)
            err += std::norm(snap.estimates(k, 0) - 1.0);
        n += static_cast<std::size_t>(snap.estimates.rows());
    }
    REQUIRE(n >= 10000);
    CHECK_THAT(err / static_cast<double>(n), WithinRel(0.1, 0.05));
}

TEST_CASE("observe is deterministic and exact without noise", "[trs]")
{
    const auto s = flat_static();
    const auto occ = trs_occasions(TrsConfig{}, 0.0, 40 * slot());
    const auto a = observe(s, occ[0], 0.0, 5);
    const auto b = observe(s, occ[0], 0.0, 5);
    const auto c = observe(s, occ[1], 0.0, 5);
    CHECK(a.estimates == b.estimates);
    CHECK((a.estimates - c.estimates).norm() > 0.0);
    const auto clean = observe(s, occ[0], std::numeric_limits<double>::infinity(), 5);
    CHECK((clean.estimates.array() - Complex(1.0)).abs().maxCoeff() < 1e-12);
    CHECK(clean.noise_variance == 0.0);
    CHECK_THROWS_AS(observe(s, occ[0], 10.0, 5, 1), std::invalid_argument);
}

TEST_CASE("frequency smoothing reduces the noise variance", "[trs]")
{
    const auto s = flat_static();
    const auto occ = trs_occasions(TrsConfig{}, 0.0, 40 * slot());
    const auto raw = observe(s, occ[0], 0.0, 9);
    const auto smooth = observe(s, occ[0], 0.0, 9, 0, {5});
    CHECK_THAT(smooth.noise_variance, WithinAbs(raw.noise_variance / 5.0, 1e-15));
    const double e_raw = (raw.estimates.array() - Complex(1.0)).abs2().mean();
    const double e_smooth = (smooth.estimates.array() - Complex(1.0)).abs2().mean();
    CHECK(e_smooth < 0.4 * e_raw);
    CHECK_THROWS_AS(observe(s, occ[0], 0.0, 9, 0, {4}), std::invalid_argument);
}
