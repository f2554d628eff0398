// SPDX-License-Identifier: Apache-2.0
//
// salign: suppressing-alignment OFDM waveform shaping
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


#include "oracles.hpp"
#include "salign/channel.hpp"
#include "salign/ofdm.hpp"

#include <doctest.h>

using namespace salign;

namespace {

QamVector random_qam(int count, int order, Rng& rng)
{
    Bits bits(static_cast<std::size_t>(count * bits_per_symbol(order)));
    std::bernoulli_distribution coin(0.5);
    for (auto& b : bits) {
        b = coin(rng) ? 1 : 0;
    }
    return qam_modulate(bits, order);
}

}  // namespace

TEST_CASE("config validation")
{
    SystemConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    CHECK(cfg.active_count() == 53);

    auto bad = [](auto mutate) {
        SystemConfig c;
        mutate(c);
        CHECK_THROWS_AS(c.validate(), ConfigError);
    };
    bad([](SystemConfig& c) { c.L = 0; });
    bad([](SystemConfig& c) { c.notch_start = 60; });
    bad([](SystemConfig& c) { c.mod_order = 8; });
    bad([](SystemConfig& c) { c.lambda = 1.5; });
    bad([](SystemConfig& c) { c.R = 8; });
    bad([](SystemConfig& c) { c.num_taps = 18; });
    bad([](SystemConfig& c) { c.alpha = -0.1; });
}

TEST_CASE("linear maps: selection, CP insertion and removal")
{
    const SystemConfig cfg;
    const LinearMaps maps = build_maps(cfg);
    REQUIRE(maps.active_count() == 53);
    CHECK(maps.active.front() == 1);
    CHECK(std::find(maps.active.begin(), maps.active.end(), 21) == maps.active.end());
    CHECK(std::find(maps.active.begin(), maps.active.end(), 30) == maps.active.end());
    CHECK(std::find(maps.active.begin(), maps.active.end(), 31) != maps.active.end());

    CHECK((maps.M.transpose() * maps.M - RMat::Identity(53, 53)).norm() < 1e-14);
    CHECK((maps.B * maps.A - RMat::Identity(64, 64)).norm() < 1e-14);
    CHECK((maps.F * maps.F.adjoint() - CMat::Identity(64, 64)).norm() < 1e-12);
    CHECK(maps.modulator.rows() == 80);
    CHECK(maps.modulator.cols() == 53);
}

TEST_CASE("modulation matches a hand-built IDFT frame")
{
    const SystemConfig cfg;
    const LinearMaps maps = build_maps(cfg);
    Rng rng = make_stream(11, 1, 0);
    for (int trial = 0; trial < 5; ++trial) {
        const QamVector d = random_qam(maps.active_count(), 4, rng);
        const TimeSymbol x = ofdm_modulate(d, maps);
        const CVec ref = oracle::ofdm_frame(d.symbols, maps.active, cfg.N, cfg.L);
        CHECK((x.samples - ref).norm() < 1e-12 * ref.norm());
        // the CP is a copy of the tail
        CHECK((x.samples.head(cfg.L) - x.samples.tail(cfg.L)).norm() < 1e-13);
    }
}

TEST_CASE("qam: unit energy, Gray labelling, round trip")
{
    for (int order : {4, 16, 64}) {
        CAPTURE(order);
        const int k = bits_per_symbol(order);
        // every constellation point once
        Bits bits;
        for (int p = 0; p < order; ++p) {
            for (int b = k - 1; b >= 0; --b) {
                bits.push_back(static_cast<std::uint8_t>((p >> b) & 1));
            }
        }
        const QamVector q = qam_modulate(bits, order);
        CHECK(q.symbols.squaredNorm() / order == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(qam_demodulate(q, order) == bits);

        // nearest neighbours differ in exactly one bit
        double dmin = kInf;
        for (int a = 0; a < order; ++a) {
            for (int b = a + 1; b < order; ++b) {
                dmin = std::min(dmin, std::abs(q.symbols(a) - q.symbols(b)));
            }
        }
        for (int a = 0; a < order; ++a) {
            for (int b = a + 1; b < order; ++b) {
                if (std::abs(q.symbols(a) - q.symbols(b)) < dmin * (1.0 + 1e-9)) {
                    CHECK(__builtin_popcount(static_cast<unsigned>(a ^ b)) == 1);
                }
            }
        }
    }
    CHECK_THROWS_AS(bits_per_symbol(8), ConfigError);
}

TEST_CASE("noiseless round trip through a multipath channel")
{
    const SystemConfig cfg;
    const LinearMaps maps = build_maps(cfg);
    Rng rng = make_stream(12, 1, 0);
    for (int trial = 0; trial < 10; ++trial) {
        const QamVector d = random_qam(maps.active_count(), 16, rng);
        const TimeSymbol x = ofdm_modulate(d, maps);
        const ToeplitzChannel H = toeplitz_channel(draw_channel(cfg.num_taps, rng), cfg.frame_length());
        const TimeSymbol r = apply_channel(x, H, kInf, 1.0, rng);
        const Demodulated dem = ofdm_demodulate(r, maps, frequency_response(H.taps, cfg.N));
        CHECK_FALSE(dem.equalization_singular);
        CHECK((dem.data.symbols - d.symbols).norm() < 1e-9 * d.symbols.norm());
    }
}

TEST_CASE("a dead bin is flagged, not divided by")
{
    SystemConfig cfg;
    cfg.N = 8;
    cfg.L = 2;
    cfg.notch_start = 2;
    cfg.notch_width = 2;
    cfg.num_taps = 2;
    const LinearMaps maps = build_maps(cfg);
    CVec h_freq = CVec::Ones(cfg.N);
    h_freq(maps.active[0]) = 0.0;
    const Demodulated dem = ofdm_demodulate(TimeSymbol{CVec::Ones(cfg.frame_length())}, maps, h_freq);
    CHECK(dem.equalization_singular);
    CHECK(dem.data.symbols(0) == cd(0.0, 0.0));
    CHECK(dem.data.symbols.allFinite());
}
