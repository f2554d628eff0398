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

#include <doctest.h>

using namespace salign;

TEST_CASE("streams are reproducible and distinct")
{
    Rng a = make_stream(1, 2, 3);
    Rng b = make_stream(1, 2, 3);
    Rng c = make_stream(1, 2, 4);
    const auto x = a();
    CHECK(x == b());
    CHECK(x != c());
    Rng first = make_stream(9, 0, 0);
    Rng second = make_stream(9, 0, 0);
    const ChannelRealization h1 = draw_channel(17, first);
    const ChannelRealization h2 = draw_channel(17, second);
    CHECK(h1.taps == h2.taps);
}

TEST_CASE("tap statistics: uniform profile with unit total power")
{
    for (int taps : {1, 17}) {
        CAPTURE(taps);
        Rng rng = make_stream(21, static_cast<std::uint64_t>(taps), 0);
        constexpr int kDraws = 100000;
        double total = 0.0;
        RVec per_tap = RVec::Zero(taps);
        for (int i = 0; i < kDraws; ++i) {
            const CVec h = draw_channel(taps, rng).taps;
            total += h.squaredNorm();
            per_tap += h.cwiseAbs2();
        }
        CHECK(total / kDraws == doctest::Approx(1.0).epsilon(0.02));
        for (int k = 0; k < taps; ++k) {
            CHECK(per_tap(k) / kDraws == doctest::Approx(1.0 / taps).epsilon(0.05));
        }
    }
}

TEST_CASE("toeplitz operator layout")
{
    ChannelRealization h;
    h.taps = CVec::Ones(1);
    CHECK(toeplitz_channel(h, 5).H.isApprox(CMat::Identity(5, 5)));

    h.taps.resize(2);
    h.taps << cd(1.0, 2.0), cd(-3.0, 0.5);
    const CMat H = toeplitz_channel(h, 4).H;
    // first row carries the wrap entry, second row the plain convolution
    CHECK(H(0, 0) == h.taps(0));
    CHECK(H(0, 3) == h.taps(1));
    CHECK(H(0, 1) == cd(0.0, 0.0));
    CHECK(H(1, 0) == h.taps(1));
    CHECK(H(1, 1) == h.taps(0));
    CHECK(H(1, 3) == cd(0.0, 0.0));

    h.taps = CVec::Ones(3);
    CHECK_THROWS_AS(toeplitz_channel(h, 2), DimensionError);
}

TEST_CASE("toeplitz product equals circular convolution")
{
    Rng rng = make_stream(22, 0, 0);
    for (int trial = 0; trial < 20; ++trial) {
        const ChannelRealization h = draw_channel(17, rng);
        const ToeplitzChannel H = toeplitz_channel(h, 80);
        CVec x(80);
        for (int i = 0; i < 80; ++i) {
            x(i) = complex_gaussian(rng, 1.0);
        }
        const CVec ref = oracle::circular_convolution(h.taps, x);
        CHECK((H.H * x - ref).norm() < 1e-12 * ref.norm());
    }
}

TEST_CASE("frequency response is the unnormalized DFT of the taps")
{
    Rng rng = make_stream(23, 0, 0);
    const CVec taps = draw_channel(5, rng).taps;
    const CVec H = frequency_response(taps, 16);
    CVec padded = CVec::Zero(16);
    padded.head(5) = taps;
    const CVec ref = oracle::unitary_dft(padded) * 4.0;
    CHECK((H - ref).norm() < 1e-12);
}

TEST_CASE("noise power follows the SNR against the plain reference")
{
    const SystemConfig cfg;
    const LinearMaps maps = build_maps(cfg);
    const double ref = plain_reference_power(maps);
    CHECK(ref == doctest::Approx(53.0 / 64.0));

    ChannelRealization id;
    id.taps = CVec::Ones(1);
    const ToeplitzChannel I = toeplitz_channel(id, cfg.frame_length());
    Rng rng = make_stream(24, 0, 0);
    double noise = 0.0;
    double signal = 0.0;
    Bits bits(static_cast<std::size_t>(2 * maps.active_count()));
    for (int sym = 0; sym < 10000; ++sym) {
        for (auto& b : bits) {
            b = static_cast<std::uint8_t>(rng() & 1U);
        }
        const TimeSymbol x = ofdm_modulate(qam_modulate(bits, 4), maps);
        const TimeSymbol r = apply_channel(x, I, 0.0, ref, rng);
        noise += (r.samples - x.samples).squaredNorm();
        signal += x.samples.squaredNorm();
    }
    CHECK(noise / signal == doctest::Approx(1.0).epsilon(0.03));

    const TimeSymbol x{CVec::Ones(cfg.frame_length())};
    CHECK(apply_channel(x, I, kInf, ref, rng).samples == x.samples);
}

TEST_CASE("csi perturbation: exact at zero, calibrated MSE, same structure")
{
    Rng rng = make_stream(25, 0, 0);
    const ToeplitzChannel H = toeplitz_channel(draw_channel(17, rng), 80);
    const CsiPerturbation none = perturb_csi(H, 0.0, rng);
    CHECK(none.actual.H == H.H);

    double err = 0.0;
    double pow = 0.0;
    constexpr int kDraws = 100000;
    for (int i = 0; i < kDraws; ++i) {
        const ToeplitzChannel Hi = toeplitz_channel(draw_channel(17, rng), 80);
        const CsiPerturbation p = perturb_csi(Hi, 0.01, rng);
        err += (p.actual.taps - Hi.taps).squaredNorm();
        pow += Hi.taps.squaredNorm();
    }
    const double mse = err / pow;
    CHECK(mse >= 0.0095);
    CHECK(mse <= 0.0105);

    const CsiPerturbation p = perturb_csi(H, 0.1, rng);
    for (int r = 0; r < 80; ++r) {
        for (int c = 0; c < 80; ++c) {
            if (H.H(r, c) == cd(0.0, 0.0)) {
                CHECK(p.error.H(r, c) == cd(0.0, 0.0));
            }
        }
    }
    CHECK((p.actual.H - H.H - p.error.H).norm() < 1e-14);
    CHECK_THROWS_AS(perturb_csi(H, -1.0, rng), ConfigError);
}

TEST_CASE("average received power equals transmitted power")
{
    Rng rng = make_stream(26, 0, 0);
    double tx = 0.0;
    double rx = 0.0;
    for (int i = 0; i < 20000; ++i) {
        const ToeplitzChannel H = toeplitz_channel(draw_channel(17, rng), 80);
        CVec x(80);
        for (int k = 0; k < 80; ++k) {
            x(k) = complex_gaussian(rng, 1.0);
        }
        tx += x.squaredNorm();
        rx += (H.H * x).squaredNorm();
    }
    CHECK(rx / tx == doctest::Approx(1.0).epsilon(0.03));
}
