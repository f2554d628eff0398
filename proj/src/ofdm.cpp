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

#include "salign/ofdm.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace salign {

namespace {

void require(bool ok, const std::string& what)
{
    if (!ok) {
        throw ConfigError(what);
    }
}

std::uint32_t gray_to_binary(std::uint32_t g)
{
    for (std::uint32_t shift = 1; shift < 32; shift <<= 1) {
        g ^= g >> shift;
    }
    return g;
}

std::uint32_t binary_to_gray(std::uint32_t b) { return b ^ (b >> 1); }

struct SquareQam {
    int bits_per_axis;
    int levels;
    double scale;  // multiplies integer PAM levels to reach unit energy

    explicit SquareQam(int order)
        : bits_per_axis(bits_per_symbol(order) / 2),
          levels(1 << bits_per_axis),
          scale(1.0 / std::sqrt(2.0 * (order - 1) / 3.0))
    {
    }

    // Gray label -> PAM amplitude. Label 0 maps to the largest positive level.
    double amplitude(std::uint32_t label) const
    {
        const auto index = static_cast<int>(gray_to_binary(label));
        return scale * static_cast<double>((levels - 1) - 2 * index);
    }

    std::uint32_t label(double y) const
    {
        const double pos = ((levels - 1) - y / scale) / 2.0;
        const int index = std::clamp(static_cast<int>(std::lround(pos)), 0, levels - 1);
        return binary_to_gray(static_cast<std::uint32_t>(index));
    }
};

}  // namespace

void SystemConfig::validate() const
{
    require(N >= 2, "N must be at least 2");
    require(L >= 1 && L < N, "CP length must satisfy 0 < L < N");
    require(notch_width > 0, "notch width K must be positive");
    require(notch_start >= 0, "notch start must be non-negative");
    require(notch_start + notch_width <= N - 1, "notch band exceeds the subcarrier range (i+K <= N-1)");
    require(active_count() > 0, "no active subcarriers left");
    require(zeta >= 1, "zeta must be >= 1");
    require(mod_order == 4 || mod_order == 16 || mod_order == 64, "modulation order must be 4, 16 or 64");
    require(alpha >= 0.0, "alpha must be non-negative");
    require(lambda >= 0.0 && lambda <= 1.0, "lambda must lie in [0, 1]");
    require(R >= 0 && 2 * R < L, "sync reservation must satisfy 0 <= R < L/2");
    require(guard_bins >= 0, "guard_bins must be non-negative");
    require(num_taps >= 1 && num_taps <= L + 1, "channel taps must satisfy 1 <= l+1 <= L+1");
}

LinearMaps build_maps(const SystemConfig& cfg)
{
    cfg.validate();
    const int N = cfg.N;
    const int L = cfg.L;

    LinearMaps maps;
    maps.N = N;
    maps.L = L;
    for (int k = 0; k < N; ++k) {
        const bool in_notch = k >= cfg.notch_start + 1 && k <= cfg.notch_start + cfg.notch_width;
        const bool is_dc = k == 0 && cfg.dc_disabled;
        if (!in_notch && !is_dc) {
            maps.active.push_back(k);
        }
    }
    const int Nd = maps.active_count();

    maps.M = RMat::Zero(N, Nd);
    for (int c = 0; c < Nd; ++c) {
        maps.M(maps.active[c], c) = 1.0;
    }

    maps.A = RMat::Zero(N + L, N);
    maps.A.topRightCorner(L, L).setIdentity();
    maps.A.bottomRows(N).setIdentity();

    maps.B = RMat::Zero(N, N + L);
    maps.B.rightCols(N).setIdentity();

    maps.F.resize(N, N);
    const double norm = 1.0 / std::sqrt(static_cast<double>(N));
    for (int r = 0; r < N; ++r) {
        for (int c = 0; c < N; ++c) {
            // Reduce the exponent modulo N before the trig call to keep entries exact-ish.
            const double phase = -2.0 * kPi * static_cast<double>((r * c) % N) / N;
            maps.F(r, c) = std::polar(norm, phase);
        }
    }

    maps.modulator = maps.A.cast<cd>() * maps.F.adjoint() * maps.M.cast<cd>();
    return maps;
}

int bits_per_symbol(int order)
{
    switch (order) {
    case 4: return 2;
    case 16: return 4;
    case 64: return 6;
    default: throw ConfigError("unsupported QAM order " + std::to_string(order));
    }
}

QamVector qam_modulate(const Bits& bits, int order)
{
    const SquareQam qam(order);
    const int bps = 2 * qam.bits_per_axis;
    if (bits.size() % static_cast<std::size_t>(bps) != 0) {
        throw DimensionError("bit count is not a multiple of log2(order)");
    }
    const auto count = static_cast<Eigen::Index>(bits.size() / bps);
    QamVector out{CVec(count)};
    for (Eigen::Index n = 0; n < count; ++n) {
        std::uint32_t li = 0;
        std::uint32_t lq = 0;
        const std::size_t base = static_cast<std::size_t>(n) * bps;
        for (int b = 0; b < qam.bits_per_axis; ++b) {
            li = (li << 1) | (bits[base + b] & 1U);
            lq = (lq << 1) | (bits[base + qam.bits_per_axis + b] & 1U);
        }
        out.symbols(n) = cd(qam.amplitude(li), qam.amplitude(lq));
    }
    return out;
}

Bits qam_demodulate(const QamVector& symbols, int order)
{
    const SquareQam qam(order);
    Bits out;
    out.reserve(static_cast<std::size_t>(symbols.symbols.size()) * 2 * qam.bits_per_axis);
    for (const cd& y : symbols.symbols) {
        const std::uint32_t li = qam.label(y.real());
        const std::uint32_t lq = qam.label(y.imag());
        for (int b = qam.bits_per_axis - 1; b >= 0; --b) {
            out.push_back(static_cast<std::uint8_t>((li >> b) & 1U));
        }
        for (int b = qam.bits_per_axis - 1; b >= 0; --b) {
            out.push_back(static_cast<std::uint8_t>((lq >> b) & 1U));
        }
    }
    return out;
}

TimeSymbol ofdm_modulate(const QamVector& d, const LinearMaps& maps)
{
    if (d.symbols.size() != maps.active_count()) {
        throw DimensionError("data vector length does not match the active subcarrier count");
    }
    return TimeSymbol{maps.modulator * d.symbols};
}

Demodulated ofdm_demodulate(const TimeSymbol& received, const LinearMaps& maps, const CVec& h_freq,
                            double singular_tol)
{
    if (received.samples.size() != maps.frame_length()) {
        throw DimensionError("received symbol must have N+L samples");
    }
    if (h_freq.size() != maps.N) {
        throw DimensionError("channel frequency response must have N entries");
    }
    const CVec bins = maps.F * received.samples.tail(maps.N);
    Demodulated out;
    out.data.symbols.resize(maps.active_count());
    for (int c = 0; c < maps.active_count(); ++c) {
        const int k = maps.active[c];
        if (std::abs(h_freq(k)) < singular_tol) {
            out.equalization_singular = true;
            out.data.symbols(c) = 0.0;
        } else {
            out.data.symbols(c) = bins(k) / h_freq(k);
        }
    }
    return out;
}

}  // namespace salign
