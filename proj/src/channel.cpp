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

#include "salign/channel.hpp"

#include <cmath>

namespace salign {

ChannelRealization draw_channel(int num_taps, Rng& rng)
{
    if (num_taps < 1) {
        throw ConfigError("channel needs at least one tap");
    }
    ChannelRealization h{CVec(num_taps)};
    const double var = 1.0 / num_taps;
    for (int k = 0; k < num_taps; ++k) {
        h.taps(k) = complex_gaussian(rng, var);
    }
    return h;
}

ToeplitzChannel toeplitz_channel(const ChannelRealization& h, int size)
{
    const auto taps = static_cast<int>(h.taps.size());
    if (taps < 1 || size < taps) {
        throw DimensionError("Toeplitz size must be at least the number of taps");
    }
    ToeplitzChannel out{h.taps, CMat::Zero(size, size)};
    for (int c = 0; c < size; ++c) {
        for (int t = 0; t < taps; ++t) {
            out.H((c + t) % size, c) = h.taps(t);
        }
    }
    return out;
}

CVec frequency_response(const CVec& taps, int N)
{
    CVec out = CVec::Zero(N);
    for (int k = 0; k < N; ++k) {
        cd acc = 0.0;
        for (Eigen::Index t = 0; t < taps.size(); ++t) {
            acc += taps(t) * std::polar(1.0, -2.0 * kPi * static_cast<double>((k * t) % N) / N);
        }
        out(k) = acc;
    }
    return out;
}

double plain_reference_power(const LinearMaps& maps)
{
    return static_cast<double>(maps.active_count()) / maps.N;
}

void add_noise(CVec& samples, double noise_variance, Rng& rng)
{
    if (noise_variance <= 0.0) {
        return;
    }
    for (auto& v : samples) {
        v += complex_gaussian(rng, noise_variance);
    }
}

TimeSymbol apply_channel(const TimeSymbol& t, const ToeplitzChannel& H, double snr_db, double reference_power,
                         Rng& rng)
{
    if (t.samples.size() != H.size()) {
        throw DimensionError("symbol length does not match the channel operator");
    }
    TimeSymbol r{H.H * t.samples};
    if (std::isfinite(snr_db)) {
        add_noise(r.samples, reference_power / from_db10(snr_db), rng);
    } else if (snr_db < 0) {
        throw ConfigError("snr_db = -inf is not meaningful");
    }
    return r;
}

CsiPerturbation perturb_csi(const ToeplitzChannel& H, double sigma_e2, Rng& rng)
{
    if (sigma_e2 < 0.0) {
        throw ConfigError("channel MSE must be non-negative");
    }
    const auto taps = static_cast<int>(H.taps.size());
    ChannelRealization e{CVec::Zero(taps)};
    if (sigma_e2 > 0.0) {
        for (int k = 0; k < taps; ++k) {
            e.taps(k) = complex_gaussian(rng, sigma_e2 / taps);
        }
    }
    ToeplitzChannel err = toeplitz_channel(e, H.size());
    ToeplitzChannel actual{H.taps + e.taps, H.H + err.H};
    return {std::move(actual), std::move(err)};
}

}  // namespace salign
