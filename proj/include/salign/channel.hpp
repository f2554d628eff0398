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

#pragma once

// Rayleigh multipath, the circulant channel operator, AWGN and CSI errors.

#include "salign/ofdm.hpp"
#include "salign/types.hpp"

namespace salign {

struct ChannelRealization {
    CVec taps;  // h_0 .. h_l
};

// (N+L) x (N+L) convolution operator with the wrap-around corner entries,
// i.e. H(r, c) = h[(r - c) mod size] for (r - c) mod size <= l.
struct ToeplitzChannel {
    CVec taps;
    CMat H;

    int size() const { return static_cast<int>(H.rows()); }
};

// Taps i.i.d. CN(0, 1/num_taps) (uniform power delay profile).
ChannelRealization draw_channel(int num_taps, Rng& rng);

ToeplitzChannel toeplitz_channel(const ChannelRealization& h, int size);

// Unnormalized N-point DFT of the zero-padded taps; the per-bin gain seen by
// a CP-OFDM receiver.
CVec frequency_response(const CVec& taps, int N);

// Mean per-sample power of plain OFDM under a unitary DFT: N_d / N.
double plain_reference_power(const LinearMaps& maps);

// r = H t + n, n ~ CN(0, sigma^2 I), sigma^2 = reference_power / 10^(snr_db/10).
// snr_db = +inf disables the noise.
TimeSymbol apply_channel(const TimeSymbol& t, const ToeplitzChannel& H, double snr_db, double reference_power,
                         Rng& rng);

// Adds white noise only (used when the propagation has already been applied).
void add_noise(CVec& samples, double noise_variance, Rng& rng);

struct CsiPerturbation {
    ToeplitzChannel actual;  // H_hat = H + E
    ToeplitzChannel error;   // E, same circulant structure as H
};

// Error taps are i.i.d. CN(0, sigma_e2 / (l+1)) so that
// E|h_hat - h|^2 / E|h|^2 = sigma_e2 under the uniform profile.
CsiPerturbation perturb_csi(const ToeplitzChannel& H, double sigma_e2, Rng& rng);

}  // namespace salign
