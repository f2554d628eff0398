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

// OFDM symbol construction and reception.
//
// Subcarriers use DFT-bin order: index 0 is DC, 1..N-1 follow. The notch
// occupies bins {notch_start+1, ..., notch_start+notch_width}. All matrices
// are dense; the DFT is unitary (1/sqrt(N)).

#include "salign/types.hpp"

#include <cstdint>
#include <vector>

namespace salign {

struct SystemConfig {
    int N = 64;             // subcarriers
    int L = 16;             // cyclic prefix length
    int notch_start = 20;   // i: notch covers bins i+1 .. i+K
    int notch_width = 10;   // K
    bool dc_disabled = true;
    int zeta = 4;           // oversampled bins per subcarrier
    int mod_order = 4;
    double alpha = 0.25;    // suppressor budget: eps = alpha * ||x||^2
    double lambda = 0.0;    // 0 = pure OOB, 1 = pure PAPR
    int R = 0;              // CP samples reserved for synchronization
    int guard_bins = 0;     // widen the notch selection by this many bins per side
    int num_taps = 17;      // channel taps (l + 1)

    int frame_length() const { return N + L; }
    int active_count() const { return N - notch_width - (dc_disabled ? 1 : 0); }

    // Throws ConfigError on any violated invariant.
    void validate() const;
};

struct QamVector {
    CVec symbols;
};

struct TimeSymbol {
    CVec samples;
};

using Bits = std::vector<std::uint8_t>;

// Cached linear operators for one configuration. Immutable after build.
struct LinearMaps {
    int N = 0;
    int L = 0;
    std::vector<int> active;  // active subcarrier bins, ascending
    RMat M;                   // N x N_d subcarrier selection
    RMat A;                   // (N+L) x N CP insertion
    RMat B;                   // N x (N+L) CP removal
    CMat F;                   // unitary N-point DFT
    CMat modulator;           // A F^H M, (N+L) x N_d

    int active_count() const { return static_cast<int>(active.size()); }
    int frame_length() const { return N + L; }
};

LinearMaps build_maps(const SystemConfig& cfg);

// Gray-mapped square QAM with unit average symbol energy. order in {4,16,64}.
int bits_per_symbol(int order);
QamVector qam_modulate(const Bits& bits, int order);
Bits qam_demodulate(const QamVector& symbols, int order);

TimeSymbol ofdm_modulate(const QamVector& d, const LinearMaps& maps);

struct Demodulated {
    QamVector data;
    bool equalization_singular = false;
};

// Zero-forcing single-tap receiver: drop the CP, DFT, divide by h_freq on
// each active bin. Bins whose |h_freq| falls below singular_tol are flagged
// and returned as zero.
Demodulated ofdm_demodulate(const TimeSymbol& received, const LinearMaps& maps, const CVec& h_freq,
                            double singular_tol = 1e-12);

}  // namespace salign
