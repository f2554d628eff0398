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

// Receiver-invisible subspace for the suppressing signal.
//
// A signal c in ker(B H) reaches the receiver entirely inside the CP window
// and is discarded together with it, so any c = P s leaves the data bins
// untouched. In partial mode the first R CP samples and their cyclic images
// at positions N..N+R-1 are excluded from the support of c, keeping them
// usable for CP-correlation timing.

#include "salign/channel.hpp"
#include "salign/types.hpp"

#include <vector>

namespace salign {

enum class AlignmentMode { full, partial };

struct SyncSelector {
    RMat W;                 // (N+L) x (N+L-2R), columns of the identity
    std::vector<int> kept;  // 0-based sample positions the suppressor may touch
    int R = 0;
};

struct AlignmentBasis {
    CMat basis;     // orthonormal columns in the selector's coordinates
    CMat embedded;  // W * basis, (N+L) x m; equals basis in full mode
    AlignmentMode mode = AlignmentMode::full;
    int R = 0;

    int dimension() const { return static_cast<int>(basis.cols()); }
};

// Orthonormal basis of ker(B H), from a column-pivoted QR of (B H)^H.
// Throws DegenerateChannelError if rank(B H) < N.
AlignmentBasis null_basis(const RMat& B, const ToeplitzChannel& H);

// Positions 0..R-1 and N..N+R-1 (0-based) are removed. Throws ConfigError
// unless 0 <= R < L/2.
SyncSelector sync_selector(int N, int L, int R);

// Orthonormal basis of ker(B H W); m = L - 2R.
AlignmentBasis null_basis_partial(const RMat& B, const ToeplitzChannel& H, const SyncSelector& W);

// ||B H (W) P||_F / ||H||_F, using the embedded basis.
double alignment_residual(const AlignmentBasis& P, const RMat& B, const ToeplitzChannel& H);

}  // namespace salign
