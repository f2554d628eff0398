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

#include "salign/alignment.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <string>

namespace salign {

namespace {

// Orthonormal basis of ker(op) from a column-pivoted QR of op^H: the
// trailing columns of the full Q beyond the numerical rank. Rank threshold:
// max(rows, cols) * eps * |R_00| (|R_00| is the largest column norm of op^H,
// within sqrt(rank) of sigma_max).
CMat kernel_of(const CMat& op, int expected_rank)
{
    Eigen::ColPivHouseholderQR<CMat> qr(op.adjoint());
    const double tol = static_cast<double>(std::max(op.rows(), op.cols())) * std::numeric_limits<double>::epsilon();
    qr.setThreshold(tol);
    const auto rank = static_cast<int>(qr.rank());
    if (rank < expected_rank) {
        throw DegenerateChannelError("B*H is rank deficient (rank " + std::to_string(rank) + " < " +
                                     std::to_string(expected_rank) + ")");
    }
    const Eigen::Index n = op.cols();
    const Eigen::Index nullity = n - rank;
    CMat tail = CMat::Zero(n, nullity);
    tail.bottomRows(nullity).setIdentity();
    return qr.householderQ() * tail;
}

// Rows of H picked by a 0/1 selection map B (the CP removal map), without a
// dense product.
CMat select_rows(const RMat& B, const CMat& H)
{
    CMat out = CMat::Zero(B.rows(), H.cols());
    for (Eigen::Index r = 0; r < B.rows(); ++r) {
        for (Eigen::Index c = 0; c < B.cols(); ++c) {
            if (B(r, c) != 0.0) {
                out.row(r) += B(r, c) * H.row(c);
            }
        }
    }
    return out;
}

}  // namespace

AlignmentBasis null_basis(const RMat& B, const ToeplitzChannel& H)
{
    if (B.cols() != H.size()) {
        throw DimensionError("CP-removal map and channel operator sizes disagree");
    }
    const CMat BH = select_rows(B, H.H);
    AlignmentBasis out;
    out.basis = kernel_of(BH, static_cast<int>(B.rows()));
    out.embedded = out.basis;
    out.mode = AlignmentMode::full;
    return out;
}

SyncSelector sync_selector(int N, int L, int R)
{
    if (R < 0 || 2 * R >= L) {
        throw ConfigError("sync reservation R must satisfy 0 <= R < L/2");
    }
    SyncSelector sel;
    sel.R = R;
    for (int k = 0; k < N + L; ++k) {
        const bool reserved = k < R || (k >= N && k < N + R);
        if (!reserved) {
            sel.kept.push_back(k);
        }
    }
    sel.W = RMat::Zero(N + L, static_cast<Eigen::Index>(sel.kept.size()));
    for (std::size_t c = 0; c < sel.kept.size(); ++c) {
        sel.W(sel.kept[c], static_cast<Eigen::Index>(c)) = 1.0;
    }
    return sel;
}

AlignmentBasis null_basis_partial(const RMat& B, const ToeplitzChannel& H, const SyncSelector& W)
{
    if (W.W.rows() != H.size()) {
        throw DimensionError("selector and channel operator sizes disagree");
    }
    // B H W is just the columns of B H at the kept positions.
    const CMat BH = select_rows(B, H.H);
    CMat BHW(BH.rows(), static_cast<Eigen::Index>(W.kept.size()));
    for (std::size_t c = 0; c < W.kept.size(); ++c) {
        BHW.col(static_cast<Eigen::Index>(c)) = BH.col(W.kept[c]);
    }
    AlignmentBasis out;
    out.basis = kernel_of(BHW, static_cast<int>(B.rows()));
    out.embedded = CMat::Zero(H.size(), out.basis.cols());
    for (std::size_t r = 0; r < W.kept.size(); ++r) {
        out.embedded.row(W.kept[r]) = out.basis.row(static_cast<Eigen::Index>(r));
    }
    out.mode = W.R == 0 ? AlignmentMode::full : AlignmentMode::partial;
    out.R = W.R;
    return out;
}

double alignment_residual(const AlignmentBasis& P, const RMat& B, const ToeplitzChannel& H)
{
    const double hn = H.H.norm();
    if (hn == 0.0) {
        return 0.0;
    }
    return (B.cast<cd>() * (H.H * P.embedded)).norm() / hn;
}

}  // namespace salign
