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

#include "salign/types.hpp"

#include <array>
#include <cmath>

namespace salign {

Rng make_stream(std::uint64_t master_seed, std::uint64_t tag, std::uint64_t index)
{
    const std::array<std::uint32_t, 6> words{
        static_cast<std::uint32_t>(master_seed), static_cast<std::uint32_t>(master_seed >> 32),
        static_cast<std::uint32_t>(tag),         static_cast<std::uint32_t>(tag >> 32),
        static_cast<std::uint32_t>(index),       static_cast<std::uint32_t>(index >> 32)};
    std::seed_seq seq(words.begin(), words.end());
    return Rng(seq);
}

cd complex_gaussian(Rng& rng, double variance)
{
    std::normal_distribution<double> unit(0.0, 1.0);
    const double scale = std::sqrt(variance / 2.0);
    const double re = unit(rng);
    const double im = unit(rng);
    return {scale * re, scale * im};
}

}  // namespace salign
