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

// Measurements: Welch PSD, PAPR and its CCDF, leaked power under imperfect
// CSI, bit error counting. Accumulators merge associatively so Monte Carlo
// blocks can run on separate workers.

#include "salign/alignment.hpp"
#include "salign/channel.hpp"
#include "salign/ofdm.hpp"
#include "salign/suppressor.hpp"
#include "salign/types.hpp"

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace salign {

// ---- spectrum -----------------------------------------------------------

struct WelchParams {
    int segment_length = 256;
    int overlap = 128;
};

// Segment length zeta*N, half overlap.
WelchParams default_welch(const SystemConfig& cfg);

struct PsdEstimate {
    RVec freqs;     // cycles/sample, DFT-bin order
    RVec power_db;  // relative to the peak (max = 0 dB)
    double peak_db = 0.0;  // absolute level of the peak, power per sample per bin
    WelchParams params;
    std::string window = "hann";
    long segments = 0;

    // power_db + peak_db
    RVec absolute_db() const;
};

// Sum of Hann-windowed periodograms over whole segments of one or more
// streams. Segments never straddle two add() calls.
class WelchAccumulator {
public:
    explicit WelchAccumulator(WelchParams params);
    ~WelchAccumulator();
    WelchAccumulator(const WelchAccumulator& other);
    WelchAccumulator& operator=(const WelchAccumulator& other);
    WelchAccumulator(WelchAccumulator&&) noexcept;
    WelchAccumulator& operator=(WelchAccumulator&&) noexcept;

    void add(const CVec& stream);
    void merge(const WelchAccumulator& other);
    long segments() const { return segments_; }
    PsdEstimate estimate() const;

private:
    struct Plan;
    WelchParams params_;
    RVec window_;
    double window_energy_ = 0.0;
    RVec sum_;
    long segments_ = 0;
    std::unique_ptr<Plan> plan_;
};

// Throws Error when the stream holds fewer than two segments.
PsdEstimate welch_psd(const CVec& stream, const WelchParams& params);

// Mean over the given bins of (plain - suppressed) in absolute dB.
double oob_reduction(const PsdEstimate& suppressed, const PsdEstimate& plain, const std::vector<int>& bins);

// Mean absolute level (dB relative to the plain peak) over the bins.
double band_level_db(const PsdEstimate& psd, const PsdEstimate& reference, const std::vector<int>& bins);

// ---- PAPR ---------------------------------------------------------------

// max|t|^2 / mean|t|^2 over the N+L samples, in dB. Throws on all-zero input.
double papr_db(const TimeSymbol& t);

// Same figure after band-limited interpolation of the frame by `factor`.
double oversampled_papr_db(const TimeSymbol& t, int factor);

struct CcdfCurve {
    RVec thresholds_db;
    RVec prob;  // P(PAPR > threshold)
    long samples = 0;
};

// Empirical survival function on a `step_db` grid. Requires at least
// 10 / min_probability samples.
CcdfCurve ccdf(const std::vector<double>& papr_samples, double min_probability = 1e-3, double step_db = 0.1);

// Threshold at which the curve falls to `probability`, interpolated
// linearly in log10(prob) between grid points.
double ccdf_level(const CcdfCurve& curve, double probability);

// ---- leaked power under imperfect CSI -----------------------------------

// Psi_k, k = 1..N+L, in the piecewise form (entry k-1 of the result).
std::vector<int> psi_weights(int N, int L);

// Count of data rows i in [L+1, N+L] with 0 <= i-k < taps: the same weights
// for an error profile of `taps` taps. Requires 1 <= taps <= L+1.
std::vector<int> psi_weights(int N, int L, int taps);

// Phi = -(F_s^H F_s + l0 I)^-1 F_s^H F_K A F^H M, so s = Phi d.
CMat build_phi(const CMat& F_K, const LinearMaps& maps, const AlignmentBasis& P, double lagrange_multiplier);
CMat build_phi(const SystemConfig& cfg, const LinearMaps& maps, const AlignmentBasis& P,
               double lagrange_multiplier);

// diag(P Phi Phi^H P^H)
RVec z_diagonal(const AlignmentBasis& P, const CMat& phi);

// sigma_e2 / (taps N) * sum_k Z_kk Psi_k
double leaked_power_closed_form(const RVec& z_diag, const std::vector<int>& psi, double sigma_e2, int N,
                                int taps);

// (1/N) ||B H_hat P s||^2 for one transmitted suppressor.
double leaked_power(const LinearMaps& maps, const ToeplitzChannel& actual, const TimeSymbol& c);

enum class DesignMode { lsqi, joint };

struct LeakageReport {
    double sigma_e2 = 0.0;
    double xi_monte_carlo = 0.0;
    // lsqi mode only. Each channel's Z is evaluated at the median multiplier
    // of that channel's symbols.
    double xi_closed_form = 0.0;
    double xi_closed_form_per_symbol = 0.0;       // each symbol's own multiplier
    double xi_closed_form_scenario_median = 0.0;  // one multiplier for every channel
    double median_multiplier = 0.0;
    long trials = 0;
    std::vector<int> psi;
    RVec z_diag;  // averaged over channels
};

// Mean of (1/N)||B H_hat P s||^2 over channel, data and CSI-error draws.
// Trial j uses stream (seed, tag, j); channels are redrawn every
// `symbols_per_channel` trials.
struct LeakageRun {
    int num_trials = 10000;
    int symbols_per_channel = 50;
    std::uint64_t seed = 1;
};

std::vector<LeakageReport> leakage_study(const SystemConfig& cfg, const std::vector<double>& sigma_e2_grid,
                                         const LeakageRun& run, DesignMode mode, int jobs = 1);

double leaked_power_monte_carlo(const SystemConfig& cfg, double sigma_e2, const LeakageRun& run, DesignMode mode);

// ---- bit errors ---------------------------------------------------------

enum class BerArm { plain, plain_matched, suppressed };
std::string to_string(BerArm arm);

struct BerCounts {
    std::vector<double> snr_db;
    // [arm][snr]
    std::vector<std::vector<std::uint64_t>> errors;
    std::vector<std::uint64_t> bits;  // per SNR, same for every arm
    std::uint64_t singular_equalizations = 0;
    std::uint64_t solver_fallbacks = 0;

    BerCounts() = default;
    explicit BerCounts(std::vector<double> grid);
    void merge(const BerCounts& other);
    double ber(BerArm arm, std::size_t snr_index) const;
};

inline constexpr int kBerArms = 3;

struct BerRun {
    int num_symbols = 2000;
    std::uint64_t seed = 1;
};

// Arms share channel, data, CSI error and noise draws. plain sends x,
// plain_matched sends x / sqrt(1+alpha), suppressed sends
// (x + c) / sqrt(1+alpha). Noise is set against the plain reference power.
// The receiver equalizes with the channel known to the transmitter, times
// the arm's power scaling; the signal propagates through H + E.
BerCounts ber_curve(const SystemConfig& cfg, const std::vector<double>& snr_grid, double sigma_e2,
                    const BerRun& run, int jobs = 1);

// Wilson-free normal approximation: z * sqrt(p(1-p)/n).
double binomial_halfwidth(std::uint64_t errors, std::uint64_t trials, double z);

}  // namespace salign
