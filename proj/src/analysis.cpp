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

#include "salign/analysis.hpp"

#include "salign/parallel.hpp"

#include <fftw3.h>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <array>
#include <cmath>
#include <mutex>
#include <numeric>

namespace salign {

namespace {

// Stream tags for the Monte Carlo drivers in this file.
constexpr std::uint64_t kTagLeakChannel = 0x4c4b4348;
constexpr std::uint64_t kTagLeakSymbol = 0x4c4b5359;
constexpr std::uint64_t kTagBerSymbol = 0x42455253;
constexpr std::uint64_t kTagBerNoise = 0x4245524e;

constexpr int kBlock = 50;  // symbols per parallel work unit

// FFTW's planner is not reentrant.
std::mutex& planner_mutex()
{
    static std::mutex m;
    return m;
}

Bits random_bits(std::size_t count, Rng& rng)
{
    Bits b(count);
    std::uniform_int_distribution<int> coin(0, 1);
    for (auto& v : b) {
        v = static_cast<std::uint8_t>(coin(rng));
    }
    return b;
}

double median(std::vector<double> v)
{
    if (v.empty()) {
        return 0.0;
    }
    const auto mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    double m = v[mid];
    if (v.size() % 2 == 0) {
        m = 0.5 * (m + *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid)));
    }
    return m;
}

// B y: the last N of N+L samples.
CVec drop_cp(const CVec& y, int N) { return y.tail(N); }

}  // namespace

// ---- spectrum -----------------------------------------------------------

WelchParams default_welch(const SystemConfig& cfg)
{
    WelchParams p;
    p.segment_length = cfg.zeta * cfg.N;
    p.overlap = p.segment_length / 2;
    return p;
}

RVec PsdEstimate::absolute_db() const { return power_db.array() + peak_db; }

struct WelchAccumulator::Plan {
    fftw_complex* buf = nullptr;
    fftw_plan plan = nullptr;

    explicit Plan(int n)
    {
        std::lock_guard<std::mutex> lock(planner_mutex());
        buf = fftw_alloc_complex(static_cast<std::size_t>(n));
        plan = fftw_plan_dft_1d(n, buf, buf, FFTW_FORWARD, FFTW_ESTIMATE);
    }
    ~Plan()
    {
        std::lock_guard<std::mutex> lock(planner_mutex());
        fftw_destroy_plan(plan);
        fftw_free(buf);
    }
};

WelchAccumulator::WelchAccumulator(WelchParams params) : params_(params)
{
    const int n = params.segment_length;
    if (n < 2 || params.overlap < 0 || params.overlap >= n) {
        throw ConfigError("Welch segment length must be >= 2 with 0 <= overlap < segment length");
    }
    // Periodic Hann.
    window_.resize(n);
    for (int i = 0; i < n; ++i) {
        window_(i) = 0.5 - 0.5 * std::cos(2.0 * kPi * i / n);
    }
    window_energy_ = window_.squaredNorm();
    sum_ = RVec::Zero(n);
    plan_ = std::make_unique<Plan>(n);
}

WelchAccumulator::~WelchAccumulator() = default;

WelchAccumulator::WelchAccumulator(const WelchAccumulator& other)
    : params_(other.params_),
      window_(other.window_),
      window_energy_(other.window_energy_),
      sum_(other.sum_),
      segments_(other.segments_),
      plan_(std::make_unique<Plan>(other.params_.segment_length))
{
}

WelchAccumulator& WelchAccumulator::operator=(const WelchAccumulator& other)
{
    if (this != &other) {
        WelchAccumulator copy(other);
        *this = std::move(copy);
    }
    return *this;
}

WelchAccumulator::WelchAccumulator(WelchAccumulator&&) noexcept = default;
WelchAccumulator& WelchAccumulator::operator=(WelchAccumulator&&) noexcept = default;

void WelchAccumulator::add(const CVec& stream)
{
    const int n = params_.segment_length;
    const int step = n - params_.overlap;
    fftw_complex* buf = plan_->buf;
    for (Eigen::Index start = 0; start + n <= stream.size(); start += step) {
        for (int i = 0; i < n; ++i) {
            const cd v = stream(start + i) * window_(i);
            buf[i][0] = v.real();
            buf[i][1] = v.imag();
        }
        fftw_execute(plan_->plan);
        for (int i = 0; i < n; ++i) {
            sum_(i) += buf[i][0] * buf[i][0] + buf[i][1] * buf[i][1];
        }
        ++segments_;
    }
}

void WelchAccumulator::merge(const WelchAccumulator& other)
{
    if (other.params_.segment_length != params_.segment_length || other.params_.overlap != params_.overlap) {
        throw DimensionError("cannot merge Welch accumulators with different parameters");
    }
    sum_ += other.sum_;
    segments_ += other.segments_;
}

PsdEstimate WelchAccumulator::estimate() const
{
    if (segments_ < 2) {
        throw Error("Welch estimate needs at least two segments");
    }
    const int n = params_.segment_length;
    PsdEstimate psd;
    psd.params = params_;
    psd.segments = segments_;
    psd.freqs.resize(n);
    for (int i = 0; i < n; ++i) {
        psd.freqs(i) = static_cast<double>(i) / n;
    }
    const RVec p = sum_ / (static_cast<double>(segments_) * window_energy_);
    const double peak = std::max(p.maxCoeff(), 1e-300);
    psd.peak_db = db10(peak);
    psd.power_db.resize(n);
    for (int i = 0; i < n; ++i) {
        psd.power_db(i) = db10(std::max(p(i), 1e-300) / peak);
    }
    return psd;
}

PsdEstimate welch_psd(const CVec& stream, const WelchParams& params)
{
    WelchAccumulator acc(params);
    acc.add(stream);
    return acc.estimate();
}

double oob_reduction(const PsdEstimate& suppressed, const PsdEstimate& plain, const std::vector<int>& bins)
{
    if (suppressed.power_db.size() != plain.power_db.size()) {
        throw DimensionError("PSD estimates have different bin counts");
    }
    if (bins.empty()) {
        return 0.0;
    }
    const RVec a = suppressed.absolute_db();
    const RVec b = plain.absolute_db();
    double acc = 0.0;
    for (int k : bins) {
        acc += b(k) - a(k);
    }
    return acc / static_cast<double>(bins.size());
}

double band_level_db(const PsdEstimate& psd, const PsdEstimate& reference, const std::vector<int>& bins)
{
    if (bins.empty()) {
        throw ConfigError("empty bin set");
    }
    const RVec a = psd.absolute_db();
    double acc = 0.0;
    for (int k : bins) {
        acc += a(k) - reference.peak_db;
    }
    return acc / static_cast<double>(bins.size());
}

// ---- PAPR ---------------------------------------------------------------

double papr_db(const TimeSymbol& t)
{
    const auto n = t.samples.size();
    const double total = t.samples.squaredNorm();
    if (n == 0 || total == 0.0) {
        throw Error("PAPR of an all-zero symbol is undefined");
    }
    const double peak = t.samples.cwiseAbs2().maxCoeff();
    return db10(peak * static_cast<double>(n) / total);
}

double oversampled_papr_db(const TimeSymbol& t, int factor)
{
    if (factor < 1) {
        throw ConfigError("oversampling factor must be >= 1");
    }
    const Eigen::Index n = t.samples.size();
    if (n == 0) {
        throw Error("PAPR of an empty symbol is undefined");
    }
    // Spectrum of the frame, then band-limited interpolation with signed
    // frequencies; an even-length Nyquist bin is split between +/-.
    CVec X = CVec::Zero(n);
    for (Eigen::Index k = 0; k < n; ++k) {
        for (Eigen::Index m = 0; m < n; ++m) {
            X(k) += t.samples(m) * std::polar(1.0, -2.0 * kPi * double(k * m % n) / double(n));
        }
    }
    const Eigen::Index up = n * factor;
    double peak = 0.0;
    double total = 0.0;
    for (Eigen::Index m = 0; m < up; ++m) {
        cd y = 0.0;
        for (Eigen::Index k = 0; k < n; ++k) {
            double f = k <= n / 2 ? double(k) : double(k - n);
            cd term = X(k) * std::polar(1.0, 2.0 * kPi * f * double(m) / double(up));
            if (n % 2 == 0 && k == n / 2) {
                term = 0.5 * X(k) * (std::polar(1.0, 2.0 * kPi * f * double(m) / double(up)) +
                                     std::polar(1.0, -2.0 * kPi * f * double(m) / double(up)));
            }
            y += term;
        }
        y /= double(n);
        peak = std::max(peak, std::norm(y));
        total += std::norm(y);
    }
    if (total == 0.0) {
        throw Error("PAPR of an all-zero symbol is undefined");
    }
    return db10(peak * double(up) / total);
}

CcdfCurve ccdf(const std::vector<double>& papr_samples, double min_probability, double step_db)
{
    if (!(step_db > 0.0) || !(min_probability > 0.0 && min_probability < 1.0)) {
        throw ConfigError("CCDF needs step > 0 and 0 < min_probability < 1");
    }
    const double needed = 10.0 / min_probability;
    if (static_cast<double>(papr_samples.size()) < needed) {
        throw Error("CCDF: " + std::to_string(papr_samples.size()) + " samples cannot resolve probability " +
                    std::to_string(min_probability) + " (need " + std::to_string(static_cast<long>(needed)) + ")");
    }
    std::vector<double> sorted = papr_samples;
    std::sort(sorted.begin(), sorted.end());
    const double lo = std::floor(sorted.front() / step_db) * step_db;
    const double hi = std::ceil(sorted.back() / step_db) * step_db + step_db;
    const auto count = static_cast<Eigen::Index>(std::llround((hi - lo) / step_db)) + 1;
    CcdfCurve c;
    c.samples = static_cast<long>(sorted.size());
    c.thresholds_db.resize(count);
    c.prob.resize(count);
    const double n = static_cast<double>(sorted.size());
    for (Eigen::Index g = 0; g < count; ++g) {
        const double th = lo + step_db * static_cast<double>(g);
        const auto above = sorted.end() - std::upper_bound(sorted.begin(), sorted.end(), th);
        c.thresholds_db(g) = th;
        c.prob(g) = static_cast<double>(above) / n;
    }
    return c;
}

double ccdf_level(const CcdfCurve& curve, double probability)
{
    const Eigen::Index n = curve.prob.size();
    for (Eigen::Index g = 0; g < n; ++g) {
        if (curve.prob(g) > probability) {
            continue;
        }
        if (g == 0) {
            return curve.thresholds_db(0);
        }
        const double p0 = curve.prob(g - 1);
        const double p1 = curve.prob(g);
        const double t0 = curve.thresholds_db(g - 1);
        const double t1 = curve.thresholds_db(g);
        double w;
        if (p1 > 0.0) {
            w = (std::log10(p0) - std::log10(probability)) / (std::log10(p0) - std::log10(p1));
        } else {
            w = (p0 - probability) / p0;
        }
        return t0 + w * (t1 - t0);
    }
    throw Error("CCDF never falls to the requested probability");
}

// ---- leaked power -------------------------------------------------------

std::vector<int> psi_weights(int N, int L)
{
    std::vector<int> psi(static_cast<std::size_t>(N + L), 0);
    for (int k = 1; k <= N + L; ++k) {
        int v = 0;
        if (k <= L) {
            v = k - 1;
        } else if (k <= N + 1) {
            v = L;
        } else {
            v = N + L - k + 1;
        }
        psi[static_cast<std::size_t>(k - 1)] = v;
    }
    return psi;
}

std::vector<int> psi_weights(int N, int L, int taps)
{
    if (taps < 1 || taps > L + 1) {
        throw ConfigError("error profile must have between 1 and L+1 taps");
    }
    std::vector<int> psi(static_cast<std::size_t>(N + L), 0);
    for (int k = 1; k <= N + L; ++k) {
        const int first = std::max(L + 1, k);
        const int last = std::min(N + L, k + taps - 1);
        psi[static_cast<std::size_t>(k - 1)] = std::max(0, last - first + 1);
    }
    return psi;
}

CMat build_phi(const CMat& F_K, const LinearMaps& maps, const AlignmentBasis& P, double lagrange_multiplier)
{
    if (lagrange_multiplier < 0.0) {
        throw ConfigError("Lagrange multiplier must be non-negative");
    }
    const CMat F_s = F_K * P.embedded;
    CMat G = F_s.adjoint() * F_s;
    G.diagonal().array() += lagrange_multiplier;
    Eigen::SelfAdjointEigenSolver<CMat> eig(G, Eigen::EigenvaluesOnly);
    const RVec ev = eig.eigenvalues();
    if (!(ev(0) > 1e-12 * std::max(ev(ev.size() - 1), 1e-300))) {
        throw DimensionError("Phi: regularized normal equations are singular");
    }
    const CMat rhs = F_s.adjoint() * (F_K * maps.modulator.cast<cd>());
    return -G.ldlt().solve(rhs);
}

CMat build_phi(const SystemConfig& cfg, const LinearMaps& maps, const AlignmentBasis& P,
               double lagrange_multiplier)
{
    return build_phi(notch_dft(cfg), maps, P, lagrange_multiplier);
}

RVec z_diagonal(const AlignmentBasis& P, const CMat& phi) { return (P.embedded * phi).rowwise().squaredNorm(); }

double leaked_power_closed_form(const RVec& z_diag, const std::vector<int>& psi, double sigma_e2, int N, int taps)
{
    if (static_cast<std::size_t>(z_diag.size()) != psi.size()) {
        throw DimensionError("Z diagonal and Psi lengths differ");
    }
    double acc = 0.0;
    for (std::size_t k = 0; k < psi.size(); ++k) {
        acc += z_diag(static_cast<Eigen::Index>(k)) * psi[k];
    }
    return sigma_e2 * acc / (static_cast<double>(taps) * N);
}

double leaked_power(const LinearMaps& maps, const ToeplitzChannel& actual, const TimeSymbol& c)
{
    return drop_cp(actual.H * c.samples, maps.N).squaredNorm() / maps.N;
}

std::vector<LeakageReport> leakage_study(const SystemConfig& cfg, const std::vector<double>& sigma_e2_grid,
                                         const LeakageRun& run, DesignMode mode, int jobs)
{
    cfg.validate();
    if (run.num_trials < 1 || run.symbols_per_channel < 1) {
        throw ConfigError("leakage study needs positive trial counts");
    }
    for (double s2 : sigma_e2_grid) {
        if (!(s2 >= 0.0)) {
            throw ConfigError("sigma_e2 must be non-negative");
        }
    }
    SystemConfig design = cfg;
    if (mode == DesignMode::lsqi) {
        design.lambda = 0.0;
    }
    const LinearMaps maps = build_maps(cfg);
    const CMat F_K = notch_dft(cfg);
    const std::vector<int> bins = notch_bins(cfg);
    const int n = cfg.frame_length();
    const int spc = run.symbols_per_channel;
    const int channels = (run.num_trials + spc - 1) / spc;
    const std::size_t grid = sigma_e2_grid.size();
    const std::vector<int> psi = psi_weights(cfg.N, cfg.L, cfg.num_taps);
    const std::size_t nbits = static_cast<std::size_t>(maps.active_count() * bits_per_symbol(cfg.mod_order));

    // F_K A F^H M, shared by every channel.
    const CMat FKmod = F_K * maps.modulator;

    struct Partial {
        std::vector<double> mc;  // sums over trials
        std::vector<double> cf;            // per-channel median multiplier
        std::vector<double> cf_per_symbol;
        std::vector<double> multipliers;
        RVec z;
        long trials = 0;
    };
    std::vector<Partial> parts(static_cast<std::size_t>(channels));

    parallel_for(channels, jobs, [&](int ch) {
        Partial& part = parts[static_cast<std::size_t>(ch)];
        part.mc.assign(grid, 0.0);
        part.cf.assign(grid, 0.0);
        part.cf_per_symbol.assign(grid, 0.0);
        part.z = RVec::Zero(n);
        Rng crng = make_stream(run.seed, kTagLeakChannel, static_cast<std::uint64_t>(ch));
        const ToeplitzChannel H = toeplitz_channel(draw_channel(cfg.num_taps, crng), n);
        const AlignmentBasis P = cfg.R == 0 ? null_basis(maps.B, H)
                                            : null_basis_partial(maps.B, H, sync_selector(cfg.N, cfg.L, cfg.R));
        const CMat F_s = F_K * P.embedded;
        const CMat gram = F_s.adjoint() * F_s;
        const CMat rhs = F_s.adjoint() * FKmod;
        // Closed form for a fixed multiplier: Z = P Phi Phi^H P^H.
        auto closed_form_unit = [&](double l0, RVec* z_out) {
            CMat G = gram;
            G.diagonal().array() += l0;
            const CMat phi = -G.ldlt().solve(rhs);
            const RVec z = z_diagonal(P, phi);
            if (z_out != nullptr) {
                *z_out += z;
            }
            return leaked_power_closed_form(z, psi, 1.0, cfg.N, cfg.num_taps);
        };
        const int first = ch * spc;
        const int last = std::min(run.num_trials, first + spc);
        for (int j = first; j < last; ++j) {
            Rng rng = make_stream(run.seed, kTagLeakSymbol, static_cast<std::uint64_t>(j));
            const TimeSymbol x = ofdm_modulate(qam_modulate(random_bits(nbits, rng), cfg.mod_order), maps);
            const CsiPerturbation unit = perturb_csi(H, 1.0, rng);
            const SpectralOperators ops = spectral_operators(F_K, bins, P, x);
            const SuppressorSolution sol = design_suppressor(design, ops, x, P);
            part.multipliers.push_back(sol.lagrange_multiplier);
            // B(H + sigma E1) c = B H c + sigma B E1 c
            const CVec u = drop_cp(H.H * sol.c.samples, cfg.N);
            const CVec v = drop_cp(unit.error.H * sol.c.samples, cfg.N);
            const double cf = mode == DesignMode::lsqi ? closed_form_unit(sol.lagrange_multiplier, &part.z) : 0.0;
            for (std::size_t g = 0; g < grid; ++g) {
                part.mc[g] += (u + std::sqrt(sigma_e2_grid[g]) * v).squaredNorm() / cfg.N;
                part.cf_per_symbol[g] += sigma_e2_grid[g] * cf;
            }
            ++part.trials;
        }
        if (mode == DesignMode::lsqi) {
            const double cf_med = closed_form_unit(median(part.multipliers), nullptr);
            for (std::size_t g = 0; g < grid; ++g) {
                part.cf[g] = sigma_e2_grid[g] * cf_med * static_cast<double>(part.trials);
            }
        }
    });

    std::vector<LeakageReport> out(grid);
    std::vector<double> all_multipliers;
    RVec z_sum = RVec::Zero(n);
    long trials = 0;
    for (const Partial& part : parts) {
        trials += part.trials;
        all_multipliers.insert(all_multipliers.end(), part.multipliers.begin(), part.multipliers.end());
        z_sum += part.z;
        for (std::size_t g = 0; g < grid; ++g) {
            out[g].xi_monte_carlo += part.mc[g];
            out[g].xi_closed_form += part.cf[g];
            out[g].xi_closed_form_per_symbol += part.cf_per_symbol[g];
        }
    }
    const double med = median(all_multipliers);
    const bool lsqi = mode == DesignMode::lsqi;
    // Second pass: the closed form at the scenario-wide median multiplier.
    std::vector<double> cf_scenario(static_cast<std::size_t>(channels), 0.0);
    if (lsqi) {
        parallel_for(channels, jobs, [&](int ch) {
            Rng crng = make_stream(run.seed, kTagLeakChannel, static_cast<std::uint64_t>(ch));
            const ToeplitzChannel H = toeplitz_channel(draw_channel(cfg.num_taps, crng), n);
            const AlignmentBasis P = cfg.R == 0 ? null_basis(maps.B, H)
                                                : null_basis_partial(maps.B, H, sync_selector(cfg.N, cfg.L, cfg.R));
            const RVec z = z_diagonal(P, build_phi(F_K, maps, P, med));
            cf_scenario[static_cast<std::size_t>(ch)] = leaked_power_closed_form(z, psi, 1.0, cfg.N, cfg.num_taps) *
                                                      static_cast<double>(parts[static_cast<std::size_t>(ch)].trials);
        });
    }
    const double cf_scenario_unit = std::accumulate(cf_scenario.begin(), cf_scenario.end(), 0.0) / static_cast<double>(trials);
    for (std::size_t g = 0; g < grid; ++g) {
        LeakageReport& r = out[g];
        r.sigma_e2 = sigma_e2_grid[g];
        r.trials = trials;
        r.xi_monte_carlo /= static_cast<double>(trials);
        r.xi_closed_form = lsqi ? r.xi_closed_form / static_cast<double>(trials) : 0.0;
        r.xi_closed_form_per_symbol = lsqi ? r.xi_closed_form_per_symbol / static_cast<double>(trials) : 0.0;
        r.xi_closed_form_scenario_median = lsqi ? sigma_e2_grid[g] * cf_scenario_unit : 0.0;
        r.median_multiplier = med;
        r.psi = psi;
        r.z_diag = lsqi ? RVec(z_sum / static_cast<double>(trials)) : RVec();
    }
    return out;
}

double leaked_power_monte_carlo(const SystemConfig& cfg, double sigma_e2, const LeakageRun& run, DesignMode mode)
{
    return leakage_study(cfg, {sigma_e2}, run, mode, 1).front().xi_monte_carlo;
}

// ---- bit errors ---------------------------------------------------------

std::string to_string(BerArm arm)
{
    switch (arm) {
    case BerArm::plain: return "plain";
    case BerArm::plain_matched: return "plain_matched";
    case BerArm::suppressed: return "suppressed";
    }
    return "unknown";
}

BerCounts::BerCounts(std::vector<double> grid) : snr_db(std::move(grid))
{
    errors.assign(kBerArms, std::vector<std::uint64_t>(snr_db.size(), 0));
    bits.assign(snr_db.size(), 0);
}

void BerCounts::merge(const BerCounts& other)
{
    if (other.snr_db != snr_db) {
        throw DimensionError("cannot merge BER counts over different SNR grids");
    }
    for (int a = 0; a < kBerArms; ++a) {
        for (std::size_t q = 0; q < snr_db.size(); ++q) {
            errors[static_cast<std::size_t>(a)][q] += other.errors[static_cast<std::size_t>(a)][q];
        }
    }
    for (std::size_t q = 0; q < snr_db.size(); ++q) {
        bits[q] += other.bits[q];
    }
    singular_equalizations += other.singular_equalizations;
    solver_fallbacks += other.solver_fallbacks;
}

double BerCounts::ber(BerArm arm, std::size_t snr_index) const
{
    const auto b = bits.at(snr_index);
    return b == 0 ? 0.0 : static_cast<double>(errors[static_cast<std::size_t>(arm)][snr_index]) / b;
}

BerCounts ber_curve(const SystemConfig& cfg, const std::vector<double>& snr_grid, double sigma_e2,
                    const BerRun& run, int jobs)
{
    cfg.validate();
    if (snr_grid.empty() || run.num_symbols < 1) {
        throw ConfigError("BER run needs a non-empty SNR grid and at least one symbol");
    }
    const LinearMaps maps = build_maps(cfg);
    const CMat F_K = notch_dft(cfg);
    const std::vector<int> bins = notch_bins(cfg);
    const int n = cfg.frame_length();
    const double ref = plain_reference_power(maps);
    const double scale = 1.0 / std::sqrt(1.0 + cfg.alpha);
    const std::size_t nbits = static_cast<std::size_t>(maps.active_count() * bits_per_symbol(cfg.mod_order));
    const int blocks = (run.num_symbols + kBlock - 1) / kBlock;
    std::vector<BerCounts> parts(static_cast<std::size_t>(blocks), BerCounts(snr_grid));

    parallel_for(blocks, jobs, [&](int blk) {
        BerCounts& acc = parts[static_cast<std::size_t>(blk)];
        const int last = std::min(run.num_symbols, (blk + 1) * kBlock);
        for (int j = blk * kBlock; j < last; ++j) {
            Rng rng = make_stream(run.seed, kTagBerSymbol, static_cast<std::uint64_t>(j));
            const ToeplitzChannel H = toeplitz_channel(draw_channel(cfg.num_taps, rng), n);
            const Bits bits = random_bits(nbits, rng);
            const TimeSymbol x = ofdm_modulate(qam_modulate(bits, cfg.mod_order), maps);
            const ToeplitzChannel actual = sigma_e2 > 0.0 ? perturb_csi(H, sigma_e2, rng).actual : H;
            const AlignmentBasis P = cfg.R == 0 ? null_basis(maps.B, H)
                                                : null_basis_partial(maps.B, H, sync_selector(cfg.N, cfg.L, cfg.R));
            bool fell_back = false;
            const SuppressorSolution sol =
                design_suppressor(cfg, spectral_operators(F_K, bins, P, x), x, P, &fell_back);
            acc.solver_fallbacks += fell_back ? 1 : 0;

            std::array<CVec, kBerArms> rx;
            rx[0] = actual.H * x.samples;
            rx[1] = scale * rx[0];
            rx[2] = actual.H * assemble_transmit(x, sol.c, PowerPolicy::shared_budget, cfg.alpha).samples;
            // The power policy is known at the receiver: arms 1 and 2 equalize
            // with the scaled response.
            const CVec h_freq = frequency_response(H.taps, cfg.N);
            const CVec h_scaled = scale * h_freq;

            Rng nrng = make_stream(run.seed, kTagBerNoise, static_cast<std::uint64_t>(j));
            for (std::size_t q = 0; q < snr_grid.size(); ++q) {
                CVec w(n);
                for (int i = 0; i < n; ++i) {
                    w(i) = complex_gaussian(nrng, 1.0);
                }
                const double sigma = std::sqrt(ref / from_db10(snr_grid[q]));
                acc.bits[q] += nbits;
                for (int a = 0; a < kBerArms; ++a) {
                    const TimeSymbol r{rx[static_cast<std::size_t>(a)] + sigma * w};
                    const Demodulated dem = ofdm_demodulate(r, maps, a == 0 ? h_freq : h_scaled);
                    acc.singular_equalizations += dem.equalization_singular ? 1 : 0;
                    const Bits got = qam_demodulate(dem.data, cfg.mod_order);
                    std::uint64_t err = 0;
                    for (std::size_t b = 0; b < nbits; ++b) {
                        err += got[b] != bits[b] ? 1 : 0;
                    }
                    acc.errors[static_cast<std::size_t>(a)][q] += err;
                }
            }
        }
    });

    BerCounts total(snr_grid);
    for (const BerCounts& p : parts) {
        total.merge(p);
    }
    return total;
}

double binomial_halfwidth(std::uint64_t errors, std::uint64_t trials, double z)
{
    if (trials == 0) {
        return 0.0;
    }
    const double p = static_cast<double>(errors) / static_cast<double>(trials);
    return z * std::sqrt(p * (1.0 - p) / static_cast<double>(trials));
}

}  // namespace salign
