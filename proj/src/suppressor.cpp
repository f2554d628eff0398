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

#include "salign/suppressor.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace salign {

namespace {

constexpr double kActiveBudgetTol = 1e-4;

SuppressorSolution finalize(const CVec& F_d, const CMat& F_s, const CVec& x, const CMat& basis, CVec s,
                            double eps)
{
    SuppressorSolution sol;
    const double n2 = s.squaredNorm();
    // Interior-point and ADMM iterates can overshoot the ball by the solver
    // tolerance; pull them back so the returned s is always feasible.
    if (n2 > eps && n2 > 0.0) {
        s *= std::sqrt(eps / n2);
    }
    sol.s = std::move(s);
    sol.power_used = sol.s.squaredNorm();
    sol.active_budget = eps > 0.0 && sol.power_used >= eps * (1.0 - kActiveBudgetTol);
    sol.objective_oob = (F_d + F_s * sol.s).norm();
    if (basis.size() > 0) {
        sol.c.samples = basis * sol.s;
        sol.objective_papr = (x + sol.c.samples).cwiseAbs().maxCoeff();
    }
    return sol;
}

// Euclidean projection onto { z : sum |z_i| <= radius }.
CVec project_l1_ball(const CVec& v, double radius)
{
    const RVec mag = v.cwiseAbs();
    if (mag.sum() <= radius) {
        return v;
    }
    std::vector<double> sorted(mag.data(), mag.data() + mag.size());
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    double cum = 0.0;
    double theta = 0.0;
    for (std::size_t k = 0; k < sorted.size(); ++k) {
        cum += sorted[k];
        const double t = (cum - radius) / static_cast<double>(k + 1);
        if (k + 1 == sorted.size() || sorted[k + 1] <= t) {
            theta = t;
            break;
        }
    }
    CVec out(v.size());
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        const double shrunk = std::max(mag(i) - theta, 0.0);
        out(i) = mag(i) > 0.0 ? v(i) * (shrunk / mag(i)) : cd(0.0);
    }
    return out;
}

CVec prox_l2(const CVec& v, double tau)
{
    const double n = v.norm();
    if (n <= tau) {
        return CVec::Zero(v.size());
    }
    return v * (1.0 - tau / n);
}

CVec prox_linf(const CVec& v, double tau)
{
    if (tau <= 0.0) {
        return v;
    }
    return v - tau * project_l1_ball(v / tau, 1.0);
}

CVec project_ball(const CVec& v, double radius)
{
    const double n = v.norm();
    return n > radius ? CVec(v * (radius / n)) : v;
}

}  // namespace

std::vector<int> notch_bins(const SystemConfig& cfg)
{
    cfg.validate();
    const int lo = cfg.zeta * (cfg.notch_start + 1) - cfg.guard_bins;
    const int hi = cfg.zeta * (cfg.notch_start + cfg.notch_width) + cfg.guard_bins;
    if (lo < 0 || hi >= cfg.zeta * cfg.N) {
        throw ConfigError("guard bins push the notch selection outside the spectrum");
    }
    std::vector<int> bins(static_cast<std::size_t>(hi - lo + 1));
    std::iota(bins.begin(), bins.end(), lo);
    if (bins.empty()) {
        throw ConfigError("empty notch selection");
    }
    return bins;
}

CMat notch_dft(const SystemConfig& cfg)
{
    const std::vector<int> bins = notch_bins(cfg);
    const long grid = static_cast<long>(cfg.zeta) * cfg.N;
    const int beta = cfg.frame_length();
    CMat F(static_cast<Eigen::Index>(bins.size()), beta);
    for (std::size_t r = 0; r < bins.size(); ++r) {
        for (int n = 0; n < beta; ++n) {
            const long k = (static_cast<long>(bins[r]) * n) % grid;
            F(static_cast<Eigen::Index>(r), n) = std::polar(1.0, -2.0 * kPi * static_cast<double>(k) / grid);
        }
    }
    return F;
}

SpectralOperators spectral_operators(const CMat& F_K, const std::vector<int>& bins, const AlignmentBasis& P,
                                     const TimeSymbol& x)
{
    if (F_K.rows() == 0) {
        throw ConfigError("empty notch selection");
    }
    if (F_K.cols() != x.samples.size() || P.embedded.rows() != x.samples.size()) {
        throw DimensionError("spectral operator dimensions disagree");
    }
    return SpectralOperators{bins, F_K * x.samples, F_K * P.embedded};
}

SpectralOperators spectral_operators(const SystemConfig& cfg, const LinearMaps& maps, const AlignmentBasis& P,
                                     const QamVector& d)
{
    return spectral_operators(notch_dft(cfg), notch_bins(cfg), P, ofdm_modulate(d, maps));
}

std::string to_string(SolveMethod m)
{
    switch (m) {
    case SolveMethod::none: return "none";
    case SolveMethod::least_squares: return "least_squares";
    case SolveMethod::lsqi: return "lsqi";
    case SolveMethod::interior_point: return "interior_point";
    case SolveMethod::admm: return "admm";
    }
    return "unknown";
}

CVec regularized_solution(const CVec& F_d, const CMat& F_s, double lagrange_multiplier)
{
    CMat G = F_s.adjoint() * F_s;
    G.diagonal().array() += lagrange_multiplier;
    Eigen::LDLT<CMat> ldlt(G);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
        throw DimensionError("regularized normal equations are singular");
    }
    return -ldlt.solve(F_s.adjoint() * F_d);
}

SuppressorSolution solve_lsqi(const CVec& F_d, const CMat& F_s, double eps, const LsqiOptions& opts)
{
    if (!(eps >= 0.0)) {
        throw ConfigError("power budget must be non-negative");
    }
    const Eigen::Index m = F_s.cols();
    const CVec b = F_s.adjoint() * F_d;
    const CMat empty_basis;
    auto done = [&](CVec s, double l0, int iters, SolveMethod how) {
        SuppressorSolution sol = finalize(F_d, F_s, CVec(), empty_basis, std::move(s), eps);
        sol.lagrange_multiplier = l0;
        sol.iterations = iters;
        sol.method = how;
        return sol;
    };
    if (b.squaredNorm() == 0.0 || eps == 0.0) {
        return done(CVec::Zero(m), 0.0, 0, SolveMethod::least_squares);
    }

    Eigen::SelfAdjointEigenSolver<CMat> eig(F_s.adjoint() * F_s);
    const RVec ev = eig.eigenvalues().cwiseMax(0.0);  // ascending
    const CVec coef = eig.eigenvectors().adjoint() * b;
    const double ev_max = ev(m - 1);
    auto solution = [&](double l0) -> CVec {
        CVec w(m);
        for (Eigen::Index i = 0; i < m; ++i) {
            const double den = ev(i) + l0;
            w(i) = den > 0.0 ? coef(i) / den : cd(0.0);
        }
        return -(eig.eigenvectors() * w);
    };
    auto norm2 = [&](double l0) {
        double acc = 0.0;
        for (Eigen::Index i = 0; i < m; ++i) {
            const double den = ev(i) + l0;
            if (den > 0.0) {
                acc += std::norm(coef(i)) / (den * den);
            }
        }
        return acc;
    };

    // Unconstrained least squares when it is well posed and within budget.
    const double floor_ev = ev_max / opts.condition_limit;
    const bool well_conditioned = ev(0) > floor_ev;
    if (well_conditioned && norm2(0.0) <= eps) {
        return done(solution(0.0), 0.0, 0, SolveMethod::least_squares);
    }
    // Otherwise the minimum-norm least-squares solution, if it fits.
    if (!well_conditioned) {
        CVec w = CVec::Zero(m);
        for (Eigen::Index i = 0; i < m; ++i) {
            if (ev(i) > floor_ev) {
                w(i) = coef(i) / ev(i);
            }
        }
        if (w.squaredNorm() <= eps) {
            return done(-(eig.eigenvectors() * w), 0.0, 0, SolveMethod::least_squares);
        }
    }

    double lo = 0.0;
    double hi = ev_max > 0.0 ? ev_max : 1.0;
    double n_hi = norm2(hi);
    int doublings = 0;
    while (n_hi >= eps) {
        hi *= 2.0;
        n_hi = norm2(hi);
        if (++doublings > 2000) {
            throw SolverError("LSQI bracket search failed", done(CVec::Zero(m), 0.0, 0, SolveMethod::lsqi), kInf);
        }
    }
    double n_lo = norm2(lo);  // may be +inf-like for singular systems; only used for monotonicity checks
    int it = 0;
    for (; it < opts.max_iterations; ++it) {
        if (std::abs(n_hi - eps) <= opts.norm_tol * eps) {
            break;
        }
        const double mid = 0.5 * (lo + hi);
        const double n_mid = norm2(mid);
        if (n_mid > n_lo * (1.0 + 1e-12) || n_mid < n_hi * (1.0 - 1e-12)) {
            SuppressorSolution best = done(solution(hi), hi, it, SolveMethod::lsqi);
            throw SolverError("LSQI multiplier search lost monotonicity", best, kInf);
        }
        if (n_mid > eps) {
            lo = mid;
            n_lo = n_mid;
        } else {
            hi = mid;
            n_hi = n_mid;
        }
    }
    return done(solution(hi), hi, it + doublings, SolveMethod::lsqi);
}

double joint_objective(const CVec& F_d, const CMat& F_s, const CVec& x, const CMat& embedded_basis,
                       const CVec& s, double lambda)
{
    const double oob = (F_d + F_s * s).norm();
    const double peak = (x + embedded_basis * s).cwiseAbs().maxCoeff();
    return (1.0 - lambda) * oob + lambda * peak;
}

SuppressorSolution solve_joint_admm(const CVec& F_d, const CMat& F_s, const CVec& x, const CMat& basis, double eps,
                                    double lambda, const JointOptions& opts)
{
    const Eigen::Index m = F_s.cols();
    const Eigen::Index nb = F_s.rows();
    const Eigen::Index nt = basis.rows();
    const Eigen::Index total = nb + nt + m;
    const double radius = std::sqrt(eps);

    CMat D(total, m);
    D.topRows(nb) = F_s;
    D.middleRows(nb, nt) = basis;
    D.bottomRows(m).setIdentity();
    CVec offset = CVec::Zero(total);
    offset.head(nb) = F_d;
    offset.segment(nb, nt) = x;

    Eigen::LLT<CMat> chol(D.adjoint() * D);
    CVec y = offset;
    CVec u = CVec::Zero(total);
    CVec s = CVec::Zero(m);
    double rho = 1.0;

    int it = 0;
    bool converged = false;
    for (; it < opts.admm_max_iterations; ++it) {
        s = chol.solve(D.adjoint() * (y - u - offset));
        const CVec Ds = D * s + offset;
        const CVec arg = Ds + u;
        CVec y_new(total);
        y_new.head(nb) = prox_l2(arg.head(nb), (1.0 - lambda) / rho);
        y_new.segment(nb, nt) = prox_linf(arg.segment(nb, nt), lambda / rho);
        y_new.tail(m) = project_ball(arg.tail(m), radius);
        const CVec r = Ds - y_new;
        u += r;
        const double r_pri = r.norm();
        const double r_dual = rho * (D.adjoint() * (y_new - y)).norm();
        y = std::move(y_new);

        const double eps_pri = opts.admm_tol * std::sqrt(static_cast<double>(total)) +
                               opts.admm_tol * std::max(Ds.norm(), y.norm());
        const double eps_dual = opts.admm_tol * std::sqrt(static_cast<double>(m)) +
                                opts.admm_tol * rho * (D.adjoint() * u).norm();
        if (r_pri <= eps_pri && r_dual <= eps_dual) {
            converged = true;
            ++it;
            break;
        }
        // Periodic residual balancing, frozen late so the iteration can
        // settle; u is the scaled dual so it rescales with rho.
        if (it % 50 != 49 || it > opts.admm_max_iterations / 2) {
            continue;
        }
        if (r_pri > 10.0 * r_dual) {
            rho *= 2.0;
            u /= 2.0;
        } else if (r_dual > 10.0 * r_pri) {
            rho /= 2.0;
            u *= 2.0;
        }
    }
    SuppressorSolution sol = finalize(F_d, F_s, x, basis, y.tail(m), eps);
    sol.iterations = it;
    sol.method = SolveMethod::admm;
    sol.duality_gap = kInf;
    if (!converged) {
        throw SolverError("ADMM did not converge", sol, kInf);
    }
    return sol;
}

SuppressorSolution solve_joint(const CVec& F_d, const CMat& F_s, const CVec& x, const CMat& basis, double eps,
                               double lambda, const JointOptions& opts)
{
    if (!(lambda >= 0.0 && lambda <= 1.0)) {
        throw ConfigError("lambda must lie in [0, 1]");
    }
    if (!(eps >= 0.0)) {
        throw ConfigError("power budget must be non-negative");
    }
    const Eigen::Index m = F_s.cols();
    if (basis.cols() != m || basis.rows() != x.size() || F_d.size() != F_s.rows()) {
        throw DimensionError("joint problem dimensions disagree");
    }
    if (eps == 0.0 || m == 0) {
        SuppressorSolution sol = finalize(F_d, F_s, x, basis, CVec::Zero(m), eps);
        sol.method = SolveMethod::none;
        return sol;
    }

    const bool use_oob = lambda < 1.0;
    const bool use_peak = lambda > 0.0;
    const Eigen::Index ns = 2 * m;
    const Eigen::Index iu = ns;
    const Eigen::Index iv = ns + (use_oob ? 1 : 0);
    const Eigen::Index n = ns + (use_oob ? 1 : 0) + (use_peak ? 1 : 0);
    const Eigen::Index nt = x.size();

    // Compress the adjacent-band residual: ||F_d + F_s s||^2 = r_perp^2 + ||a0 + R s||^2.
    Eigen::Index k = 0;
    CMat R;
    CVec a0;
    double r_perp = 0.0;
    if (use_oob) {
        k = std::min(F_s.rows(), m);
        Eigen::HouseholderQR<CMat> qr(F_s);
        const CMat Q = qr.householderQ() * CMat::Identity(F_s.rows(), k);
        R = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
        a0 = Q.adjoint() * F_d;
        r_perp = (F_d - Q * a0).norm();
    }

    std::vector<int> cones;
    Eigen::Index rows = 1 + ns;
    if (use_oob) {
        rows += 2 + 2 * k;
    }
    if (use_peak) {
        rows += 3 * nt;
    }
    socp::ConeProgram prog;
    prog.c = RVec::Zero(n);
    prog.G = RMat::Zero(rows, n);
    prog.h = RVec::Zero(rows);
    Eigen::Index r0 = 0;
    if (use_oob) {
        prog.c(iu) = 1.0 - lambda;
        prog.G(r0, iu) = -1.0;
        prog.h(r0 + 1) = r_perp;
        const RMat Rre = R.real();
        const RMat Rim = R.imag();
        prog.h.segment(r0 + 2, k) = a0.real();
        prog.h.segment(r0 + 2 + k, k) = a0.imag();
        prog.G.block(r0 + 2, 0, k, m) = -Rre;
        prog.G.block(r0 + 2, m, k, m) = Rim;
        prog.G.block(r0 + 2 + k, 0, k, m) = -Rim;
        prog.G.block(r0 + 2 + k, m, k, m) = -Rre;
        cones.push_back(static_cast<int>(2 + 2 * k));
        r0 += 2 + 2 * k;
    }
    if (use_peak) {
        prog.c(iv) = lambda;
        const RMat Pre = basis.real();
        const RMat Pim = basis.imag();
        for (Eigen::Index i = 0; i < nt; ++i) {
            prog.G(r0, iv) = -1.0;
            prog.h(r0 + 1) = x(i).real();
            prog.h(r0 + 2) = x(i).imag();
            prog.G.block(r0 + 1, 0, 1, m) = -Pre.row(i);
            prog.G.block(r0 + 1, m, 1, m) = Pim.row(i);
            prog.G.block(r0 + 2, 0, 1, m) = -Pim.row(i);
            prog.G.block(r0 + 2, m, 1, m) = -Pre.row(i);
            cones.push_back(3);
            r0 += 3;
        }
    }
    prog.h(r0) = std::sqrt(eps);
    prog.G.block(r0 + 1, 0, ns, ns) = -RMat::Identity(ns, ns);
    cones.push_back(static_cast<int>(1 + ns));
    prog.cones = std::move(cones);

    const socp::Result res = socp::solve(prog, opts.socp);
    const CVec s_ipm = res.x.head(m).cast<cd>() + cd(0.0, 1.0) * res.x.segment(m, m).cast<cd>();
    SuppressorSolution sol = finalize(F_d, F_s, x, basis, s_ipm, eps);
    sol.iterations = res.iterations;
    sol.duality_gap = res.gap;
    sol.method = SolveMethod::interior_point;
    if (res.status == socp::Status::optimal) {
        return sol;
    }
    if (!opts.allow_admm_fallback) {
        throw SolverError("interior point: " + socp::to_string(res.status), sol, res.gap);
    }
    try {
        SuppressorSolution alt = solve_joint_admm(F_d, F_s, x, basis, eps, lambda, opts);
        alt.duality_gap = res.gap;
        return alt;
    } catch (const SolverError& err) {
        const double f_ipm = joint_objective(F_d, F_s, x, basis, sol.s, lambda);
        const double f_admm = joint_objective(F_d, F_s, x, basis, err.best_feasible.s, lambda);
        throw SolverError("joint solver did not converge (interior point and ADMM)",
                          f_admm < f_ipm ? err.best_feasible : sol, res.gap);
    }
}

SuppressorSolution design_suppressor(const SystemConfig& cfg, const SpectralOperators& ops, const TimeSymbol& x,
                                     const AlignmentBasis& P, bool* fell_back)
{
    if (fell_back != nullptr) {
        *fell_back = false;
    }
    const double eps = power_budget(cfg.alpha, x);
    SuppressorSolution sol;
    try {
        sol = cfg.lambda == 0.0 ? solve_lsqi(ops.F_d, ops.F_s, eps)
                                : solve_joint(ops.F_d, ops.F_s, x.samples, P.embedded, eps, cfg.lambda);
    } catch (const SolverError& err) {
        if (fell_back != nullptr) {
            *fell_back = true;
        }
        sol = err.best_feasible;
    }
    if (sol.c.samples.size() == 0) {
        sol.c.samples = P.embedded * sol.s;
        sol.objective_papr = (x.samples + sol.c.samples).cwiseAbs().maxCoeff();
    }
    return sol;
}

TimeSymbol assemble_transmit(const TimeSymbol& x, const TimeSymbol& c, PowerPolicy policy, double alpha)
{
    if (c.samples.size() != 0 && c.samples.size() != x.samples.size()) {
        throw DimensionError("suppressing signal length differs from the OFDM symbol");
    }
    TimeSymbol t{c.samples.size() == 0 ? x.samples : CVec(x.samples + c.samples)};
    if (policy == PowerPolicy::shared_budget) {
        t.samples /= std::sqrt(1.0 + alpha);
    }
    return t;
}

double power_budget(double alpha, const TimeSymbol& x)
{
    if (alpha < 0.0) {
        throw ConfigError("alpha must be non-negative");
    }
    return alpha * x.samples.squaredNorm();
}

}  // namespace salign
