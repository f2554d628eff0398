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

#include "salign/socp.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>

namespace salign::socp {

namespace {

using Seg = Eigen::Ref<const RVec>;

double jdot(const Seg& x, const Seg& y)
{
    const Eigen::Index n = x.size();
    return x(0) * y(0) - x.tail(n - 1).dot(y.tail(n - 1));
}

struct Layout {
    std::vector<Eigen::Index> offset;
    std::vector<Eigen::Index> dim;
};

Layout make_layout(const std::vector<int>& cones, Eigen::Index rows)
{
    Layout lay;
    Eigen::Index o = 0;
    for (int q : cones) {
        if (q < 1) {
            throw ConfigError("cone dimensions must be positive");
        }
        lay.offset.push_back(o);
        lay.dim.push_back(q);
        o += q;
    }
    if (o != rows) {
        throw DimensionError("cone dimensions do not add up to the rows of G");
    }
    return lay;
}

// Jordan product x o y, blockwise.
RVec jordan(const Layout& lay, const RVec& x, const RVec& y)
{
    RVec out(x.size());
    for (std::size_t k = 0; k < lay.dim.size(); ++k) {
        const auto o = lay.offset[k];
        const auto q = lay.dim[k];
        out(o) = x.segment(o, q).dot(y.segment(o, q));
        if (q > 1) {
            out.segment(o + 1, q - 1) = x(o) * y.segment(o + 1, q - 1) + y(o) * x.segment(o + 1, q - 1);
        }
    }
    return out;
}

// Solves x o out = w for out, blockwise (x interior).
RVec jordan_divide(const Layout& lay, const RVec& x, const RVec& w)
{
    RVec out(x.size());
    for (std::size_t k = 0; k < lay.dim.size(); ++k) {
        const auto o = lay.offset[k];
        const auto q = lay.dim[k];
        const double x0 = x(o);
        if (q == 1) {
            out(o) = w(o) / x0;
            continue;
        }
        const auto x1 = x.segment(o + 1, q - 1);
        const auto w1 = w.segment(o + 1, q - 1);
        const double det = x0 * x0 - x1.squaredNorm();
        const double v0 = (x0 * w(o) - x1.dot(w1)) / det;
        out(o) = v0;
        out.segment(o + 1, q - 1) = (w1 - v0 * x1) / x0;
    }
    return out;
}

// Smallest t with x + t*e in the cone, blockwise max.
double boundary_shift(const Layout& lay, const RVec& x)
{
    double t = -kInf;
    for (std::size_t k = 0; k < lay.dim.size(); ++k) {
        const auto o = lay.offset[k];
        const auto q = lay.dim[k];
        const double tail = q > 1 ? x.segment(o + 1, q - 1).norm() : 0.0;
        t = std::max(t, tail - x(o));
    }
    return t;
}

void add_identity(const Layout& lay, RVec& x, double amount)
{
    for (auto o : lay.offset) {
        x(o) += amount;
    }
}

struct Scalings {
    RVec beta;
    RVec v;  // concatenated per cone
};

bool compute_scalings(const Layout& lay, const RVec& s, const RVec& z, Scalings& out)
{
    out.beta.resize(static_cast<Eigen::Index>(lay.dim.size()));
    out.v.resize(s.size());
    for (std::size_t k = 0; k < lay.dim.size(); ++k) {
        const auto o = lay.offset[k];
        const auto q = lay.dim[k];
        const double ss = jdot(s.segment(o, q), s.segment(o, q));
        const double zz = jdot(z.segment(o, q), z.segment(o, q));
        if (!(ss > 0.0) || !(zz > 0.0) || s(o) <= 0.0 || z(o) <= 0.0) {
            return false;
        }
        const double sn = std::sqrt(ss);
        const double zn = std::sqrt(zz);
        const RVec sb = s.segment(o, q) / sn;
        RVec zb = z.segment(o, q) / zn;
        const double gamma = std::sqrt(0.5 * (1.0 + sb.dot(zb)));
        zb.tail(q - 1) *= -1.0;  // J zbar
        RVec w = (sb + zb) / (2.0 * gamma);
        w(0) += 1.0;
        out.v.segment(o, q) = w / std::sqrt(2.0 * w(0));
        out.beta(static_cast<Eigen::Index>(k)) = std::sqrt(sn / zn);
    }
    return true;
}

// W y blockwise: beta (2 v v'y - J y).
RVec scale(const Layout& lay, const Scalings& sc, const RVec& y)
{
    RVec out(y.size());
    for (std::size_t k = 0; k < lay.dim.size(); ++k) {
        const auto o = lay.offset[k];
        const auto q = lay.dim[k];
        const double b = sc.beta(static_cast<Eigen::Index>(k));
        const auto v = sc.v.segment(o, q);
        const double vy = v.dot(y.segment(o, q));
        out.segment(o, q) = 2.0 * vy * v;
        out(o) -= y(o);
        out.segment(o + 1, q - 1) += y.segment(o + 1, q - 1);
        out.segment(o, q) *= b;
    }
    return out;
}

// W^-1 y blockwise: (2 Jv (Jv)'y - J y) / beta.
RVec scale_inverse(const Layout& lay, const Scalings& sc, const RVec& y)
{
    RVec out(y.size());
    for (std::size_t k = 0; k < lay.dim.size(); ++k) {
        const auto o = lay.offset[k];
        const auto q = lay.dim[k];
        const double b = sc.beta(static_cast<Eigen::Index>(k));
        const double* v = sc.v.data() + o;
        double jvy = v[0] * y(o);
        for (Eigen::Index i = 1; i < q; ++i) {
            jvy -= v[i] * y(o + i);
        }
        out(o) = (2.0 * jvy * v[0] - y(o)) / b;
        for (Eigen::Index i = 1; i < q; ++i) {
            out(o + i) = (-2.0 * jvy * v[i] + y(o + i)) / b;
        }
    }
    return out;
}

void scale_inverse_rows(const Layout& lay, const Scalings& sc, const RMat& G, RMat& out)
{
    out.resize(G.rows(), G.cols());
    const Eigen::Index cols = G.cols();
    for (std::size_t k = 0; k < lay.dim.size(); ++k) {
        const auto o = lay.offset[k];
        const auto q = lay.dim[k];
        const double inv_b = 1.0 / sc.beta(static_cast<Eigen::Index>(k));
        const double* v = sc.v.data() + o;
        for (Eigen::Index j = 0; j < cols; ++j) {
            const double* g = G.data() + j * G.rows() + o;
            double* dst = out.data() + j * out.rows() + o;
            double t = v[0] * g[0];
            for (Eigen::Index i = 1; i < q; ++i) {
                t -= v[i] * g[i];
            }
            t *= 2.0 * inv_b;
            dst[0] = t * v[0] - g[0] * inv_b;
            for (Eigen::Index i = 1; i < q; ++i) {
                dst[i] = -t * v[i] + g[i] * inv_b;
            }
        }
    }
}

double max_step(const Layout& lay, const RVec& x, const RVec& d)
{
    double t = kInf;
    for (std::size_t k = 0; k < lay.dim.size(); ++k) {
        const auto o = lay.offset[k];
        const auto q = lay.dim[k];
        t = std::min(t, max_cone_step(x.segment(o, q), d.segment(o, q)));
    }
    return t;
}

}  // namespace

std::string to_string(Status s)
{
    switch (s) {
    case Status::optimal: return "optimal";
    case Status::iteration_limit: return "iteration_limit";
    case Status::numerical_failure: return "numerical_failure";
    }
    return "unknown";
}

RVec NtScaling::apply(const RVec& y) const
{
    RVec out = 2.0 * v.dot(y) * v;
    out(0) -= y(0);
    out.tail(y.size() - 1) += y.tail(y.size() - 1);
    return beta * out;
}

RVec NtScaling::apply_inverse(const RVec& y) const
{
    RVec jv = v;
    jv.tail(v.size() - 1) *= -1.0;
    RVec out = 2.0 * jv.dot(y) * jv;
    out(0) -= y(0);
    out.tail(y.size() - 1) += y.tail(y.size() - 1);
    return out / beta;
}

NtScaling nt_scaling(const RVec& s, const RVec& z)
{
    const Layout lay = make_layout({static_cast<int>(s.size())}, s.size());
    Scalings sc;
    if (!compute_scalings(lay, s, z, sc)) {
        throw DimensionError("nt_scaling needs interior points");
    }
    return NtScaling{sc.beta(0), sc.v};
}

double max_cone_step(const Eigen::Ref<const RVec>& x, const Eigen::Ref<const RVec>& d)
{
    const Eigen::Index q = x.size();
    if (q == 1) {
        return d(0) < 0.0 ? -x(0) / d(0) : kInf;
    }
    const auto x1 = x.tail(q - 1);
    const auto d1 = d.tail(q - 1);
    // f(t) = (x0 + t d0)^2 - ||x1 + t d1||^2 = a t^2 + 2 b t + c, c > 0.
    const double a = d(0) * d(0) - d1.squaredNorm();
    const double b = x(0) * d(0) - x1.dot(d1);
    const double c = x(0) * x(0) - x1.squaredNorm();
    double best = kInf;
    auto consider = [&](double t) {
        if (t > 0.0 && x(0) + t * d(0) >= -1e-300) {
            best = std::min(best, t);
        }
    };
    if (a == 0.0) {
        if (b < 0.0) {
            consider(-c / (2.0 * b));
        }
    } else {
        const double disc = b * b - a * c;
        if (disc >= 0.0) {
            const double root = std::sqrt(disc);
            const double qq = -(b + std::copysign(root, b));
            if (qq != 0.0) {
                consider(qq / a);
                consider(c / qq);
            } else {
                consider(-b / a);
            }
        }
    }
    // Leaving through the apex means x0 + t d0 hits zero first.
    if (d(0) < 0.0) {
        best = std::min(best, -x(0) / d(0));
    }
    return best;
}

Result solve(const ConeProgram& prog, const Options& opts)
{
    const RMat& G = prog.G;
    const RVec& h = prog.h;
    const RVec& c = prog.c;
    const Eigen::Index n = G.cols();
    if (c.size() != n || h.size() != G.rows()) {
        throw DimensionError("cone program dimensions are inconsistent");
    }
    const Layout lay = make_layout(prog.cones, G.rows());
    const double degree = static_cast<double>(lay.dim.size());

    Result res;

    // Starting point: least-squares primal, least-norm dual, shifted inside.
    RMat GtG = G.transpose() * G;
    Eigen::LLT<RMat> start(GtG);
    if (start.info() != Eigen::Success) {
        throw DimensionError("G must have full column rank");
    }
    RVec x = start.solve(G.transpose() * h);
    RVec s = h - G * x;
    RVec z = -G * start.solve(c);
    {
        const double ts = boundary_shift(lay, s);
        if (ts >= -1e-8 * std::max(1.0, s.norm())) {
            add_identity(lay, s, 1.0 + ts);
        }
        const double tz = boundary_shift(lay, z);
        if (tz >= -1e-8 * std::max(1.0, z.norm())) {
            add_identity(lay, z, 1.0 + tz);
        }
    }

    const double hnorm = std::max(1.0, h.norm());
    const double cnorm = std::max(1.0, c.norm());

    Scalings sc;
    RMat Gt;
    RMat K(n, n);
    RVec e = RVec::Zero(G.rows());
    add_identity(lay, e, 1.0);

    auto finish = [&](Status st, int it) {
        res.x = x;
        res.s = s;
        res.z = z;
        res.primal_objective = c.dot(x);
        res.dual_objective = -h.dot(z);
        res.gap = s.dot(z);
        res.primal_residual = (s + G * x - h).norm() / hnorm;
        res.dual_residual = (G.transpose() * z + c).norm() / cnorm;
        res.iterations = it;
        res.status = st;
        return res;
    };

    for (int it = 0; it <= opts.max_iterations; ++it) {
        const RVec rx = G.transpose() * z + c;
        const RVec rz = s + G * x - h;
        const double pcost = c.dot(x);
        const double gap = s.dot(z);
        const double pres = rz.norm() / hnorm;
        const double dres = rx.norm() / cnorm;
        if (pres <= opts.feas_tol && dres <= opts.feas_tol && gap <= opts.gap_tol * (1.0 + std::abs(pcost))) {
            return finish(Status::optimal, it);
        }
        if (it == opts.max_iterations) {
            break;
        }
        if (!compute_scalings(lay, s, z, sc)) {
            return finish(Status::numerical_failure, it);
        }
        const RVec lambda = scale(lay, sc, z);
        const RVec lambda_sq = jordan(lay, lambda, lambda);

        scale_inverse_rows(lay, sc, G, Gt);
        K.setZero();
        K.selfadjointView<Eigen::Lower>().rankUpdate(Gt.transpose());
        Eigen::LLT<RMat, Eigen::Lower> llt(K);
        if (llt.info() != Eigen::Success) {
            return finish(Status::numerical_failure, it);
        }
        const RVec rz_scaled = scale_inverse(lay, sc, rz);

        RVec dx;
        RVec ds_scaled;
        RVec dz_scaled;
        auto newton = [&](const RVec& target) {
            const RVec q = jordan_divide(lay, lambda, target);
            const RVec shifted = q + rz_scaled;
            dx = llt.solve(-rx - Gt.transpose() * shifted);
            dz_scaled = Gt * dx + shifted;
            ds_scaled = q - dz_scaled;
        };

        newton(-lambda_sq);
        const double step_aff =
            std::min({1.0, max_step(lay, lambda, ds_scaled), max_step(lay, lambda, dz_scaled)});
        const double mu = gap / degree;
        const double sigma = std::pow(1.0 - step_aff, 3);

        const RVec corr = jordan(lay, ds_scaled, dz_scaled);
        newton(-lambda_sq - corr + sigma * mu * e);

        const double tmax = std::min(max_step(lay, lambda, ds_scaled), max_step(lay, lambda, dz_scaled));
        const double step = std::min(1.0, opts.step_fraction * tmax);
        if (!(step > 0.0) || !std::isfinite(step)) {
            return finish(Status::numerical_failure, it);
        }
        x += step * dx;
        s += step * scale(lay, sc, ds_scaled);
        z += step * scale_inverse(lay, sc, dz_scaled);
    }
    return finish(Status::iteration_limit, opts.max_iterations);
}

}  // namespace salign::socp
