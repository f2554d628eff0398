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

#include <doctest.h>

using namespace salign;
using namespace salign::socp;

TEST_CASE("max_cone_step")
{
    RVec x(3);
    x << 2.0, 0.0, 0.0;
    RVec d(3);
    d << 0.0, 1.0, 0.0;
    CHECK(max_cone_step(x, d) == doctest::Approx(2.0));
    d << 1.0, 0.0, 0.0;
    CHECK(max_cone_step(x, d) == kInf);
    RVec h(1);
    h << 3.0;
    RVec dh(1);
    dh << -1.5;
    CHECK(max_cone_step(h, dh) == doctest::Approx(2.0));

    // the step lands on the boundary
    Rng rng = make_stream(41, 0, 0);
    std::normal_distribution<double> g(0.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        RVec y(4);
        RVec dy(4);
        for (int i = 0; i < 4; ++i) {
            y(i) = g(rng);
            dy(i) = g(rng);
        }
        y(0) = y.tail(3).norm() + 0.5;
        const double t = max_cone_step(y, dy);
        if (std::isfinite(t)) {
            const RVec e = y + t * dy;
            CHECK(e(0) == doctest::Approx(e.tail(3).norm()).epsilon(1e-9));
        }
    }
}

TEST_CASE("nt scaling maps s and z to the same point")
{
    Rng rng = make_stream(42, 0, 0);
    std::normal_distribution<double> g(0.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        RVec s(5);
        RVec z(5);
        for (int i = 0; i < 5; ++i) {
            s(i) = g(rng);
            z(i) = g(rng);
        }
        s(0) = s.tail(4).norm() + 0.1 + std::abs(g(rng));
        z(0) = z.tail(4).norm() + 0.1 + std::abs(g(rng));
        const NtScaling w = nt_scaling(s, z);
        CHECK((w.apply(z) - w.apply_inverse(s)).norm() < 1e-9 * (1.0 + s.norm() + z.norm()));
        CHECK((w.apply(w.apply_inverse(s)) - s).norm() < 1e-10 * s.norm());
    }
    RVec outside(2);
    outside << 0.0, 1.0;
    CHECK_THROWS(nt_scaling(outside, outside));
}

TEST_CASE("linear program on the half line cones")
{
    // min -x1 - x2  s.t.  x1 + 2 x2 <= 4, 3 x1 + x2 <= 6, x >= 0  -> (1.6, 1.2)
    ConeProgram p;
    p.c = RVec(2);
    p.c << -1.0, -1.0;
    p.G = RMat(4, 2);
    p.G << 1, 2, 3, 1, -1, 0, 0, -1;
    p.h = RVec(4);
    p.h << 4, 6, 0, 0;
    p.cones = {1, 1, 1, 1};
    const Result r = solve(p);
    REQUIRE(r.status == Status::optimal);
    CHECK(r.x(0) == doctest::Approx(1.6).epsilon(1e-6));
    CHECK(r.x(1) == doctest::Approx(1.2).epsilon(1e-6));
    CHECK(r.primal_objective == doctest::Approx(-2.8).epsilon(1e-7));
}

TEST_CASE("second-order cone: linear objective over a disc")
{
    // min -x1 - x2  s.t. ||x|| <= 1  ->  -sqrt(2)
    ConeProgram p;
    p.c = RVec(2);
    p.c << -1.0, -1.0;
    p.G = RMat::Zero(3, 2);
    p.G(1, 0) = -1.0;
    p.G(2, 1) = -1.0;
    p.h = RVec::Zero(3);
    p.h(0) = 1.0;
    p.cones = {3};
    const Result r = solve(p);
    REQUIRE(r.status == Status::optimal);
    CHECK(r.primal_objective == doctest::Approx(-std::sqrt(2.0)).epsilon(1e-7));
    CHECK(r.dual_objective == doctest::Approx(-std::sqrt(2.0)).epsilon(1e-6));
    CHECK(r.gap <= 1e-6);
}

TEST_CASE("least distance in a box: mixed cones")
{
    // min t  s.t. ||x - a|| <= t, 0 <= x <= 1, a = (2, 0.5, -1)  ->  x = (1, 0.5, 0), t = sqrt(2)
    ConeProgram p;
    p.c = RVec::Zero(4);
    p.c(3) = 1.0;  // variables (x1, x2, x3, t)
    p.G = RMat::Zero(4 + 6, 4);
    p.h = RVec::Zero(10);
    p.G(0, 3) = -1.0;
    const double a[3] = {2.0, 0.5, -1.0};
    for (int i = 0; i < 3; ++i) {
        p.G(1 + i, i) = -1.0;
        p.h(1 + i) = -a[i];
        p.G(4 + 2 * i, i) = 1.0;  // x <= 1
        p.h(4 + 2 * i) = 1.0;
        p.G(5 + 2 * i, i) = -1.0;  // x >= 0
    }
    p.cones = {4, 1, 1, 1, 1, 1, 1};
    const Result r = solve(p);
    REQUIRE(r.status == Status::optimal);
    CHECK(r.x(3) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-6));
    CHECK(r.x(0) == doctest::Approx(1.0).epsilon(1e-5));
    CHECK(r.x(1) == doctest::Approx(0.5).epsilon(1e-5));
    CHECK(std::abs(r.x(2)) < 1e-5);
}

TEST_CASE("malformed programs are rejected")
{
    ConeProgram p;
    p.c = RVec::Ones(2);
    p.G = RMat::Identity(3, 2);
    p.h = RVec::Ones(3);
    p.cones = {2};
    CHECK_THROWS_AS(solve(p), DimensionError);
}
