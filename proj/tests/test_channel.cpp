// SPDX-License-Identifier: Apache-2.0
//
// irsnoma  C++ toolkit for IRS-assisted mmWave NOMA downlink simulation
// Copyright (C) 2026 the irsnoma contributors
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

#include <doctest.h>

#include <cmath>
#include <complex>

#include "irsnoma/channel.hpp"
#include "irsnoma/rng.hpp"

using namespace irsnoma;

namespace
{
constexpr double kPi = 3.14159265358979323846;

ArrayGeometry small_geometry(int n_tx = 4, int l_x = 2, int l_z = 2)
{
    ArrayGeometry g;
    g.n_tx = n_tx;
    g.l_x = l_x;
    g.l_z = l_z;
    return g;
}
} // namespace

TEST_CASE("ula_response basics")
{
    SUBCASE("broadside gives constant entries")
    {
        const auto r = ula_response(0.0, 4, kPi);
        for (int i = 0; i < 4; ++i)
        {
            CHECK(r(i).real() == doctest::Approx(0.5).epsilon(1e-14));
            CHECK(r(i).imag() == doctest::Approx(0.0).epsilon(1e-14));
        }
    }
    SUBCASE("unit norm for any angle")
    {
        Rng rng(1);
        for (int trial = 0; trial < 50; ++trial)
        {
            const double theta = rng.uniform(-kPi / 2, kPi / 2);
            CHECK(ula_response(theta, 64, kPi).norm() == doctest::Approx(1.0).epsilon(1e-12));
        }
    }
    SUBCASE("endfire two-element with pi phase constant")
    {
        const auto r = ula_response(kPi / 2, 2, kPi);
        const double s = 1.0 / std::sqrt(2.0);
        CHECK(std::abs(r(0) - std::complex<double>(s, 0)) < 1e-12);
        CHECK(std::abs(r(1) - std::complex<double>(-s, 0)) < 1e-12);
    }
    SUBCASE("rejects non-finite angle")
    {
        CHECK_THROWS_AS(ula_response(std::nan(""), 4, kPi), std::invalid_argument);
    }
}

TEST_CASE("upa_response basics")
{
    SUBCASE("vanishing exponents give constant entries")
    {
        const auto r = upa_response(0.0, kPi / 2, 2, 2, kPi);
        for (int i = 0; i < 4; ++i)
            CHECK(std::abs(r(i) - std::complex<double>(0.5, 0)) < 1e-14);
    }
    SUBCASE("unit norm")
    {
        Rng rng(2);
        for (int trial = 0; trial < 50; ++trial)
        {
            const double theta = rng.uniform(-kPi / 2, kPi / 2);
            const double phi = rng.uniform(-kPi / 2, kPi / 2);
            CHECK(upa_response(theta, phi, 4, 8, kPi).norm() ==
                  doctest::Approx(1.0).epsilon(1e-12));
        }
    }
    SUBCASE("single-row grid matches the linear phase ramp")
    {
        const auto r = upa_response(kPi / 2, kPi / 2, 2, 1, kPi);
        const double s = 1.0 / std::sqrt(2.0);
        CHECK(std::abs(r(0) - std::complex<double>(s, 0)) < 1e-12);
        CHECK(std::abs(r(1) - std::complex<double>(-s, 0)) < 1e-12);
    }
    SUBCASE("row-major over (lz, lx)")
    {
        // index 1 must be the lx=1 element, index l_x the lz=1 element
        const double theta = 0.4, phi = 0.3;
        const auto r = upa_response(theta, phi, 3, 2, kPi);
        const double hx = kPi * std::sin(theta) * std::sin(phi);
        const double vz = kPi * std::cos(phi);
        const double scale = 1.0 / std::sqrt(6.0);
        CHECK(std::abs(r(1) - scale * std::exp(std::complex<double>(0, hx))) < 1e-12);
        CHECK(std::abs(r(3) - scale * std::exp(std::complex<double>(0, vz))) < 1e-12);
    }
}

TEST_CASE("sample_path_loss_db")
{
    PathLossModel model;
    model.shadowing = false;
    Rng rng(3);

    SUBCASE("unit distance returns beta1")
    {
        CHECK(sample_path_loss_db(1.0, LinkClass::los, model, rng) ==
              doctest::Approx(61.4).epsilon(1e-12));
    }
    SUBCASE("decade step adds 10*beta2")
    {
        const double a = sample_path_loss_db(10.0, LinkClass::los, model, rng);
        const double b = sample_path_loss_db(100.0, LinkClass::los, model, rng);
        CHECK(b - a == doctest::Approx(20.0).epsilon(1e-10));
    }
    SUBCASE("LoS defaults at 28.28 m")
    {
        CHECK(sample_path_loss_db(28.28, LinkClass::los, model, rng) ==
              doctest::Approx(90.43).epsilon(1e-4));
    }
    SUBCASE("rejects nonpositive distance")
    {
        CHECK_THROWS_AS(sample_path_loss_db(0.0, LinkClass::los, model, rng),
                        std::invalid_argument);
    }
    SUBCASE("shadowing draw is deterministic given the stream")
    {
        PathLossModel shadowed;
        Rng r1(7), r2(7);
        CHECK(sample_path_loss_db(5.0, LinkClass::nlos, shadowed, r1) ==
              sample_path_loss_db(5.0, LinkClass::nlos, shadowed, r2));
    }
}

TEST_CASE("sample_channel_f structure")
{
    const auto geometry = small_geometry();

    SUBCASE("single forced path with all-ones responses")
    {
        std::vector<PathRealization> paths(1);
        paths[0].gain = 1.0;
        paths[0].aoa_azimuth = 0.0;
        paths[0].aoa_elevation = kPi / 2;  // kills both planar exponents
        paths[0].aod_azimuth = 0.0;
        const auto f = assemble_channel_f(geometry, paths);
        for (int r = 0; r < f.rows(); ++r)
            for (int c = 0; c < f.cols(); ++c)
                CHECK(std::abs(f(r, c) - std::complex<double>(1, 0)) < 1e-12);
        const Eigen::JacobiSVD<Eigen::MatrixXcd> svd(f);
        int rank = 0;
        for (int i = 0; i < svd.singularValues().size(); ++i)
            if (svd.singularValues()(i) > 1e-9 * svd.singularValues()(0))
                ++rank;
        CHECK(rank == 1);
    }
    SUBCASE("rank bounded by path count")
    {
        PathLossModel model;
        for (std::uint64_t seed = 0; seed < 10; ++seed)
        {
            Rng rng(seed);
            const auto f = sample_channel_f(geometry, 3, 28.28, model, rng);
            const Eigen::JacobiSVD<Eigen::MatrixXcd> svd(f);
            int rank = 0;
            for (int i = 0; i < svd.singularValues().size(); ++i)
                if (svd.singularValues()(i) > 1e-9 * svd.singularValues()(0))
                    ++rank;
            CHECK(rank <= 3);
        }
    }
    SUBCASE("identical seeds give bitwise-identical draws")
    {
        PathLossModel model;
        Rng r1(42), r2(42);
        const auto f1 = sample_channel_f(geometry, 3, 28.28, model, r1);
        const auto f2 = sample_channel_f(geometry, 3, 28.28, model, r2);
        CHECK((f1 - f2).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("sample_channel_g structure")
{
    const auto geometry = small_geometry();

    SUBCASE("single forced path has constant modulus")
    {
        std::vector<PathRealization> paths(1);
        paths[0].gain = {0.3, 0.4};
        paths[0].aoa_azimuth = 0.2;
        paths[0].aoa_elevation = 0.7;
        const auto g = assemble_channel_g(geometry, paths);
        const double expected = std::abs(paths[0].gain);  // sqrt(L)*|gain|/sqrt(L)
        for (int l = 0; l < g.size(); ++l)
            CHECK(std::abs(g(l)) == doctest::Approx(expected).epsilon(1e-12));
    }
    SUBCASE("mean squared norm grows linearly with the element count")
    {
        PathLossModel model;
        model.shadowing = false;
        const int n_draws = 10000;
        double mean16 = 0.0, mean32 = 0.0;
        Rng rng(11);
        const auto g16 = small_geometry(4, 4, 4);
        const auto g32 = small_geometry(4, 8, 4);
        for (int i = 0; i < n_draws; ++i)
            mean16 += sample_channel_g(g16, 3, 20.0, model, rng).squaredNorm();
        for (int i = 0; i < n_draws; ++i)
            mean32 += sample_channel_g(g32, 3, 20.0, model, rng).squaredNorm();
        const double ratio = mean32 / mean16;
        CHECK(ratio == doctest::Approx(2.0).epsilon(0.05));
    }
    SUBCASE("fixed seed determinism")
    {
        PathLossModel model;
        Rng r1(9), r2(9);
        const auto a = sample_channel_g(geometry, 3, 20.0, model, r1);
        const auto b = sample_channel_g(geometry, 3, 20.0, model, r2);
        CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("effective_channel and cascade_vector")
{
    const auto geometry = small_geometry();
    PathLossModel model;
    Rng rng(5);

    SUBCASE("identity phase matrix reduces to conj(g)' * F")
    {
        const auto f = sample_channel_f(geometry, 3, 28.28, model, rng);
        const auto g = sample_channel_g(geometry, 3, 20.0, model, rng);
        const Eigen::VectorXd phases = Eigen::VectorXd::Zero(geometry.n_irs());
        const auto h = effective_channel(g, phases, f);
        const Eigen::RowVectorXcd expected = g.conjugate().transpose() * f;
        CHECK((h - expected).cwiseAbs().maxCoeff() < 1e-14);
    }
    SUBCASE("|h w| invariant under a common phase offset")
    {
        const auto f = sample_channel_f(geometry, 3, 28.28, model, rng);
        const auto g = sample_channel_g(geometry, 3, 20.0, model, rng);
        Eigen::VectorXd phases(geometry.n_irs());
        for (int l = 0; l < phases.size(); ++l)
            phases(l) = rng.uniform(0.0, 2 * kPi);
        Eigen::VectorXcd w(geometry.n_tx);
        for (int i = 0; i < w.size(); ++i)
            w(i) = rng.complex_normal();
        const double before = std::abs((effective_channel(g, phases, f) * w)(0, 0));
        const Eigen::VectorXd shifted = phases.array() + 1.234;
        const double after = std::abs((effective_channel(g, shifted, f) * w)(0, 0));
        CHECK(before == doctest::Approx(after).epsilon(1e-12));
    }
    SUBCASE("cascade identity z*v == h*w")
    {
        for (int trial = 0; trial < 1000; ++trial)
        {
            const auto f = sample_channel_f(geometry, 3, 28.28, model, rng);
            const auto g = sample_channel_g(geometry, 3, 20.0, model, rng);
            Eigen::VectorXd phases(geometry.n_irs());
            for (int l = 0; l < phases.size(); ++l)
                phases(l) = rng.uniform(0.0, 2 * kPi);
            Eigen::VectorXcd w(geometry.n_tx);
            for (int i = 0; i < w.size(); ++i)
                w(i) = rng.complex_normal();

            const std::complex<double> via_h = (effective_channel(g, phases, f) * w)(0, 0);
            const auto z = cascade_vector(g, f, w);
            Eigen::VectorXcd v(geometry.n_irs());
            for (int l = 0; l < v.size(); ++l)
                v(l) = std::exp(std::complex<double>(0, phases(l)));
            const std::complex<double> via_z = (z * v)(0, 0);
            CHECK(std::abs(via_h - via_z) <= 1e-10 * std::max(1e-30, std::abs(via_h)));
        }
    }
    SUBCASE("cascade with zero beamformer is zero")
    {
        const auto f = sample_channel_f(geometry, 3, 28.28, model, rng);
        const auto g = sample_channel_g(geometry, 3, 20.0, model, rng);
        const auto z = cascade_vector(g, f, Eigen::VectorXcd::Zero(geometry.n_tx));
        CHECK(z.cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("single-element surface reduces to a scalar product")
    {
        const auto tiny = small_geometry(3, 1, 1);
        const auto f = sample_channel_f(tiny, 2, 10.0, model, rng);
        const auto g = sample_channel_g(tiny, 2, 10.0, model, rng);
        Eigen::VectorXcd w(3);
        w << std::complex<double>(1, 2), std::complex<double>(0, -1), std::complex<double>(2, 0);
        const auto z = cascade_vector(g, f, w);
        CHECK(std::abs(z(0) - std::conj(g(0)) * (f * w)(0)) < 1e-14);
    }
    SUBCASE("dimension mismatch throws")
    {
        const auto f = sample_channel_f(geometry, 3, 28.28, model, rng);
        const auto g = sample_channel_g(geometry, 3, 20.0, model, rng);
        CHECK_THROWS_AS(effective_channel(g, Eigen::VectorXd::Zero(2), f),
                        std::invalid_argument);
        CHECK_THROWS_AS(cascade_vector(g, f, Eigen::VectorXcd::Zero(geometry.n_tx + 1)),
                        std::invalid_argument);
    }
}

TEST_CASE("channel serialization round trip")
{
    const auto geometry = small_geometry();
    PathLossModel model;
    Rng rng(21);

    ChannelRealization channel;
    channel.seed = 21;
    channel.f = sample_channel_f(geometry, 3, 28.28, model, rng, &channel.f_paths);
    channel.g_paths.resize(2);
    channel.g.push_back(sample_channel_g(geometry, 3, 20.0, model, rng, &channel.g_paths[0]));
    channel.g.push_back(sample_channel_g(geometry, 3, 22.0, model, rng, &channel.g_paths[1]));

    ArrayGeometry parsed_geometry;
    const auto text = channel_to_json(channel, geometry);
    const auto parsed = channel_from_json(text, &parsed_geometry);

    CHECK(parsed.seed == channel.seed);
    CHECK(parsed_geometry.n_tx == geometry.n_tx);
    CHECK((parsed.f - channel.f).cwiseAbs().maxCoeff() == 0.0);
    REQUIRE(parsed.g.size() == channel.g.size());
    for (std::size_t i = 0; i < parsed.g.size(); ++i)
        CHECK((parsed.g[i] - channel.g[i]).cwiseAbs().maxCoeff() == 0.0);
    CHECK(parsed.f_paths.size() == channel.f_paths.size());
}
