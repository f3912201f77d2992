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

#include "irsnoma/channel.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace irsnoma
{

namespace
{
constexpr double kPi = 3.14159265358979323846;
constexpr std::complex<double> kJ{0.0, 1.0};

void require(bool condition, const char *message)
{
    if (!condition)
        throw std::invalid_argument(message);
}
} // namespace

void ArrayGeometry::validate() const
{
    require(n_tx >= 1, "ArrayGeometry: n_tx must be >= 1");
    require(l_x >= 1 && l_z >= 1, "ArrayGeometry: l_x and l_z must be >= 1");
    require(antenna_spacing > 0.0 && std::isfinite(antenna_spacing),
            "ArrayGeometry: antenna_spacing must be positive and finite");
    require(carrier_wavelength > 0.0 && std::isfinite(carrier_wavelength),
            "ArrayGeometry: carrier_wavelength must be positive and finite");
    require(std::isfinite(phase_const()) && phase_const() > 0.0,
            "ArrayGeometry: derived phase constant must be positive and finite");
}

void ChannelRealization::validate(const ArrayGeometry &geometry) const
{
    require(f.rows() == geometry.n_irs() && f.cols() == geometry.n_tx,
            "ChannelRealization: F has inconsistent dimensions");
    require(f.allFinite(), "ChannelRealization: F has non-finite entries");
    for (const auto &gk : g)
    {
        require(gk.size() == geometry.n_irs(), "ChannelRealization: g has inconsistent length");
        require(gk.allFinite(), "ChannelRealization: g has non-finite entries");
    }
}

Eigen::VectorXcd ula_response(double theta, int n, double phase_const)
{
    require(std::isfinite(theta), "ula_response: theta must be finite");
    require(theta >= -kPi / 2 - 1e-12 && theta <= kPi / 2 + 1e-12,
            "ula_response: theta outside [-pi/2, pi/2]");
    require(n >= 1, "ula_response: n must be >= 1");

    const double step = phase_const * std::sin(theta);
    const double scale = 1.0 / std::sqrt(static_cast<double>(n));
    Eigen::VectorXcd response(n);
    for (int i = 0; i < n; ++i)
        response(i) = scale * std::exp(kJ * (step * static_cast<double>(i)));
    return response;
}

Eigen::VectorXcd upa_response(double theta, double phi, int l_x, int l_z, double phase_const)
{
    require(std::isfinite(theta) && std::isfinite(phi), "upa_response: angles must be finite");
    require(theta >= -kPi / 2 - 1e-12 && theta <= kPi / 2 + 1e-12,
            "upa_response: theta outside [-pi/2, pi/2]");
    require(phi >= -kPi / 2 - 1e-12 && phi <= kPi / 2 + 1e-12,
            "upa_response: phi outside [-pi/2, pi/2]");
    require(l_x >= 1 && l_z >= 1, "upa_response: grid sizes must be >= 1");

    const double horizontal = phase_const * std::sin(theta) * std::sin(phi);
    const double vertical = phase_const * std::cos(phi);
    const double scale = 1.0 / std::sqrt(static_cast<double>(l_x) * static_cast<double>(l_z));

    Eigen::VectorXcd response(l_x * l_z);
    for (int iz = 0; iz < l_z; ++iz)
        for (int ix = 0; ix < l_x; ++ix)
            response(iz * l_x + ix) =
                scale * std::exp(kJ * (horizontal * static_cast<double>(ix) +
                                       vertical * static_cast<double>(iz)));
    return response;
}

double sample_path_loss_db(double distance, LinkClass link_class, const PathLossModel &model,
                           Rng &rng)
{
    require(distance > 0.0 && std::isfinite(distance),
            "sample_path_loss_db: distance must be positive");
    const PathLossParams &params = model.params(link_class);
    const double shadow = model.shadowing ? params.shadow_sigma_db * rng.normal() : 0.0;
    return params.beta1_db + 10.0 * params.beta2 * std::log10(distance) + shadow;
}

std::vector<PathRealization> sample_paths(int n_paths, double distance,
                                          const PathLossModel &model, bool with_ula_aod,
                                          Rng &rng)
{
    require(n_paths >= 1, "sample_paths: n_paths must be >= 1");
    require(distance > 0.0 && std::isfinite(distance),
            "sample_paths: distance must be positive");

    // One shadowing deviate per link, scaled by each path class' sigma.
    const double shadow_deviate = model.shadowing ? rng.normal() : 0.0;

    std::vector<PathRealization> paths(n_paths);
    for (int n = 0; n < n_paths; ++n)
    {
        const LinkClass link_class = (n == 0) ? LinkClass::los : LinkClass::nlos;
        const PathLossParams &params = model.params(link_class);
        const double loss_db = params.beta1_db + 10.0 * params.beta2 * std::log10(distance) +
                               params.shadow_sigma_db * shadow_deviate;
        const double variance = std::pow(10.0, -0.1 * loss_db);

        PathRealization &path = paths[n];
        path.gain = rng.complex_normal(variance);
        path.aoa_azimuth = rng.uniform(-kPi / 2, kPi / 2);
        path.aoa_elevation = rng.uniform(-kPi / 2, kPi / 2);
        path.aod_azimuth = with_ula_aod ? rng.uniform(-kPi / 2, kPi / 2) : 0.0;
    }
    return paths;
}

Eigen::MatrixXcd assemble_channel_f(const ArrayGeometry &geometry,
                                    const std::vector<PathRealization> &paths)
{
    geometry.validate();
    require(!paths.empty(), "assemble_channel_f: needs at least one path");

    const double pc = geometry.phase_const();
    const double scale = std::sqrt(static_cast<double>(geometry.n_tx) *
                                   static_cast<double>(geometry.n_irs()) /
                                   static_cast<double>(paths.size()));

    Eigen::MatrixXcd f = Eigen::MatrixXcd::Zero(geometry.n_irs(), geometry.n_tx);
    for (const PathRealization &path : paths)
    {
        const Eigen::VectorXcd irs = upa_response(path.aoa_azimuth, path.aoa_elevation,
                                                  geometry.l_x, geometry.l_z, pc);
        const Eigen::VectorXcd bs = ula_response(path.aod_azimuth, geometry.n_tx, pc);
        f.noalias() += (scale * path.gain) * (irs * bs.adjoint());
    }
    return f;
}

Eigen::VectorXcd assemble_channel_g(const ArrayGeometry &geometry,
                                    const std::vector<PathRealization> &paths)
{
    geometry.validate();
    require(!paths.empty(), "assemble_channel_g: needs at least one path");

    const double pc = geometry.phase_const();
    const double scale =
        std::sqrt(static_cast<double>(geometry.n_irs()) / static_cast<double>(paths.size()));

    Eigen::VectorXcd g = Eigen::VectorXcd::Zero(geometry.n_irs());
    for (const PathRealization &path : paths)
        g.noalias() += (scale * path.gain) *
                       upa_response(path.aoa_azimuth, path.aoa_elevation, geometry.l_x,
                                    geometry.l_z, pc);
    return g;
}

Eigen::MatrixXcd sample_channel_f(const ArrayGeometry &geometry, int n_paths,
                                  double bs_irs_distance, const PathLossModel &model, Rng &rng,
                                  std::vector<PathRealization> *paths_out)
{
    auto paths = sample_paths(n_paths, bs_irs_distance, model, /*with_ula_aod=*/true, rng);
    Eigen::MatrixXcd f = assemble_channel_f(geometry, paths);
    if (paths_out)
        *paths_out = std::move(paths);
    return f;
}

Eigen::VectorXcd sample_channel_g(const ArrayGeometry &geometry, int n_paths,
                                  double irs_user_distance, const PathLossModel &model, Rng &rng,
                                  std::vector<PathRealization> *paths_out)
{
    auto paths = sample_paths(n_paths, irs_user_distance, model, /*with_ula_aod=*/false, rng);
    Eigen::VectorXcd g = assemble_channel_g(geometry, paths);
    if (paths_out)
        *paths_out = std::move(paths);
    return g;
}

Eigen::RowVectorXcd effective_channel(const Eigen::VectorXcd &g, const Eigen::VectorXd &phases,
                                      const Eigen::MatrixXcd &f)
{
    require(g.size() == f.rows(), "effective_channel: g length must match rows of F");
    require(phases.size() == f.rows(), "effective_channel: phases length must match rows of F");

    Eigen::VectorXcd weighted(g.size());
    for (Eigen::Index l = 0; l < g.size(); ++l)
        weighted(l) = std::conj(g(l)) * std::exp(kJ * phases(l));
    return weighted.transpose() * f;
}

Eigen::RowVectorXcd cascade_vector(const Eigen::VectorXcd &g, const Eigen::MatrixXcd &f,
                                   const Eigen::VectorXcd &w)
{
    require(g.size() == f.rows(), "cascade_vector: g length must match rows of F");
    require(w.size() == f.cols(), "cascade_vector: w length must match cols of F");

    const Eigen::VectorXcd fw = f * w;
    Eigen::RowVectorXcd z(g.size());
    for (Eigen::Index l = 0; l < g.size(); ++l)
        z(l) = std::conj(g(l)) * fw(l);
    return z;
}

namespace
{

nlohmann::json complex_matrix_to_json(const Eigen::MatrixXcd &m)
{
    nlohmann::json j;
    j["rows"] = m.rows();
    j["cols"] = m.cols();
    std::vector<double> re, im;
    re.reserve(m.size());
    im.reserve(m.size());
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c)
        {
            re.push_back(m(r, c).real());
            im.push_back(m(r, c).imag());
        }
    j["re"] = re;
    j["im"] = im;
    return j;
}

Eigen::MatrixXcd complex_matrix_from_json(const nlohmann::json &j)
{
    const Eigen::Index rows = j.at("rows").get<Eigen::Index>();
    const Eigen::Index cols = j.at("cols").get<Eigen::Index>();
    const auto re = j.at("re").get<std::vector<double>>();
    const auto im = j.at("im").get<std::vector<double>>();
    if (re.size() != static_cast<std::size_t>(rows * cols) || re.size() != im.size())
        throw std::invalid_argument("channel JSON: re/im size mismatch with shape header");
    Eigen::MatrixXcd m(rows, cols);
    std::size_t idx = 0;
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c, ++idx)
            m(r, c) = {re[idx], im[idx]};
    return m;
}

nlohmann::json paths_to_json(const std::vector<PathRealization> &paths)
{
    nlohmann::json j = nlohmann::json::array();
    for (const auto &p : paths)
        j.push_back({{"gain_re", p.gain.real()},
                     {"gain_im", p.gain.imag()},
                     {"aoa_azimuth", p.aoa_azimuth},
                     {"aoa_elevation", p.aoa_elevation},
                     {"aod_azimuth", p.aod_azimuth}});
    return j;
}

std::vector<PathRealization> paths_from_json(const nlohmann::json &j)
{
    std::vector<PathRealization> paths;
    for (const auto &e : j)
    {
        PathRealization p;
        p.gain = {e.at("gain_re").get<double>(), e.at("gain_im").get<double>()};
        p.aoa_azimuth = e.at("aoa_azimuth").get<double>();
        p.aoa_elevation = e.at("aoa_elevation").get<double>();
        p.aod_azimuth = e.at("aod_azimuth").get<double>();
        paths.push_back(p);
    }
    return paths;
}

} // namespace

std::string channel_to_json(const ChannelRealization &channel, const ArrayGeometry &geometry)
{
    nlohmann::json j;
    j["format"] = "irsnoma-channel-v1";
    j["seed"] = channel.seed;
    j["geometry"] = {{"n_tx", geometry.n_tx},
                     {"l_x", geometry.l_x},
                     {"l_z", geometry.l_z},
                     {"antenna_spacing", geometry.antenna_spacing},
                     {"carrier_wavelength", geometry.carrier_wavelength}};
    j["f"] = complex_matrix_to_json(channel.f);
    j["g"] = nlohmann::json::array();
    for (const auto &gk : channel.g)
        j["g"].push_back(complex_matrix_to_json(gk));
    j["f_paths"] = paths_to_json(channel.f_paths);
    j["g_paths"] = nlohmann::json::array();
    for (const auto &paths : channel.g_paths)
        j["g_paths"].push_back(paths_to_json(paths));
    return j.dump(2);
}

ChannelRealization channel_from_json(const std::string &text, ArrayGeometry *geometry_out)
{
    const nlohmann::json j = nlohmann::json::parse(text);
    if (j.at("format").get<std::string>() != "irsnoma-channel-v1")
        throw std::invalid_argument("channel JSON: unknown format tag");

    ArrayGeometry geometry;
    geometry.n_tx = j.at("geometry").at("n_tx").get<int>();
    geometry.l_x = j.at("geometry").at("l_x").get<int>();
    geometry.l_z = j.at("geometry").at("l_z").get<int>();
    geometry.antenna_spacing = j.at("geometry").at("antenna_spacing").get<double>();
    geometry.carrier_wavelength = j.at("geometry").at("carrier_wavelength").get<double>();

    ChannelRealization channel;
    channel.seed = j.at("seed").get<std::uint64_t>();
    channel.f = complex_matrix_from_json(j.at("f"));
    for (const auto &gj : j.at("g"))
        channel.g.push_back(complex_matrix_from_json(gj));
    channel.f_paths = paths_from_json(j.at("f_paths"));
    for (const auto &pj : j.at("g_paths"))
        channel.g_paths.push_back(paths_from_json(pj));

    channel.validate(geometry);
    if (geometry_out)
        *geometry_out = geometry;
    return channel;
}

void save_channel(const ChannelRealization &channel, const ArrayGeometry &geometry,
                  const std::string &path)
{
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("save_channel: cannot open " + path);
    out << channel_to_json(channel, geometry);
}

ChannelRealization load_channel(const std::string &path, ArrayGeometry *geometry_out)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("load_channel: cannot open " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return channel_from_json(buffer.str(), geometry_out);
}

} // namespace irsnoma
