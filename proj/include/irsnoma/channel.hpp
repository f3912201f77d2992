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

#ifndef irsnoma_channel_H
#define irsnoma_channel_H

#include <complex>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "irsnoma/rng.hpp"

namespace irsnoma
{

/// Transmit array at the BS (uniform linear, n_tx elements) and reflecting
/// surface (uniform planar, l_x horizontal by l_z vertical elements).
struct ArrayGeometry
{
    int n_tx = 64;
    int l_x = 10;
    int l_z = 10;
    double antenna_spacing = 0.5 * 0.0107068735;  // half wavelength at 28 GHz [m]
    double carrier_wavelength = 0.0107068735;     // c / 28 GHz [m]

    int n_irs() const { return l_x * l_z; }

    /// 2*pi*d/lambda, the per-element phase progression constant.
    double phase_const() const
    {
        return 2.0 * 3.14159265358979323846 * antenna_spacing / carrier_wavelength;
    }

    void validate() const;
};

enum class LinkClass
{
    los,
    nlos
};

/// Distance-power law P(d) = beta1 + 10*beta2*log10(d) + beta3 in dB, with
/// beta3 a zero-mean Gaussian shadowing term of class-dependent deviation.
struct PathLossParams
{
    double beta1_db = 61.4;
    double beta2 = 2.0;
    double shadow_sigma_db = 5.8;
};

/// Defaults are a common 28 GHz fit: LoS (61.4, 2.0, 5.8 dB) and
/// NLoS (72.0, 2.92, 8.7 dB). Both are configuration-overridable.
struct PathLossModel
{
    PathLossParams los{61.4, 2.0, 5.8};
    PathLossParams nlos{72.0, 2.92, 8.7};
    bool shadowing = true;

    const PathLossParams &params(LinkClass c) const { return c == LinkClass::los ? los : nlos; }
};

/// One propagation path of a clustered mmWave channel. The azimuth/elevation
/// pair is the planar-array angle at the IRS (arrival for the BS link,
/// departure for the user links); aod_azimuth is the linear-array departure
/// angle at the BS and is unused for IRS-to-user paths.
struct PathRealization
{
    std::complex<double> gain{0.0, 0.0};
    double aoa_azimuth = 0.0;
    double aoa_elevation = 0.0;
    double aod_azimuth = 0.0;
};

/// One draw of the full propagation state: BS-to-IRS matrix, one IRS-to-user
/// vector per user, and per-link path metadata for reproducibility.
struct ChannelRealization
{
    Eigen::MatrixXcd f;                                  // l_irs x n_tx
    std::vector<Eigen::VectorXcd> g;                     // per user, length l_irs
    std::vector<PathRealization> f_paths;
    std::vector<std::vector<PathRealization>> g_paths;   // per user
    std::uint64_t seed = 0;

    void validate(const ArrayGeometry &geometry) const;
};

/// Linear-array response (1/sqrt(n)) * [1, e^{j*pc*sin(theta)}, ...].
/// Unit Euclidean norm; theta must be finite and in [-pi/2, pi/2].
Eigen::VectorXcd ula_response(double theta, int n, double phase_const);

/// Planar-array response with entries
///   exp(j*pc*(lx*sin(theta)*sin(phi) + lz*cos(phi))) / sqrt(l_x*l_z).
/// Element ordering is row-major over (lz, lx): index i maps to
/// lz = i / l_x, lx = i % l_x. This ordering is fixed; serialized vectors
/// and matrices rely on it.
Eigen::VectorXcd upa_response(double theta, double phi, int l_x, int l_z, double phase_const);

/// Path loss in dB at the given distance. The shadowing draw comes from rng
/// and is skipped (beta3 = 0) when model.shadowing is false.
double sample_path_loss_db(double distance, LinkClass link_class, const PathLossModel &model,
                           Rng &rng);

/// Draws the per-path gains and angles of one link. Path 0 is line-of-sight,
/// all later paths are non-line-of-sight; the shadowing deviate is drawn once
/// per link and scaled by each path class' sigma. Angles are uniform on
/// [-pi/2, pi/2]. Draw order is fixed so streams are reproducible.
std::vector<PathRealization> sample_paths(int n_paths, double distance,
                                          const PathLossModel &model, bool with_ula_aod,
                                          Rng &rng);

/// F = sqrt(n_tx*l_irs/n_paths) * sum_n gain_n * a_n(theta,phi) * b_n(theta)^H
/// assembled from explicit path realizations (deterministic).
Eigen::MatrixXcd assemble_channel_f(const ArrayGeometry &geometry,
                                    const std::vector<PathRealization> &paths);

/// g = sqrt(l_irs/n_paths) * sum_n gain_n * a_n(theta,phi).
Eigen::VectorXcd assemble_channel_g(const ArrayGeometry &geometry,
                                    const std::vector<PathRealization> &paths);

/// Samples the BS-to-IRS matrix. Writes path metadata to *paths_out when
/// non-null.
Eigen::MatrixXcd sample_channel_f(const ArrayGeometry &geometry, int n_paths,
                                  double bs_irs_distance, const PathLossModel &model, Rng &rng,
                                  std::vector<PathRealization> *paths_out = nullptr);

/// Samples one IRS-to-user vector.
Eigen::VectorXcd sample_channel_g(const ArrayGeometry &geometry, int n_paths,
                                  double irs_user_distance, const PathLossModel &model, Rng &rng,
                                  std::vector<PathRealization> *paths_out = nullptr);

/// End-to-end row h = g^H * diag(e^{j*theta_1}, ...) * F, length n_tx.
Eigen::RowVectorXcd effective_channel(const Eigen::VectorXcd &g, const Eigen::VectorXd &phases,
                                      const Eigen::MatrixXcd &f);

/// z = g^H * diag(F*w), length l_irs. For any unit-modulus phase vector v,
/// z * v equals effective_channel(g, angle(v), f) * w.
Eigen::RowVectorXcd cascade_vector(const Eigen::VectorXcd &g, const Eigen::MatrixXcd &f,
                                   const Eigen::VectorXcd &w);

/// JSON container round-trip (re/im pairs with a shape header and seed
/// metadata) so a campaign can be re-run against frozen channels.
std::string channel_to_json(const ChannelRealization &channel, const ArrayGeometry &geometry);
ChannelRealization channel_from_json(const std::string &text, ArrayGeometry *geometry_out = nullptr);

void save_channel(const ChannelRealization &channel, const ArrayGeometry &geometry,
                  const std::string &path);
ChannelRealization load_channel(const std::string &path, ArrayGeometry *geometry_out = nullptr);

} // namespace irsnoma

#endif
