// SPDX-License-Identifier: Apache-2.0
//
// thzdt - THz in-cabin channel modelling and wireless planning library
// Copyright (C) 2026 The thzdt Authors
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

#include <complex>
#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "thzdt/raytrace.hpp"

namespace thzdt
{
    // Inclusive, uniformly sampled sweep: f_k = f_start + k (f_stop - f_start) / (n - 1).
    struct FrequencyBand
    {
        double f_start_hz = 290e9;
        double f_stop_hz = 310e9;
        std::size_t n_freq = 2001;

        double step_hz() const { return (f_stop_hz - f_start_hz) / static_cast<double>(n_freq - 1); }
        double frequency(std::size_t k) const { return f_start_hz + static_cast<double>(k) * step_hz(); }
        // Bin width of the IDFT delay axis, 1 / (n_freq * step).
        double delay_step_s() const { return 1.0 / (static_cast<double>(n_freq) * step_hz()); }
        void validate() const; // throws Error(range)

        bool operator==(const FrequencyBand &) const = default;
    };

    // Parses "start:stop:n", e.g. "290e9:310e9:2001".
    FrequencyBand parse_band(std::string_view text);

    // Uniform angle bins centred on start + i * step.
    struct AngleAxis
    {
        double start_deg = 0.0;
        double step_deg = 10.0;
        std::size_t count = 1;
        bool circular = false; // wraps at 360 degrees

        double center(std::size_t i) const { return start_deg + static_cast<double>(i) * step_deg; }
        // Nearest bin, or nothing when the angle is more than half a step
        // outside a non-circular axis.
        std::optional<std::size_t> nearest(double deg) const;
        // Bin distance, circular where applicable.
        std::size_t bin_distance(std::size_t a, std::size_t b) const;

        bool operator==(const AngleAxis &) const = default;
    };

    AngleAxis default_azimuth_axis(); // 0..350 step 10, circular
    AngleAxis default_zenith_axis();  // -40..60 step 10

    // Complex samples indexed [zenith][azimuth][k]; k is frequency for a CFR
    // and delay for a CIR.
    struct ChannelTensor
    {
        FrequencyBand band;
        AngleAxis zenith = default_zenith_axis();
        AngleAxis azimuth = default_azimuth_axis();
        std::vector<std::complex<double>> values;

        ChannelTensor() = default;
        ChannelTensor(FrequencyBand band, AngleAxis zenith, AngleAxis azimuth);

        std::size_t bins() const { return zenith.count * azimuth.count; }
        std::span<std::complex<double>> series(std::size_t zi, std::size_t ai);
        std::span<const std::complex<double>> series(std::size_t zi, std::size_t ai) const;
    };

    using CfrTensor = ChannelTensor;
    using CirTensor = ChannelTensor;

    // Power |h|^2 per (zenith, azimuth, delay) cell.
    struct AngleDelayGrid
    {
        FrequencyBand band;
        AngleAxis zenith = default_zenith_axis();
        AngleAxis azimuth = default_azimuth_axis();
        std::vector<double> power; // [zenith][azimuth][delay]

        std::size_t n_delay() const { return band.n_freq; }
        double delay_step_s() const { return band.delay_step_s(); }
        double delay(std::size_t m) const { return static_cast<double>(m) * delay_step_s(); }
        double &at(std::size_t zi, std::size_t ai, std::size_t m) { return power[(zi * azimuth.count + ai) * n_delay() + m]; }
        double at(std::size_t zi, std::size_t ai, std::size_t m) const
        {
            return power[(zi * azimuth.count + ai) * n_delay() + m];
        }
    };

    enum class Window
    {
        rectangular,
        hann
    };

    // A multipath component as seen by extraction and the hybrid model.
    struct Mpc
    {
        double tau_s = 0.0;
        double zenith_deg = 0.0;
        double azimuth_deg = 0.0;
        double power_db = 0.0;
        int order = 0;     // bounce count when known
        std::string chain; // ';'-joined materials when known

        bool operator==(const Mpc &) const = default;
    };

    enum class MpcSource
    {
        measured,
        synthetic,
        traced
    };

    std::string_view source_name(MpcSource s);
    MpcSource parse_source(std::string_view s);

    struct MpcSet
    {
        std::vector<Mpc> paths; // sorted by delay
        MpcSource source = MpcSource::synthetic;
        bool degenerate = false; // extraction found nothing above the floor

        bool operator==(const MpcSet &) const = default;
    };

    Mpc to_mpc(const PathRecord &p);
    MpcSet to_mpc_set(const std::vector<PathRecord> &paths, MpcSource source = MpcSource::traced);

    // Each path adds alpha * exp(-j 2 pi f tau) to the series of its nearest
    // angle bin. Paths outside a non-circular axis are dropped.
    CfrTensor synthesize_cfr(std::span<const PathRecord> paths, const FrequencyBand &band,
                             const AngleAxis &zenith = default_zenith_axis(),
                             const AngleAxis &azimuth = default_azimuth_axis());
    // Same for extracted or stored MPCs; gains are real and positive.
    CfrTensor synthesize_cfr(const MpcSet &mpcs, const FrequencyBand &band,
                             const AngleAxis &zenith = default_zenith_axis(),
                             const AngleAxis &azimuth = default_azimuth_axis());

    // h[m] = (1/N) sum_k w[k] H[k] exp(+j 2 pi k m / N). The Hann window is
    // divided by its mean so an isolated path keeps its peak amplitude.
    void idft(std::span<const std::complex<double>> in, std::span<std::complex<double>> out,
              Window window = Window::rectangular);
    // H[k] = sum_m h[m] exp(-j 2 pi k m / N)
    void dft(std::span<const std::complex<double>> in, std::span<std::complex<double>> out);

    CirTensor cfr_to_cir_complex(const CfrTensor &cfr, Window window = Window::rectangular);
    CfrTensor cir_to_cfr(const CirTensor &cir);
    AngleDelayGrid power_grid(const CirTensor &cir);
    AngleDelayGrid cfr_to_cir(const CfrTensor &cfr, Window window = Window::rectangular);

    // P(tau, phi) = sum over zenith, row-major [azimuth][delay].
    std::vector<double> padp(const AngleDelayGrid &grid);

    struct ExtractConfig
    {
        std::optional<double> noise_floor_db; // unset: max - 40 dB
        std::size_t min_separation = 3;       // delay bins
        std::size_t angular_radius = 1;       // angle bins for the neighbourhood and thinning
    };

    // Local-maximum search over (delay, zenith, azimuth) with greedy thinning
    // and parabolic delay refinement.
    MpcSet extract_mpcs(const AngleDelayGrid &grid, const ExtractConfig &cfg = {});

    // max over both angles per delay bin
    std::vector<double> omni_pdp(const AngleDelayGrid &grid);

    // RL = (reference_db - FSPL(f, tau)) - 10 log10 P_omni(tau), with tau
    // rounded to the nearest delay bin. Throws Error(range) off the grid and
    // Error(infinite_loss) for a zero-power bin.
    double reflection_loss_of_path(std::span<const double> p_omni, double delay_step_s, double tau_s,
                                   double frequency_hz, double reference_db = 0.0);

    // CSV `azimuth_deg,zenith_deg,freq_hz,re,im`; the rows must form a full
    // rectangular lattice or Error(lattice) is thrown.
    CfrTensor read_cfr_csv(std::istream &in, std::string_view source = "<cfr>");
    CfrTensor load_cfr_csv(const std::string &path);
    void write_cfr_csv(std::ostream &out, const CfrTensor &cfr);

    // CSV `tau_ns,azimuth_deg,power_db`, zero-power cells omitted.
    void write_padp_csv(std::ostream &out, const AngleDelayGrid &grid);

    // CSV `tau_ns,azimuth_deg,zenith_deg,power_db,order,chain,source`.
    void write_mpc_csv(std::ostream &out, const MpcSet &set);
    MpcSet read_mpc_csv(std::istream &in, std::string_view source = "<mpc>");
}
