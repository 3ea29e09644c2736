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

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <mutex>
#include <ostream>

#include <fftw3.h>

#include "thzdt/csv.hpp"
#include "thzdt/error.hpp"
#include "thzdt/channel.hpp"
#include "thzdt/simd/kernels.hpp"

namespace thzdt
{
    namespace
    {
        double wrap360(double deg)
        {
            double w = std::fmod(deg, 360.0);
            if (w < 0.0)
                w += 360.0;
            return w >= 360.0 ? 0.0 : w;
        }

        double to_db(double p) { return 10.0 * std::log10(p); }

        // Plans are created once per (size, sign) under a lock; execution on
        // unaligned arrays through the new-array interface is thread-safe.
        fftw_plan plan_for(int n, int sign)
        {
            static std::mutex mutex;
            static std::map<std::pair<int, int>, fftw_plan> cache;
            std::lock_guard lock(mutex);
            auto &plan = cache[{n, sign}];
            if (plan == nullptr)
            {
                fftw_complex *in = fftw_alloc_complex(static_cast<std::size_t>(n));
                fftw_complex *out = fftw_alloc_complex(static_cast<std::size_t>(n));
                plan = fftw_plan_dft_1d(n, in, out, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
                fftw_free(in);
                fftw_free(out);
            }
            return plan;
        }

        void transform(std::span<const std::complex<double>> in, std::span<std::complex<double>> out, int sign)
        {
            if (in.size() != out.size() || in.empty())
                throw Error(Errc::range, "transform needs equal, non-empty input and output");
            std::vector<std::complex<double>> tmp(in.begin(), in.end());
            fftw_execute_dft(plan_for(static_cast<int>(in.size()), sign), reinterpret_cast<fftw_complex *>(tmp.data()),
                             reinterpret_cast<fftw_complex *>(out.data()));
        }

        struct LatticeAxis
        {
            double start = 0.0, step = 0.0;
            std::size_t count = 0;
        };

        LatticeAxis lattice_axis(std::vector<double> values, const std::string &what, std::string_view source)
        {
            std::sort(values.begin(), values.end());
            std::vector<double> uniq;
            for (double v : values)
                if (uniq.empty() || std::abs(v - uniq.back()) > 1e-9 * std::max(1.0, std::abs(v)))
                    uniq.push_back(v);
            LatticeAxis axis{uniq.front(), 0.0, uniq.size()};
            if (uniq.size() > 1)
            {
                axis.step = (uniq.back() - uniq.front()) / static_cast<double>(uniq.size() - 1);
                for (std::size_t i = 0; i < uniq.size(); ++i)
                    if (std::abs(uniq[i] - (axis.start + static_cast<double>(i) * axis.step)) > 1e-6 * axis.step)
                        throw Error(Errc::lattice, std::string(source) + ": " + what + " samples are not uniformly spaced");
            }
            return axis;
        }

        std::size_t lattice_index(const LatticeAxis &axis, double v)
        {
            if (axis.count == 1)
                return 0;
            return static_cast<std::size_t>(std::llround((v - axis.start) / axis.step));
        }
    }

    // --- axes ---

    void FrequencyBand::validate() const
    {
        if (n_freq < 2)
            throw Error(Errc::range, "a band needs at least 2 frequency points");
        if (!(f_stop_hz > f_start_hz) || !(f_start_hz >= 0.0))
            throw Error(Errc::range, "a band needs 0 <= f_start < f_stop");
    }

    FrequencyBand parse_band(std::string_view text)
    {
        const auto a = text.find(':');
        const auto b = a == std::string_view::npos ? a : text.find(':', a + 1);
        if (b == std::string_view::npos)
            throw Error(Errc::parse, "band must look like start:stop:n, got '" + std::string(text) + "'");
        FrequencyBand band;
        band.f_start_hz = csv::parse_double(std::string(text.substr(0, a)), 0, "band");
        band.f_stop_hz = csv::parse_double(std::string(text.substr(a + 1, b - a - 1)), 0, "band");
        const long long n = csv::parse_int(std::string(text.substr(b + 1)), 0, "band");
        if (n < 2)
            throw Error(Errc::range, "a band needs at least 2 frequency points");
        band.n_freq = static_cast<std::size_t>(n);
        band.validate();
        return band;
    }

    std::optional<std::size_t> AngleAxis::nearest(double deg) const
    {
        if (circular)
        {
            const double rel = wrap360(deg - start_deg);
            const auto i = static_cast<std::size_t>(std::llround(rel / step_deg));
            return i % count;
        }
        const double rel = (deg - start_deg) / step_deg;
        if (rel < -0.5 || rel > static_cast<double>(count) - 0.5)
            return std::nullopt;
        const auto i = std::llround(rel);
        return static_cast<std::size_t>(std::clamp<long long>(i, 0, static_cast<long long>(count) - 1));
    }

    std::size_t AngleAxis::bin_distance(std::size_t a, std::size_t b) const
    {
        const std::size_t d = a > b ? a - b : b - a;
        return circular ? std::min(d, count - d) : d;
    }

    AngleAxis default_azimuth_axis() { return {0.0, 10.0, 36, true}; }
    AngleAxis default_zenith_axis() { return {-40.0, 10.0, 11, false}; }

    // --- tensors ---

    ChannelTensor::ChannelTensor(FrequencyBand band_, AngleAxis zenith_, AngleAxis azimuth_)
        : band(band_), zenith(zenith_), azimuth(azimuth_), values(zenith_.count * azimuth_.count * band_.n_freq)
    {
        band.validate();
    }

    std::span<std::complex<double>> ChannelTensor::series(std::size_t zi, std::size_t ai)
    {
        return std::span(values).subspan((zi * azimuth.count + ai) * band.n_freq, band.n_freq);
    }

    std::span<const std::complex<double>> ChannelTensor::series(std::size_t zi, std::size_t ai) const
    {
        return std::span(values).subspan((zi * azimuth.count + ai) * band.n_freq, band.n_freq);
    }

    std::string_view source_name(MpcSource s)
    {
        switch (s)
        {
        case MpcSource::measured:
            return "measured";
        case MpcSource::synthetic:
            return "synthetic";
        case MpcSource::traced:
            return "traced";
        }
        return "synthetic";
    }

    MpcSource parse_source(std::string_view s)
    {
        if (s == "measured")
            return MpcSource::measured;
        if (s == "synthetic")
            return MpcSource::synthetic;
        if (s == "traced")
            return MpcSource::traced;
        throw Error(Errc::schema, "unknown MPC source '" + std::string(s) + "'");
    }

    Mpc to_mpc(const PathRecord &p)
    {
        return Mpc{p.tau_s, p.zenith_deg, p.azimuth_deg, p.power_db, static_cast<int>(p.order()), p.chain_label()};
    }

    MpcSet to_mpc_set(const std::vector<PathRecord> &paths, MpcSource source)
    {
        MpcSet set;
        set.source = source;
        for (const auto &p : paths)
            set.paths.push_back(to_mpc(p));
        std::stable_sort(set.paths.begin(), set.paths.end(), [](const Mpc &a, const Mpc &b) { return a.tau_s < b.tau_s; });
        return set;
    }

    namespace
    {
        template <class Items, class Get>
        CfrTensor synthesize(const Items &items, const FrequencyBand &band, const AngleAxis &zenith,
                             const AngleAxis &azimuth, Get get)
        {
            CfrTensor cfr(band, zenith, azimuth);
            for (const auto &item : items)
            {
                const auto [tau, zen, az, alpha] = get(item);
                const auto zi = zenith.nearest(zen);
                const auto ai = azimuth.nearest(az);
                if (!zi || !ai)
                    continue;
                simd::accumulate_phasors(cfr.series(*zi, *ai), alpha, band.f_start_hz, band.step_hz(), tau);
            }
            return cfr;
        }
    }

    CfrTensor synthesize_cfr(std::span<const PathRecord> paths, const FrequencyBand &band, const AngleAxis &zenith,
                             const AngleAxis &azimuth)
    {
        return synthesize(paths, band, zenith, azimuth, [](const PathRecord &p) {
            return std::tuple(p.tau_s, p.zenith_deg, p.azimuth_deg, p.complex_gain);
        });
    }

    CfrTensor synthesize_cfr(const MpcSet &mpcs, const FrequencyBand &band, const AngleAxis &zenith,
                             const AngleAxis &azimuth)
    {
        return synthesize(mpcs.paths, band, zenith, azimuth, [](const Mpc &m) {
            return std::tuple(m.tau_s, m.zenith_deg, m.azimuth_deg,
                              std::complex<double>(std::pow(10.0, m.power_db / 20.0), 0.0));
        });
    }

    void idft(std::span<const std::complex<double>> in, std::span<std::complex<double>> out, Window window)
    {
        const std::size_t n = in.size();
        if (window == Window::rectangular)
            transform(in, out, FFTW_BACKWARD);
        else
        {
            std::vector<std::complex<double>> w(n);
            double mean = 0.0;
            for (std::size_t k = 0; k < n; ++k)
            {
                const double wk = n > 1 ? 0.5 - 0.5 * std::cos(2.0 * pi * static_cast<double>(k) / static_cast<double>(n - 1))
                                        : 1.0;
                w[k] = in[k] * wk;
                mean += wk;
            }
            mean /= static_cast<double>(n);
            transform(w, out, FFTW_BACKWARD);
            for (auto &v : out)
                v /= mean;
        }
        const double scale = 1.0 / static_cast<double>(n);
        for (auto &v : out)
            v *= scale;
    }

    void dft(std::span<const std::complex<double>> in, std::span<std::complex<double>> out)
    {
        transform(in, out, FFTW_FORWARD);
    }

    CirTensor cfr_to_cir_complex(const CfrTensor &cfr, Window window)
    {
        CirTensor cir(cfr.band, cfr.zenith, cfr.azimuth);
        for (std::size_t zi = 0; zi < cfr.zenith.count; ++zi)
            for (std::size_t ai = 0; ai < cfr.azimuth.count; ++ai)
                idft(cfr.series(zi, ai), cir.series(zi, ai), window);
        return cir;
    }

    CfrTensor cir_to_cfr(const CirTensor &cir)
    {
        CfrTensor cfr(cir.band, cir.zenith, cir.azimuth);
        for (std::size_t zi = 0; zi < cir.zenith.count; ++zi)
            for (std::size_t ai = 0; ai < cir.azimuth.count; ++ai)
                dft(cir.series(zi, ai), cfr.series(zi, ai));
        return cfr;
    }

    AngleDelayGrid power_grid(const CirTensor &cir)
    {
        AngleDelayGrid grid{cir.band, cir.zenith, cir.azimuth, std::vector<double>(cir.values.size())};
        simd::abs2(cir.values, grid.power);
        return grid;
    }

    AngleDelayGrid cfr_to_cir(const CfrTensor &cfr, Window window)
    {
        return power_grid(cfr_to_cir_complex(cfr, window));
    }

    std::vector<double> padp(const AngleDelayGrid &grid)
    {
        const std::size_t nd = grid.n_delay();
        std::vector<double> out(grid.azimuth.count * nd, 0.0);
        for (std::size_t zi = 0; zi < grid.zenith.count; ++zi)
            for (std::size_t ai = 0; ai < grid.azimuth.count; ++ai)
                for (std::size_t m = 0; m < nd; ++m)
                    out[ai * nd + m] += grid.at(zi, ai, m);
        return out;
    }

    // --- extraction ---

    MpcSet extract_mpcs(const AngleDelayGrid &grid, const ExtractConfig &cfg)
    {
        MpcSet result;
        result.source = MpcSource::measured;
        const std::size_t nd = grid.n_delay(), nz = grid.zenith.count, na = grid.azimuth.count;
        if (grid.power.empty())
        {
            result.degenerate = true;
            return result;
        }

        const double max_power = *std::max_element(grid.power.begin(), grid.power.end());
        const double max_db = max_power > 0.0 ? to_db(max_power) : -std::numeric_limits<double>::infinity();
        const double floor_db = cfg.noise_floor_db.value_or(max_db - 40.0);
        if (!(max_db > floor_db))
        {
            result.degenerate = true;
            return result;
        }
        const double floor_lin = std::pow(10.0, floor_db / 10.0);

        const auto r = static_cast<long long>(cfg.angular_radius);
        auto zen_neighbours = [&](std::size_t zi) {
            std::vector<std::size_t> out;
            const long long lo = std::max<long long>(0, static_cast<long long>(zi) - r);
            const long long hi = std::min<long long>(static_cast<long long>(nz) - 1, static_cast<long long>(zi) + r);
            for (long long z = lo; z <= hi; ++z)
                out.push_back(static_cast<std::size_t>(z));
            return out;
        };
        auto az_neighbours = [&](std::size_t ai) {
            std::vector<std::size_t> out;
            for (long long d = -r; d <= r; ++d)
            {
                long long a = static_cast<long long>(ai) + d;
                if (grid.azimuth.circular)
                    a = ((a % static_cast<long long>(na)) + static_cast<long long>(na)) % static_cast<long long>(na);
                else if (a < 0 || a >= static_cast<long long>(na))
                    continue;
                if (std::find(out.begin(), out.end(), static_cast<std::size_t>(a)) == out.end())
                    out.push_back(static_cast<std::size_t>(a));
            }
            return out;
        };

        struct Peak
        {
            std::size_t zi, ai, m, index;
            double power;
        };
        std::vector<Peak> peaks;
        for (std::size_t zi = 0; zi < nz; ++zi)
        {
            const auto zs = zen_neighbours(zi);
            for (std::size_t ai = 0; ai < na; ++ai)
            {
                const auto as = az_neighbours(ai);
                for (std::size_t m = 0; m < nd; ++m)
                {
                    const double p = grid.at(zi, ai, m);
                    if (!(p > floor_lin))
                        continue;
                    const std::size_t idx = (zi * na + ai) * nd + m;
                    bool is_max = true;
                    for (std::size_t z : zs)
                    {
                        for (std::size_t a : as)
                        {
                            const std::size_t m0 = m > 0 ? m - 1 : 0, m1 = std::min(nd - 1, m + 1);
                            for (std::size_t mm = m0; mm <= m1; ++mm)
                            {
                                const std::size_t nidx = (z * na + a) * nd + mm;
                                if (nidx == idx)
                                    continue;
                                const double q = grid.power[nidx];
                                if (q > p || (q == p && nidx < idx))
                                {
                                    is_max = false;
                                    break;
                                }
                            }
                            if (!is_max)
                                break;
                        }
                        if (!is_max)
                            break;
                    }
                    if (is_max)
                        peaks.push_back(Peak{zi, ai, m, idx, p});
                }
            }
        }

        std::sort(peaks.begin(), peaks.end(), [](const Peak &a, const Peak &b) {
            return a.power != b.power ? a.power > b.power : a.index < b.index;
        });
        std::vector<Peak> kept;
        for (const auto &pk : peaks)
        {
            const bool suppressed = std::any_of(kept.begin(), kept.end(), [&](const Peak &k) {
                const std::size_t dm = k.m > pk.m ? k.m - pk.m : pk.m - k.m;
                return dm < cfg.min_separation && grid.zenith.bin_distance(k.zi, pk.zi) <= cfg.angular_radius &&
                       grid.azimuth.bin_distance(k.ai, pk.ai) <= cfg.angular_radius;
            });
            if (!suppressed)
                kept.push_back(pk);
        }

        for (const auto &pk : kept)
        {
            double delta = 0.0;
            if (pk.m > 0 && pk.m + 1 < nd)
            {
                const double ym = std::sqrt(grid.at(pk.zi, pk.ai, pk.m - 1));
                const double y0 = std::sqrt(pk.power);
                const double yp = std::sqrt(grid.at(pk.zi, pk.ai, pk.m + 1));
                const double den = ym - 2.0 * y0 + yp;
                if (den < 0.0)
                    delta = std::clamp(0.5 * (ym - yp) / den, -0.5, 0.5);
            }
            Mpc mpc;
            mpc.tau_s = (static_cast<double>(pk.m) + delta) * grid.delay_step_s();
            mpc.zenith_deg = grid.zenith.center(pk.zi);
            mpc.azimuth_deg = wrap360(grid.azimuth.center(pk.ai));
            mpc.power_db = to_db(pk.power);
            result.paths.push_back(mpc);
        }
        std::stable_sort(result.paths.begin(), result.paths.end(),
                         [](const Mpc &a, const Mpc &b) { return a.tau_s < b.tau_s; });
        result.degenerate = result.paths.empty();
        return result;
    }

    std::vector<double> omni_pdp(const AngleDelayGrid &grid)
    {
        const std::size_t nd = grid.n_delay();
        std::vector<double> out(nd, 0.0);
        for (std::size_t zi = 0; zi < grid.zenith.count; ++zi)
            for (std::size_t ai = 0; ai < grid.azimuth.count; ++ai)
                for (std::size_t m = 0; m < nd; ++m)
                    out[m] = std::max(out[m], grid.at(zi, ai, m));
        return out;
    }

    double reflection_loss_of_path(std::span<const double> p_omni, double delay_step_s, double tau_s,
                                   double frequency_hz, double reference_db)
    {
        if (!(tau_s > 0.0) || !(delay_step_s > 0.0))
            throw Error(Errc::range, "path delay and delay step must be positive");
        const auto m = std::llround(tau_s / delay_step_s);
        if (m < 0 || static_cast<std::size_t>(m) >= p_omni.size())
            throw Error(Errc::range, "path delay lies outside the delay grid");
        const double p = p_omni[static_cast<std::size_t>(m)];
        if (!(p > 0.0))
            throw Error(Errc::infinite_loss, "zero power at the path delay");
        return (reference_db - 20.0 * std::log10(4.0 * pi * frequency_hz * tau_s)) - to_db(p);
    }

    // --- CSV ---

    CfrTensor read_cfr_csv(std::istream &in, std::string_view source)
    {
        static constexpr std::string_view header[] = {"azimuth_deg", "zenith_deg", "freq_hz", "re", "im"};
        const auto rows = csv::read(in);
        if (rows.empty())
            throw Error(Errc::schema, std::string(source) + ": missing header");
        csv::expect_header(rows.front(), header, source);
        if (rows.size() < 2)
            throw Error(Errc::empty_input, std::string(source) + ": no samples");

        struct Sample
        {
            double az, zen, f;
            std::complex<double> v;
        };
        std::vector<Sample> samples;
        samples.reserve(rows.size() - 1);
        std::vector<double> azs, zens, fs;
        for (std::size_t r = 1; r < rows.size(); ++r)
        {
            const auto &row = rows[r];
            if (row.fields.size() != 5)
                throw Error(Errc::parse, std::string(source) + ":" + std::to_string(row.line) + ": expected 5 fields");
            Sample s{csv::parse_double(row.fields[0], row.line, source), csv::parse_double(row.fields[1], row.line, source),
                     csv::parse_double(row.fields[2], row.line, source),
                     {csv::parse_double(row.fields[3], row.line, source), csv::parse_double(row.fields[4], row.line, source)}};
            samples.push_back(s);
            azs.push_back(s.az);
            zens.push_back(s.zen);
            fs.push_back(s.f);
        }

        const LatticeAxis az = lattice_axis(azs, "azimuth", source);
        const LatticeAxis zen = lattice_axis(zens, "zenith", source);
        const LatticeAxis freq = lattice_axis(fs, "frequency", source);
        if (freq.count < 2)
            throw Error(Errc::lattice, std::string(source) + ": a sweep needs at least 2 frequencies");
        if (samples.size() != az.count * zen.count * freq.count)
            throw Error(Errc::lattice, std::string(source) + ": " + std::to_string(samples.size()) +
                                           " rows do not fill the " + std::to_string(az.count) + " x " +
                                           std::to_string(zen.count) + " x " + std::to_string(freq.count) + " lattice");

        const double az_step = az.count > 1 ? az.step : 10.0;
        const double zen_step = zen.count > 1 ? zen.step : 10.0;
        const bool circular = az.count > 1 && std::abs(az_step * static_cast<double>(az.count) - 360.0) < 1e-6;
        FrequencyBand band{freq.start, freq.start + freq.step * static_cast<double>(freq.count - 1), freq.count};
        CfrTensor cfr(band, AngleAxis{zen.start, zen_step, zen.count, false}, AngleAxis{az.start, az_step, az.count, circular});
        std::vector<char> seen(cfr.values.size(), 0);
        for (const auto &s : samples)
        {
            const std::size_t idx = (lattice_index(zen, s.zen) * az.count + lattice_index(az, s.az)) * freq.count +
                                    lattice_index(freq, s.f);
            if (seen[idx])
                throw Error(Errc::lattice, std::string(source) + ": duplicate lattice sample");
            seen[idx] = 1;
            cfr.values[idx] = s.v;
        }
        return cfr;
    }

    CfrTensor load_cfr_csv(const std::string &path)
    {
        std::ifstream in(path);
        if (!in)
            throw Error(Errc::not_found, "cannot open CFR file '" + path + "'");
        return read_cfr_csv(in, path);
    }

    void write_cfr_csv(std::ostream &out, const CfrTensor &cfr)
    {
        out << csv::version_line() << '\n';
        out << "azimuth_deg,zenith_deg,freq_hz,re,im\n";
        char fbuf[64];
        for (std::size_t ai = 0; ai < cfr.azimuth.count; ++ai)
            for (std::size_t zi = 0; zi < cfr.zenith.count; ++zi)
            {
                const auto s = cfr.series(zi, ai);
                for (std::size_t k = 0; k < s.size(); ++k)
                {
                    std::snprintf(fbuf, sizeof fbuf, "%.15g", cfr.band.frequency(k));
                    out << csv::fmt(cfr.azimuth.center(ai)) << ',' << csv::fmt(cfr.zenith.center(zi)) << ',' << fbuf
                        << ',' << csv::fmt(s[k].real()) << ',' << csv::fmt(s[k].imag()) << '\n';
                }
            }
    }

    void write_padp_csv(std::ostream &out, const AngleDelayGrid &grid)
    {
        out << csv::version_line() << '\n';
        out << "tau_ns,azimuth_deg,power_db\n";
        const auto p = padp(grid);
        const std::size_t nd = grid.n_delay();
        for (std::size_t m = 0; m < nd; ++m)
            for (std::size_t ai = 0; ai < grid.azimuth.count; ++ai)
            {
                const double v = p[ai * nd + m];
                if (v > 0.0)
                    out << csv::fmt(grid.delay(m) * 1e9) << ',' << csv::fmt(wrap360(grid.azimuth.center(ai))) << ','
                        << csv::fmt(to_db(v)) << '\n';
            }
    }

    void write_mpc_csv(std::ostream &out, const MpcSet &set)
    {
        out << csv::version_line() << '\n';
        out << "tau_ns,azimuth_deg,zenith_deg,power_db,order,chain,source\n";
        for (const auto &m : set.paths)
            out << csv::fmt(m.tau_s * 1e9) << ',' << csv::fmt(m.azimuth_deg) << ',' << csv::fmt(m.zenith_deg) << ','
                << csv::fmt(m.power_db) << ',' << m.order << ',' << m.chain << ',' << source_name(set.source) << '\n';
    }

    MpcSet read_mpc_csv(std::istream &in, std::string_view source)
    {
        static constexpr std::string_view header[] = {"tau_ns", "azimuth_deg", "zenith_deg", "power_db", "order", "chain"};
        const auto rows = csv::read(in);
        if (rows.empty())
            throw Error(Errc::schema, std::string(source) + ": missing header");
        const auto &head = rows.front();
        const bool has_source = head.fields.size() == 7;
        if (head.fields.size() != 6 && !has_source)
            throw Error(Errc::schema, std::string(source) + ": expected tau_ns,azimuth_deg,zenith_deg,power_db,order,chain[,source]");
        csv::expect_header(csv::Row{head.line, std::vector<std::string>(head.fields.begin(), head.fields.begin() + 6)},
                           header, source);
        if (has_source && head.fields[6] != "source")
            throw Error(Errc::schema, std::string(source) + ": seventh column must be 'source'");

        MpcSet set;
        set.source = has_source ? MpcSource::synthetic : MpcSource::traced;
        for (std::size_t r = 1; r < rows.size(); ++r)
        {
            const auto &row = rows[r];
            const std::string where = std::string(source) + ":" + std::to_string(row.line);
            if (row.fields.size() != head.fields.size())
                throw Error(Errc::parse, where + ": expected " + std::to_string(head.fields.size()) + " fields");
            Mpc m;
            m.tau_s = csv::parse_double(row.fields[0], row.line, source) * 1e-9;
            m.azimuth_deg = wrap360(csv::parse_double(row.fields[1], row.line, source));
            m.zenith_deg = csv::parse_double(row.fields[2], row.line, source);
            m.power_db = csv::parse_double(row.fields[3], row.line, source);
            m.order = static_cast<int>(csv::parse_int(row.fields[4], row.line, source));
            m.chain = row.fields[5];
            if (!(m.tau_s > 0.0) || !std::isfinite(m.power_db))
                throw Error(Errc::schema, where + ": need tau > 0 and finite power");
            if (has_source)
                set.source = parse_source(row.fields[6]);
            set.paths.push_back(std::move(m));
        }
        std::stable_sort(set.paths.begin(), set.paths.end(), [](const Mpc &a, const Mpc &b) { return a.tau_s < b.tau_s; });
        return set;
    }
}
