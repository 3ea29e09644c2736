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
#include <limits>
#include <numeric>

#include "json.hpp"

#include "thzdt/error.hpp"
#include "thzdt/optimize.hpp"
#include "thzdt/parallel.hpp"

namespace thzdt
{
    namespace
    {
        constexpr double neg_inf = -std::numeric_limits<double>::infinity();

        double db_to_lin(double db) { return std::pow(10.0, db / 10.0); }

        // Received power of every transmitter at every receiver, [tx][rx].
        std::vector<std::vector<std::optional<double>>> power_matrix(const LinkBudget &links,
                                                                     std::span<const Vec3> points)
        {
            std::vector<std::vector<std::optional<double>>> p(links.size(),
                                                              std::vector<std::optional<double>>(points.size()));
            parallel_for(points.size(), links.config().workers, [&](std::size_t r) {
                for (std::size_t i = 0; i < links.size(); ++i)
                    p[i][r] = links.received_power_db(i, points[r]);
            });
            return p;
        }

        std::vector<Vec3> unflatten(std::span<const double> x)
        {
            std::vector<Vec3> out;
            for (std::size_t i = 0; i + 2 < x.size(); i += 3)
                out.push_back({x[i], x[i + 1], x[i + 2]});
            return out;
        }

        struct LineResult
        {
            std::vector<double> x;
            double f;
        };

        // Maximizes f along unit direction d from x inside the box. Returns the
        // best probe seen, which is never worse than (x, fx).
        class LineSearch
        {
        public:
            LineSearch(const std::function<double(const std::vector<double> &)> &f, std::span<const double> lo,
                       std::span<const double> hi, double tol, double step)
                : f_(f), lo_(lo), hi_(hi), tol_(tol), step_(step)
            {
            }

            LineResult run(const std::vector<double> &x, double fx, const std::vector<double> &d)
            {
                x_ = &x;
                d_ = &d;
                best_ = {x, fx};
                double a_lo = -std::numeric_limits<double>::infinity(), a_hi = std::numeric_limits<double>::infinity();
                for (std::size_t k = 0; k < x.size(); ++k)
                {
                    if (d[k] == 0.0)
                        continue;
                    double t0 = (lo_[k] - x[k]) / d[k], t1 = (hi_[k] - x[k]) / d[k];
                    if (t0 > t1)
                        std::swap(t0, t1);
                    a_lo = std::max(a_lo, t0);
                    a_hi = std::min(a_hi, t1);
                }
                a_lo = std::min(a_lo, 0.0);
                a_hi = std::max(a_hi, 0.0);
                if (!(a_hi - a_lo > 0.0) || !std::isfinite(a_lo) || !std::isfinite(a_hi))
                    return best_;

                constexpr double grow = 1.618033988749895;
                double a = 0.0, fa = fx;
                double b, fb;
                double sign = 1.0;
                if (a_hi > 0.0 && (fb = phi(b = std::min(step_, a_hi))) > fa)
                    sign = 1.0;
                else
                {
                    double fneg = neg_inf, bneg = 0.0;
                    if (a_lo < 0.0)
                        fneg = phi(bneg = std::max(-step_, a_lo));
                    if (a_lo < 0.0 && fneg > fa)
                    {
                        sign = -1.0;
                        b = bneg, fb = fneg;
                    }
                    else
                    {
                        // (bneg, 0, b) already brackets a maximum.
                        const double left = a_lo < 0.0 ? bneg : 0.0;
                        const double right = a_hi > 0.0 ? std::min(step_, a_hi) : 0.0;
                        brent(left, right, 0.0, fx);
                        return best_;
                    }
                }

                const double limit = sign > 0.0 ? a_hi : a_lo;
                for (;;)
                {
                    if (b == limit)
                    {
                        brent(std::min(a, b), std::max(a, b), 0.5 * (a + b), neg_inf);
                        return best_;
                    }
                    double c = b + grow * (b - a);
                    c = sign > 0.0 ? std::min(c, limit) : std::max(c, limit);
                    const double fc = phi(c);
                    if (fc <= fb)
                    {
                        brent(std::min(a, c), std::max(a, c), b, fb);
                        return best_;
                    }
                    a = b, fa = fb;
                    b = c, fb = fc;
                }
            }

        private:
            double phi(double alpha)
            {
                std::vector<double> p(x_->size());
                for (std::size_t k = 0; k < p.size(); ++k)
                    p[k] = std::clamp((*x_)[k] + alpha * (*d_)[k], lo_[k], hi_[k]);
                const double v = f_(p);
                if (v > best_.f)
                    best_ = {std::move(p), v};
                return v;
            }

            // Brent's parabolic/golden minimization of -phi on [a, b] from
            // interior x (fx = phi(x), or -inf if not yet evaluated).
            void brent(double a, double b, double x, double fx_phi)
            {
                constexpr double cgold = 0.3819660112501051;
                if (!(b - a > 0.0))
                    return;
                double fx = fx_phi == neg_inf ? -phi(x) : -fx_phi;
                double w = x, v = x, fw = fx, fv = fx;
                double d = 0.0, e = 0.0;
                for (int iter = 0; iter < 200; ++iter)
                {
                    const double xm = 0.5 * (a + b);
                    const double tol1 = 0.5 * tol_ + 1e-12 * std::abs(x);
                    const double tol2 = 2.0 * tol1;
                    if (std::abs(x - xm) <= tol2 - 0.5 * (b - a))
                        break;
                    bool golden = true;
                    if (std::abs(e) > tol1)
                    {
                        double r = (x - w) * (fx - fv);
                        double q = (x - v) * (fx - fw);
                        double p = (x - v) * q - (x - w) * r;
                        q = 2.0 * (q - r);
                        if (q > 0.0)
                            p = -p;
                        q = std::abs(q);
                        const double etemp = e;
                        e = d;
                        if (!(std::abs(p) >= std::abs(0.5 * q * etemp) || p <= q * (a - x) || p >= q * (b - x)))
                        {
                            d = p / q;
                            const double u = x + d;
                            if (u - a < tol2 || b - u < tol2)
                                d = std::copysign(tol1, xm - x);
                            golden = false;
                        }
                    }
                    if (golden)
                    {
                        e = x >= xm ? a - x : b - x;
                        d = cgold * e;
                    }
                    const double u = std::abs(d) >= tol1 ? x + d : x + std::copysign(tol1, d);
                    const double fu = -phi(u);
                    if (fu <= fx)
                    {
                        (u >= x ? a : b) = x;
                        v = w, fv = fw;
                        w = x, fw = fx;
                        x = u, fx = fu;
                    }
                    else
                    {
                        (u < x ? a : b) = u;
                        if (fu <= fw || w == x)
                        {
                            v = w, fv = fw;
                            w = u, fw = fu;
                        }
                        else if (fu <= fv || v == x || v == w)
                        {
                            v = u, fv = fu;
                        }
                    }
                }
            }

            const std::function<double(const std::vector<double> &)> &f_;
            std::span<const double> lo_, hi_;
            double tol_, step_;
            const std::vector<double> *x_ = nullptr;
            const std::vector<double> *d_ = nullptr;
            LineResult best_;
        };
    }

    // --- problem ---

    void OptProblem::validate() const
    {
        if (scene == nullptr)
            throw Error(Errc::range, "optimization problem has no scene");
        if (n_tx < 1)
            throw Error(Errc::range, "at least one transmitter is required");
        if (!(bounds.volume() > 0.0) || !scene->bounds().contains(bounds.min) || !scene->bounds().contains(bounds.max))
            throw Error(Errc::range, "placement bounds must be a non-empty box inside the scene bounds");
        if (!(p_th >= 0.0 && p_th <= 1.0))
            throw Error(Errc::range, "P_th must lie in [0, 1]");
        if (!(tol > 0.0))
            throw Error(Errc::range, "tolerance must be positive");
        rx_pop.validate(*scene);
        cfg.validate();
    }

    double OptProblem::penalty_weight() const
    {
        return 10.0 * cfg.bandwidth_hz * std::log2(1.0 + db_to_lin(gamma_db));
    }

    std::vector<double> default_thresholds()
    {
        std::vector<double> t;
        for (int i = -10; i <= 40; ++i)
            t.push_back(i);
        return t;
    }

    Evaluation evaluate(const OptProblem &problem, std::span<const Vec3> coords)
    {
        const double m = problem.penalty_weight();
        Evaluation ev;
        double excess = 0.0;
        for (const auto &c : coords)
        {
            if (!std::isfinite(c.x) || !std::isfinite(c.y) || !std::isfinite(c.z))
                throw Error(Errc::range, "objective coordinates must be finite");
            excess += problem.bounds.outside_distance(c);
        }
        if (excess > 0.0)
        {
            ev.in_bounds = ev.feasible = false;
            ev.value = -m * (static_cast<double>(coords.size()) + 1.0 + excess);
            return ev;
        }

        const LinkBudget links(*problem.scene, std::vector<Vec3>(coords.begin(), coords.end()), problem.cfg);
        const auto power = power_matrix(links, problem.rx_pop.points);
        const double noise = db_to_lin(problem.cfg.noise_dbm());
        const std::size_t n = coords.size(), nr = problem.rx_pop.points.size();

        double shortfall = 0.0;
        std::vector<double> sinrs(nr);
        for (std::size_t i = 0; i < n; ++i)
        {
            for (std::size_t r = 0; r < nr; ++r)
            {
                if (!power[i][r])
                {
                    sinrs[r] = neg_inf;
                    continue;
                }
                double interference = 0.0;
                for (std::size_t j = 0; j < n; ++j)
                    if (j != i && power[j][r])
                        interference += db_to_lin(*power[j][r]);
                sinrs[r] = *power[i][r] - 10.0 * std::log10(interference + noise);
            }
            const double pc = coverage_probability(sinrs, problem.gamma_db, problem.rx_pop.weights);
            ev.coverage_at_gamma.push_back(pc);
            ev.rate_bps += average_rate_bps(sinrs, problem.cfg.bandwidth_hz, n, problem.rx_pop.weights);
            shortfall += std::max(0.0, problem.p_th - pc);
            if (!(pc > problem.p_th))
                ev.feasible = false;
        }
        ev.rate_bps /= static_cast<double>(n);
        ev.value = ev.rate_bps - m * shortfall;
        return ev;
    }

    double objective(const OptProblem &problem, std::span<const Vec3> coords) { return evaluate(problem, coords).value; }

    std::vector<double> deployment_curve(const OptProblem &problem, std::span<const Vec3> coords)
    {
        const LinkBudget links(*problem.scene, std::vector<Vec3>(coords.begin(), coords.end()), problem.cfg);
        const auto results = evaluate_points(links, problem.rx_pop.points);
        return coverage_curve(sinr_values(results), problem.thresholds_db, problem.rx_pop.weights);
    }

    // --- Powell ---

    PowellResult powell_maximize(const ObjectiveFn &f, std::vector<double> x0, std::span<const double> lo,
                                 std::span<const double> hi, double tol, int max_iter, double initial_step)
    {
        const std::size_t n = x0.size();
        if (n == 0 || lo.size() != n || hi.size() != n)
            throw Error(Errc::range, "Powell needs matching, non-empty start and bounds");
        if (!(tol > 0.0) || max_iter < 1)
            throw Error(Errc::range, "Powell needs tol > 0 and max_iter >= 1");
        for (std::size_t k = 0; k < n; ++k)
            if (!(lo[k] <= x0[k] && x0[k] <= hi[k]))
                throw Error(Errc::range, "Powell start point lies outside the bounds");

        PowellResult res;
        std::function<double(const std::vector<double> &)> counted = [&](const std::vector<double> &x) {
            ++res.evaluations;
            return f(x);
        };
        LineSearch line(counted, lo, hi, tol, initial_step);

        std::vector<std::vector<double>> dirs(n, std::vector<double>(n, 0.0));
        for (std::size_t i = 0; i < n; ++i)
            dirs[i][i] = 1.0;

        std::vector<double> x = std::move(x0);
        double fx = counted(x);
        for (int it = 1; it <= max_iter; ++it)
        {
            res.iterations = it;
            const std::vector<double> x_start = x;
            const double f_start = fx;
            std::size_t ibig = 0;
            double del = 0.0;
            for (std::size_t i = 0; i < n; ++i)
            {
                auto step = line.run(x, fx, dirs[i]);
                if (step.f - fx > del)
                {
                    del = step.f - fx;
                    ibig = i;
                }
                x = std::move(step.x);
                fx = step.f;
            }
            if (fx - f_start <= tol * std::max(1.0, std::abs(f_start)))
            {
                res.converged = true;
                break;
            }

            std::vector<double> d(n), xe(n);
            double len = 0.0;
            bool inside = true;
            for (std::size_t k = 0; k < n; ++k)
            {
                d[k] = x[k] - x_start[k];
                xe[k] = x[k] + d[k];
                len += d[k] * d[k];
                inside = inside && lo[k] <= xe[k] && xe[k] <= hi[k];
            }
            len = std::sqrt(len);
            if (!inside || len == 0.0)
                continue;
            const double fe = counted(xe);
            if (fe > f_start)
            {
                // Classic test, written for minimization of -f.
                const double fp = -f_start, fret = -fx, fptt = -fe;
                const double a = fp - fret - del, b = fp - fptt;
                const double t = 2.0 * (fp - 2.0 * fret + fptt) * a * a - del * b * b;
                if (t < 0.0)
                {
                    for (auto &v : d)
                        v /= len;
                    auto step = line.run(x, fx, d);
                    x = std::move(step.x);
                    fx = step.f;
                    dirs[ibig] = dirs[n - 1];
                    dirs[n - 1] = d;
                }
            }
        }
        res.x = std::move(x);
        res.f = fx;
        return res;
    }

    // --- stages ---

    ScreenReport stage1_screen(const OptProblem &problem, std::span<const std::size_t> n_values)
    {
        problem.validate();
        const std::size_t nc = problem.candidates.size();
        if (nc == 0)
            throw Error(Errc::empty_input, "screening needs at least one candidate");
        ScreenReport report;
        for (std::size_t n : n_values)
        {
            if (n < 1 || n > nc)
                throw Error(Errc::range, "transmitter count must lie in [1, number of candidates]");
            std::vector<std::size_t> idx(n);
            std::iota(idx.begin(), idx.end(), 0);
            for (;;)
            {
                ScreenEntry e;
                for (std::size_t i : idx)
                {
                    e.names.push_back(problem.candidates[i].name);
                    e.coords.push_back(problem.candidates[i].position);
                }
                OptProblem sub = problem;
                sub.n_tx = n;
                e.eval = evaluate(sub, e.coords);
                e.curve = deployment_curve(sub, e.coords);
                report.ranking.push_back(std::move(e));

                // next combination in lexicographic order
                std::size_t k = n;
                while (k > 0 && idx[k - 1] == nc - n + k - 1)
                    --k;
                if (k == 0)
                    break;
                ++idx[k - 1];
                for (std::size_t j = k; j < n; ++j)
                    idx[j] = idx[j - 1] + 1;
            }
        }
        std::stable_sort(report.ranking.begin(), report.ranking.end(),
                         [](const ScreenEntry &a, const ScreenEntry &b) { return a.eval.value > b.eval.value; });
        return report;
    }

    OptResult stage2_refine(const OptProblem &problem, std::span<const Vec3> start)
    {
        problem.validate();
        if (start.size() != problem.n_tx)
            throw Error(Errc::range, "start point count differs from n_tx");
        for (const auto &s : start)
            if (!problem.bounds.contains(s))
                throw Error(Errc::range, "refinement start lies outside the placement bounds");

        std::vector<double> x0, lo, hi;
        for (const auto &s : start)
        {
            x0.insert(x0.end(), {s.x, s.y, s.z});
            lo.insert(lo.end(), {problem.bounds.min.x, problem.bounds.min.y, problem.bounds.min.z});
            hi.insert(hi.end(), {problem.bounds.max.x, problem.bounds.max.y, problem.bounds.max.z});
        }

        OptResult result;
        double alt_value = neg_inf;
        const ObjectiveFn f = [&](std::span<const double> x) {
            const auto coords = unflatten(x);
            const double v = objective(problem, coords);
            const bool mountable = std::all_of(coords.begin(), coords.end(), [&](const Vec3 &p) {
                return distance_to_nearest_facet(*problem.scene, p) <= problem.mount_distance;
            });
            if (mountable && v > alt_value)
            {
                alt_value = v;
                result.alternative = coords;
            }
            return v;
        };

        const auto pr = powell_maximize(f, x0, lo, hi, problem.tol, problem.max_iter);
        result.coords = unflatten(pr.x);
        result.eval = evaluate(problem, result.coords);
        result.start_eval = evaluate(problem, start);
        result.curve = deployment_curve(problem, result.coords);
        if (result.alternative)
            result.alternative_eval = evaluate(problem, *result.alternative);
        result.evaluations = pr.evaluations;
        result.iterations = pr.iterations;
        result.converged = pr.converged;
        return result;
    }

    std::string opt_result_json(const OptResult &result, const OptProblem &problem)
    {
        using nlohmann::json;
        auto coords_json = [](const std::vector<Vec3> &c) {
            json a = json::array();
            for (const auto &p : c)
                a.push_back({p.x, p.y, p.z});
            return a;
        };
        json doc;
        doc["coords"] = coords_json(result.coords);
        doc["objective"] = result.eval.value;
        doc["rate_bps"] = result.eval.rate_bps;
        doc["coverage_at_gamma"] = result.eval.coverage_at_gamma;
        doc["feasible"] = result.eval.feasible;
        doc["start_objective"] = result.start_eval.value;
        doc["start_rate_bps"] = result.start_eval.rate_bps;
        doc["gamma_db"] = problem.gamma_db;
        doc["p_th"] = problem.p_th;
        if (result.alternative)
        {
            doc["alternative"] = {{"coords", coords_json(*result.alternative)},
                                  {"objective", result.alternative_eval->value},
                                  {"rate_bps", result.alternative_eval->rate_bps},
                                  {"feasible", result.alternative_eval->feasible}};
        }
        else
            doc["alternative"] = nullptr;
        doc["evaluations"] = result.evaluations;
        doc["iterations"] = result.iterations;
        doc["converged"] = result.converged;
        doc["coverage_curve"] = {{"threshold_db", problem.thresholds_db}, {"coverage", result.curve}};
        return doc.dump(1);
    }
}
