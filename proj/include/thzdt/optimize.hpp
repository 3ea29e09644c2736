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

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "thzdt/planning.hpp"
#include "thzdt/scene.hpp"

namespace thzdt
{
    struct Candidate
    {
        std::string name;
        Vec3 position;
    };

    struct OptProblem
    {
        const Scene *scene = nullptr;
        PlanConfig cfg;
        RxPopulation rx_pop;
        std::size_t n_tx = 1;
        Box bounds;                          // placement region, inside the scene bounds
        double gamma_db = 10.0;              // coverage threshold
        double p_th = 0.9;                   // required coverage at gamma
        std::vector<Candidate> candidates;
        std::vector<double> thresholds_db;   // coverage curve axis for reports
        double mount_distance = 0.05;        // m, deployable when this close to a facet
        double tol = 1e-4;
        int max_iter = 100;

        void validate() const; // throws Error(range)
        double penalty_weight() const; // 10 B log2(1 + 10^(gamma/10))
    };

    // Default report axis: -10 dB to 40 dB in 1 dB steps.
    std::vector<double> default_thresholds();

    struct Evaluation
    {
        double value = 0.0;                 // penalized objective
        double rate_bps = 0.0;              // mean over transmitters of the per-Tx average rate
        std::vector<double> coverage_at_gamma; // per transmitter, all receivers
        bool in_bounds = true;
        bool feasible = true; // in bounds and every coverage > p_th
    };

    // Each transmitter serves the whole population with the others
    // interfering; its rate uses Pc over that SINR set divided by N. Out of
    // bounds placements return -M (N + 1 + excess), coverage shortfalls
    // subtract M times the total shortfall.
    Evaluation evaluate(const OptProblem &problem, std::span<const Vec3> coords);
    double objective(const OptProblem &problem, std::span<const Vec3> coords);

    // Deployment coverage: max-power association over the population.
    std::vector<double> deployment_curve(const OptProblem &problem, std::span<const Vec3> coords);

    using ObjectiveFn = std::function<double(std::span<const double>)>;

    struct PowellResult
    {
        std::vector<double> x;
        double f = 0.0;
        int iterations = 0;
        std::size_t evaluations = 0;
        bool converged = false; // false: max_iter reached
    };

    // Powell's conjugate-direction maximizer with golden bracketing clipped
    // to the box and Brent refinement. Every probe lies inside [lo, hi].
    PowellResult powell_maximize(const ObjectiveFn &f, std::vector<double> x0, std::span<const double> lo,
                                 std::span<const double> hi, double tol = 1e-4, int max_iter = 100,
                                 double initial_step = 0.1);

    struct ScreenEntry
    {
        std::vector<std::string> names;
        std::vector<Vec3> coords;
        Evaluation eval;
        std::vector<double> curve; // deployment coverage over problem.thresholds_db
    };

    struct ScreenReport
    {
        std::vector<ScreenEntry> ranking; // best objective first
    };

    // Every combination of n candidates for each n in n_values.
    ScreenReport stage1_screen(const OptProblem &problem, std::span<const std::size_t> n_values);

    struct OptResult
    {
        std::vector<Vec3> coords;
        Evaluation eval;
        std::vector<double> curve;
        Evaluation start_eval;
        std::optional<std::vector<Vec3>> alternative; // best probe near the facets
        std::optional<Evaluation> alternative_eval;
        std::size_t evaluations = 0;
        int iterations = 0;
        bool converged = false;
    };

    OptResult stage2_refine(const OptProblem &problem, std::span<const Vec3> start);

    std::string opt_result_json(const OptResult &result, const OptProblem &problem);
}
