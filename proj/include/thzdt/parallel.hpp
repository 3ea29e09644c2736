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

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace thzdt
{
    // Resolves a worker request: 0 means every available core.
    inline std::size_t resolve_workers(std::size_t requested)
    {
        if (requested > 0)
            return requested;
        return std::max<std::size_t>(1, std::thread::hardware_concurrency());
    }

    // Calls fn(i) for i in [0, n) on up to `workers` threads. Work is claimed
    // dynamically; callers write results by index so output order does not
    // depend on scheduling. The first exception is rethrown after all
    // threads finish.
    template <class Fn>
    void parallel_for(std::size_t n, std::size_t workers, Fn &&fn)
    {
        workers = std::min(resolve_workers(workers), n);
        if (workers <= 1)
        {
            for (std::size_t i = 0; i < n; ++i)
                fn(i);
            return;
        }
        std::atomic<std::size_t> next{0};
        std::exception_ptr error;
        std::mutex error_mutex;
        auto body = [&] {
            for (std::size_t i = next++; i < n; i = next++)
            {
                try
                {
                    fn(i);
                }
                catch (...)
                {
                    std::lock_guard lock(error_mutex);
                    if (!error)
                        error = std::current_exception();
                    next = n;
                }
            }
        };
        std::vector<std::thread> threads;
        for (std::size_t t = 1; t < workers; ++t)
            threads.emplace_back(body);
        body();
        for (auto &t : threads)
            t.join();
        if (error)
            std::rethrow_exception(error);
    }
}
