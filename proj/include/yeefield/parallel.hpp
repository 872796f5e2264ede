// Copyright 2026 The yeefield Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef YEEFIELD_PARALLEL_HPP
#define YEEFIELD_PARALLEL_HPP

#include "error.hpp"

#include <algorithm>
#include <condition_variable>
#include <cstdlib>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#if defined(__SSE__) || defined(_M_X64)
#include <xmmintrin.h>
#define YEEFIELD_HAVE_MXCSR 1
#endif

namespace yeefield {

/// Scoped flush-to-zero / denormals-are-zero. Decaying fields and the leading
/// tail of a Gaussian pulse otherwise spend a long time in subnormal range,
/// which is many times slower on x86.
class FlushDenormals {
public:
    FlushDenormals() {
#ifdef YEEFIELD_HAVE_MXCSR
        saved_ = _mm_getcsr();
        _mm_setcsr(saved_ | 0x8040u);
#endif
    }
    ~FlushDenormals() {
#ifdef YEEFIELD_HAVE_MXCSR
        _mm_setcsr(saved_);
#endif
    }
    FlushDenormals(const FlushDenormals &) = delete;
    FlushDenormals &operator=(const FlushDenormals &) = delete;

private:
    unsigned saved_ = 0;
};

/// Worker count from YEEFIELD_THREADS; 1 when unset.
inline int threads_from_env() {
    const char *s = std::getenv("YEEFIELD_THREADS");
    if (!s || !*s) return 1;
    char *end = nullptr;
    const long n = std::strtol(s, &end, 10);
    if (*end != '\0' || n < 1 || n > 1024) throw ConfigError(std::string("YEEFIELD_THREADS: bad value '") + s + "'");
    return static_cast<int>(n);
}

/// Persistent fork-join pool. The calling thread takes chunk 0, so a pool of
/// size 1 spawns nothing.
class WorkerPool {
public:
    explicit WorkerPool(int n = 1) : n_(std::max(1, n)) {
        for (int t = 1; t < n_; ++t) threads_.emplace_back([this, t] { loop(t); });
    }
    WorkerPool(const WorkerPool &) = delete;
    WorkerPool &operator=(const WorkerPool &) = delete;
    ~WorkerPool() {
        {
            std::lock_guard lk(m_);
            stop_ = true;
        }
        cv_.notify_all();
        for (auto &t : threads_) t.join();
    }

    int size() const { return n_; }

    /// Splits [lo, hi) into size() contiguous chunks and runs f(begin, end) on each.
    template <class F>
    void for_range(int lo, int hi, F &&f) {
        if (hi <= lo) return;
        const int n = std::min(n_, hi - lo);
        auto chunk = [&](int t) {
            if (t >= n) return;
            const long len = hi - lo;
            const int b = lo + static_cast<int>(len * t / n), e = lo + static_cast<int>(len * (t + 1) / n);
            f(b, e);
        };
        if (n == 1) {
            chunk(0);
            return;
        }
        {
            std::lock_guard lk(m_);
            job_ = chunk;
            pending_ = n_ - 1;
            ++generation_;
        }
        cv_.notify_all();
        chunk(0);
        std::unique_lock lk(m_);
        done_.wait(lk, [&] { return pending_ == 0; });
        job_ = nullptr;
    }

private:
    void loop(int t) {
        const FlushDenormals ftz;
        long seen = 0;
        for (;;) {
            std::function<void(int)> job;
            {
                std::unique_lock lk(m_);
                cv_.wait(lk, [&] { return stop_ || generation_ != seen; });
                if (stop_) return;
                seen = generation_;
                job = job_;
            }
            job(t);
            {
                std::lock_guard lk(m_);
                --pending_;
            }
            done_.notify_one();
        }
    }

    int n_;
    std::vector<std::thread> threads_;
    std::mutex m_;
    std::condition_variable cv_, done_;
    std::function<void(int)> job_;
    long generation_ = 0;
    int pending_ = 0;
    bool stop_ = false;
};

} // namespace yeefield

#endif
