// Copyright (C) 2026 The lapsekit authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <condition_variable>
#include <mutex>

namespace lapsekit::detail {

/// Counting gate bounding the number of in-flight requests per client.
class Limiter {
public:
    explicit Limiter(int slots) : slots_(slots) {}

    class Guard {
    public:
        explicit Guard(Limiter& limiter) : limiter_(limiter) {
            std::unique_lock lock(limiter_.mutex_);
            limiter_.cv_.wait(lock, [&] { return limiter_.slots_ > 0; });
            --limiter_.slots_;
        }
        ~Guard() {
            {
                std::lock_guard lock(limiter_.mutex_);
                ++limiter_.slots_;
            }
            limiter_.cv_.notify_one();
        }
        Guard(const Guard&) = delete;
        Guard& operator=(const Guard&) = delete;

    private:
        Limiter& limiter_;
    };

private:
    std::mutex mutex_;
    std::condition_variable cv_;
    int slots_;
};

}  // namespace lapsekit::detail
