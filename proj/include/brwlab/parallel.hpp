#pragma once

#include <cstdint>
#include <exception>
#include <mutex>

namespace brwlab {

/// Execution policy for replica loops. `serial` is the reference path; both
/// policies must produce identical results because every replica owns its
/// randomness and results are reduced in index order.
enum class Exec { serial, parallel };

template <class Fn>
void for_each_index(Exec exec, std::int64_t count, Fn&& fn) {
    if (exec == Exec::serial || count < 2) {
        for (std::int64_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::exception_ptr failure;
    std::mutex failure_mutex;
#pragma omp parallel for schedule(dynamic, 16)
    for (std::int64_t i = 0; i < count; ++i) {
        try {
            fn(i);
        } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);
}

}  // namespace brwlab
