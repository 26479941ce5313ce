#pragma once

// Every data-parallel kernel in the library takes an ExecutionPolicy. The
// serial path is the reference implementation; the OpenMP path must produce
// bitwise-identical output because each task owns its random stream and its
// result slot.

#include <cstddef>
#include <exception>
#include <mutex>

namespace rsc {

enum class ExecutionPolicy { Serial, Parallel };

int max_threads();

template <class Fn>
void for_each_task(std::size_t count, ExecutionPolicy policy, Fn&& fn) {
    if (policy == ExecutionPolicy::Serial) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    // Exceptions may not cross the OpenMP region boundary.
    std::exception_ptr first_error;
    std::mutex error_mutex;
    const auto n = static_cast<long long>(count);
#pragma omp parallel for schedule(dynamic, 1)
    for (long long i = 0; i < n; ++i) {
        try {
            fn(static_cast<std::size_t>(i));
        } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!first_error) first_error = std::current_exception();
        }
    }
    if (first_error) std::rethrow_exception(first_error);
}

} // namespace rsc
