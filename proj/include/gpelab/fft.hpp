#pragma once

#include <fftw3.h>

#include <map>
#include <mutex>
#include <tuple>

#include "gpelab/grid.hpp"

namespace gpelab::detail {

/// Process-wide cache of FFTW plans keyed by (dim, n, direction). Plans are created with
/// FFTW_ESTIMATE | FFTW_UNALIGNED, so they can be executed on any out-of-place pair of arrays
/// through the new-array interface, which is safe to call concurrently.
class FftPlanCache {
public:
    static FftPlanCache& instance() {
        static FftPlanCache cache;
        return cache;
    }

    fftw_plan get(int dim, int n, int sign) {
        std::lock_guard lock(mutex_);
        auto key = std::make_tuple(dim, n, sign);
        if (auto it = plans_.find(key); it != plans_.end()) return it->second;
        std::size_t total = dim == 1 ? n : static_cast<std::size_t>(n) * n;
        auto* in = fftw_alloc_complex(total);
        auto* out = fftw_alloc_complex(total);
        int dims[2] = {n, n};
        fftw_plan plan = fftw_plan_dft(dim, dims, in, out, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
        fftw_free(in);
        fftw_free(out);
        plans_.emplace(key, plan);
        return plan;
    }

    FftPlanCache(const FftPlanCache&) = delete;
    FftPlanCache& operator=(const FftPlanCache&) = delete;

private:
    FftPlanCache() = default;
    ~FftPlanCache() {
        for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
    }

    std::mutex mutex_;
    std::map<std::tuple<int, int, int>, fftw_plan> plans_;
};

/// Unnormalized DFT of one grid-sized block; `in` and `out` must not alias.
inline void dft(const TorusGrid& grid, const cplx* in, cplx* out, int sign) {
    fftw_plan plan = FftPlanCache::instance().get(grid.dim(), grid.n(), sign);
    fftw_execute_dft(plan, reinterpret_cast<fftw_complex*>(const_cast<cplx*>(in)),
                     reinterpret_cast<fftw_complex*>(out));
}

}  // namespace gpelab::detail
