#include "tdotag/fft.hpp"

#include <fftw3.h>

#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>

namespace tdotag::fft {

namespace {

struct PlanCache {
    std::mutex mu;
    std::map<std::size_t, fftw_plan> plans;

    ~PlanCache() {
        for (auto& [n, p] : plans) fftw_destroy_plan(p);
    }

    fftw_plan get(std::size_t n) {
        std::lock_guard lock(mu);
        auto it = plans.find(n);
        if (it != plans.end()) return it->second;
        auto* a = fftw_alloc_complex(n);
        auto* b = fftw_alloc_complex(n);
        fftw_plan p = fftw_plan_dft_1d(static_cast<int>(n), a, b, FFTW_FORWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
        fftw_free(a);
        fftw_free(b);
        if (!p) throw std::runtime_error("fftw: could not create plan");
        plans.emplace(n, p);
        return p;
    }
};

PlanCache& cache() {
    static PlanCache c;
    return c;
}

} // namespace

void forward(const std::complex<double>* in, std::complex<double>* out, std::size_t n) {
    fftw_plan p = cache().get(n);
    // fftw_complex is layout-compatible with std::complex<double>.
    fftw_execute_dft(p, reinterpret_cast<fftw_complex*>(const_cast<std::complex<double>*>(in)),
                     reinterpret_cast<fftw_complex*>(out));
}

} // namespace tdotag::fft
