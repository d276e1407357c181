#include "eitsim/fft.hpp"

#include <fftw3.h>

#include <cstring>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>

namespace eit {

namespace {

// FFTW's planner is not thread-safe; execution on distinct plans is.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

class Plan {
public:
    Plan(std::size_t n, int sign) : n_(n) {
        std::lock_guard<std::mutex> lock(planner_mutex());
        buf_ = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n));
        if (!buf_) throw std::bad_alloc();
        plan_ = fftw_plan_dft_1d(static_cast<int>(n), buf_, buf_, sign, FFTW_ESTIMATE);
        if (!plan_) {
            fftw_free(buf_);
            throw std::runtime_error("FFTW plan creation failed");
        }
    }
    ~Plan() {
        std::lock_guard<std::mutex> lock(planner_mutex());
        fftw_destroy_plan(plan_);
        fftw_free(buf_);
    }
    Plan(const Plan&) = delete;
    Plan& operator=(const Plan&) = delete;

    void run(std::vector<std::complex<double>>& data) {
        std::memcpy(buf_, data.data(), sizeof(fftw_complex) * n_);
        fftw_execute(plan_);
        std::memcpy(static_cast<void*>(data.data()), buf_, sizeof(fftw_complex) * n_);
    }

private:
    std::size_t n_;
    fftw_complex* buf_ = nullptr;
    fftw_plan plan_ = nullptr;
};

void transform(std::vector<std::complex<double>>& data, int sign) {
    if (data.empty()) return;
    thread_local std::map<std::pair<std::size_t, int>, std::unique_ptr<Plan>> cache;
    auto& slot = cache[{data.size(), sign}];
    if (!slot) slot = std::make_unique<Plan>(data.size(), sign);
    slot->run(data);
}

}  // namespace

void fft_forward(std::vector<std::complex<double>>& data) { transform(data, FFTW_FORWARD); }

void fft_inverse(std::vector<std::complex<double>>& data) { transform(data, FFTW_BACKWARD); }

std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

}  // namespace eit
