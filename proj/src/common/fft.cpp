#include <bmi/common/fft.hpp>

#include <fftw3.h>

#include <map>
#include <mutex>
#include <new>
#include <tuple>

namespace bmi::fft {

template <class T> AlignedBuffer<T>::AlignedBuffer(std::size_t count) : size_(count) {
    void *p = fftw_malloc(sizeof(T) * (count == 0 ? 1 : count));
    if (!p) throw std::bad_alloc();
    data_.reset(static_cast<T *>(p));
    for (std::size_t i = 0; i < count; ++i) data_[i] = T{};
}

template <class T> void AlignedBuffer<T>::Free::operator()(T *p) const { fftw_free(p); }

template class AlignedBuffer<double>;
template class AlignedBuffer<std::complex<double>>;

namespace {

enum class Kind { R2C, C2R, C2C };

// Plans are created once per shape under a lock (FFTW's planner is not
// thread-safe) and then executed concurrently through the new-array API.
class PlanCache {
  public:
    ~PlanCache() {
        for (auto &entry : plans_) fftw_destroy_plan(entry.second);
    }

    fftw_plan get(Kind kind, int rows, int cols) {
        std::lock_guard lock(mutex_);
        const auto key = std::make_tuple(kind, rows, cols);
        if (auto it = plans_.find(key); it != plans_.end()) return it->second;
        fftw_plan plan = nullptr;
        const std::size_t n = static_cast<std::size_t>(rows) * cols;
        const std::size_t h = halfSpectrumSize(rows, cols);
        switch (kind) {
        case Kind::R2C: {
            RealBuffer in(n);
            ComplexBuffer out(h);
            plan = fftw_plan_dft_r2c_2d(rows, cols, in.data(), reinterpret_cast<fftw_complex *>(out.data()),
                                        FFTW_ESTIMATE);
            break;
        }
        case Kind::C2R: {
            ComplexBuffer in(h);
            RealBuffer out(n);
            plan = fftw_plan_dft_c2r_2d(rows, cols, reinterpret_cast<fftw_complex *>(in.data()), out.data(),
                                        FFTW_ESTIMATE);
            break;
        }
        case Kind::C2C: {
            ComplexBuffer in(n);
            ComplexBuffer out(n);
            plan = fftw_plan_dft_2d(rows, cols, reinterpret_cast<fftw_complex *>(in.data()),
                                    reinterpret_cast<fftw_complex *>(out.data()), FFTW_FORWARD, FFTW_ESTIMATE);
            break;
        }
        }
        plans_.emplace(key, plan);
        return plan;
    }

  private:
    std::mutex mutex_;
    std::map<std::tuple<Kind, int, int>, fftw_plan> plans_;
};

PlanCache &plans() {
    static PlanCache cache;
    return cache;
}

} // namespace

void forwardReal(int rows, int cols, RealBuffer &in, ComplexBuffer &out) {
    fftw_execute_dft_r2c(plans().get(Kind::R2C, rows, cols), in.data(),
                         reinterpret_cast<fftw_complex *>(out.data()));
}

void inverseReal(int rows, int cols, ComplexBuffer &in, RealBuffer &out) {
    fftw_execute_dft_c2r(plans().get(Kind::C2R, rows, cols), reinterpret_cast<fftw_complex *>(in.data()),
                         out.data());
}

void forwardComplex(int rows, int cols, ComplexBuffer &in, ComplexBuffer &out) {
    fftw_execute_dft(plans().get(Kind::C2C, rows, cols), reinterpret_cast<fftw_complex *>(in.data()),
                     reinterpret_cast<fftw_complex *>(out.data()));
}

int goodSize(int n) {
    for (int m = std::max(n, 1);; ++m) {
        int k = m;
        for (int p : {2, 3, 5}) {
            while (k % p == 0) k /= p;
        }
        if (k == 1) return m;
    }
}

} // namespace bmi::fft
