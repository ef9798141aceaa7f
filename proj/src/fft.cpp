#include "reef/fft.hpp"

#include "reef/common.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cstring>
#include <memory>
#include <mutex>

namespace reef::fft {

namespace {

// FFTW's planner is not re-entrant.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};
template <typename T>
using FftwBuffer = std::unique_ptr<T, FftwFree>;

template <typename T>
FftwBuffer<T> alloc(std::size_t n) {
  auto* p = static_cast<T*>(fftw_malloc(sizeof(T) * std::max<std::size_t>(n, 1)));
  if (!p) throw std::bad_alloc();
  return FftwBuffer<T>(p);
}

class ScopedPlan {
 public:
  explicit ScopedPlan(fftw_plan p) : plan_(p) {
    if (!plan_) throw std::runtime_error("FFTW failed to create a plan");
  }
  ~ScopedPlan() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan_);
  }
  ScopedPlan(const ScopedPlan&) = delete;
  ScopedPlan& operator=(const ScopedPlan&) = delete;
  void execute() const { fftw_execute(plan_); }

 private:
  fftw_plan plan_;
};

std::vector<cplx> complex_transform(std::span<const cplx> x, int sign) {
  const std::size_t n = x.size();
  if (n == 0) return {};
  auto buf = alloc<fftw_complex>(n);
  std::unique_ptr<ScopedPlan> plan;
  {
    std::lock_guard lock(planner_mutex());
    plan = std::make_unique<ScopedPlan>(fftw_plan_dft_1d(static_cast<int>(n), buf.get(),
                                                         buf.get(), sign, FFTW_ESTIMATE));
  }
  std::memcpy(buf.get(), x.data(), n * sizeof(fftw_complex));
  plan->execute();
  std::vector<cplx> out(n);
  std::memcpy(static_cast<void*>(out.data()), buf.get(), n * sizeof(fftw_complex));
  return out;
}

}  // namespace

std::vector<cplx> forward_real(std::span<const double> x) {
  if (x.empty()) return {};
  RealPlan plan(x.size());
  std::vector<cplx> out(x.size() / 2 + 1);
  plan.forward(x, out);
  return out;
}

std::vector<double> inverse_real(std::span<const cplx> half, std::size_t n) {
  if (n == 0) return {};
  if (half.size() != n / 2 + 1) throw InvalidArgument("inverse_real: spectrum size mismatch");
  RealPlan plan(n);
  std::vector<double> out(n);
  plan.inverse(half, out);
  return out;
}

std::vector<cplx> forward(std::span<const cplx> x) { return complex_transform(x, FFTW_FORWARD); }

std::vector<cplx> inverse(std::span<const cplx> x) {
  auto out = complex_transform(x, FFTW_BACKWARD);
  const double scale = 1.0 / static_cast<double>(x.size());
  for (auto& v : out) v *= scale;
  return out;
}

RealPlan::RealPlan(std::size_t n) : n_(n) {
  if (n == 0) throw InvalidArgument("RealPlan: zero length");
  auto real = alloc<double>(n);
  auto spec = alloc<fftw_complex>(n / 2 + 1);
  {
    std::lock_guard lock(planner_mutex());
    fwd_ = fftw_plan_dft_r2c_1d(static_cast<int>(n), real.get(), spec.get(), FFTW_ESTIMATE);
    inv_ = fftw_plan_dft_c2r_1d(static_cast<int>(n), spec.get(), real.get(), FFTW_ESTIMATE);
  }
  if (!fwd_ || !inv_) {
    std::lock_guard lock(planner_mutex());
    if (fwd_) fftw_destroy_plan(static_cast<fftw_plan>(fwd_));
    if (inv_) fftw_destroy_plan(static_cast<fftw_plan>(inv_));
    throw std::runtime_error("FFTW failed to create a plan");
  }
  real_ = real.release();
  spec_ = spec.release();
}

RealPlan::~RealPlan() {
  {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(static_cast<fftw_plan>(fwd_));
    fftw_destroy_plan(static_cast<fftw_plan>(inv_));
  }
  fftw_free(real_);
  fftw_free(spec_);
}

void RealPlan::forward(std::span<const double> in, std::span<cplx> out) {
  if (in.size() != n_ || out.size() != n_ / 2 + 1) {
    throw InvalidArgument("RealPlan::forward: size mismatch");
  }
  std::copy(in.begin(), in.end(), real_);
  fftw_execute(static_cast<fftw_plan>(fwd_));
  std::memcpy(static_cast<void*>(out.data()), spec_, out.size() * sizeof(fftw_complex));
}

void RealPlan::inverse(std::span<const cplx> in, std::span<double> out) {
  if (in.size() != n_ / 2 + 1 || out.size() != n_) {
    throw InvalidArgument("RealPlan::inverse: size mismatch");
  }
  // c2r destroys its input, so it always works on the internal copy
  std::memcpy(spec_, in.data(), in.size() * sizeof(fftw_complex));
  fftw_execute(static_cast<fftw_plan>(inv_));
  const double scale = 1.0 / static_cast<double>(n_);
  for (std::size_t i = 0; i < n_; ++i) out[i] = real_[i] * scale;
}

}  // namespace reef::fft
