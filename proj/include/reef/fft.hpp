#pragma once

#include <complex>
#include <span>
#include <vector>

namespace reef::fft {

using cplx = std::complex<double>;

// Real-to-half-complex forward transform, N/2+1 outputs, unnormalized.
std::vector<cplx> forward_real(std::span<const double> x);

// Inverse of forward_real for a length-n signal, including the 1/n factor.
std::vector<double> inverse_real(std::span<const cplx> half, std::size_t n);

// Complex transforms; inverse includes the 1/n factor.
std::vector<cplx> forward(std::span<const cplx> x);
std::vector<cplx> inverse(std::span<const cplx> x);

// Reusable real-input transform of a fixed length. Plan creation is
// serialized internally; executing distinct instances concurrently is safe.
class RealPlan {
 public:
  explicit RealPlan(std::size_t n);
  ~RealPlan();
  RealPlan(const RealPlan&) = delete;
  RealPlan& operator=(const RealPlan&) = delete;

  std::size_t size() const { return n_; }
  // in.size() == n, out.size() == n/2 + 1
  void forward(std::span<const double> in, std::span<cplx> out);
  // in.size() == n/2 + 1, out.size() == n; applies the 1/n factor
  void inverse(std::span<const cplx> in, std::span<double> out);

 private:
  std::size_t n_;
  double* real_ = nullptr;
  void* spec_ = nullptr;
  void* fwd_ = nullptr;
  void* inv_ = nullptr;
};

}  // namespace reef::fft
