#include "fft.hpp"

#include <fftw3.h>

#include <mutex>
#include <stdexcept>

namespace ndsense::detail {

namespace {
// FFTW planning is not thread-safe; execution on distinct plans is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

void fft_forward(std::vector<std::complex<double>>& data) {
  if (data.empty()) return;
  auto* ptr = reinterpret_cast<fftw_complex*>(data.data());
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    plan = fftw_plan_dft_1d(static_cast<int>(data.size()), ptr, ptr, FFTW_FORWARD, FFTW_ESTIMATE);
  }
  if (!plan) throw std::runtime_error("fft: plan creation failed");
  fftw_execute(plan);
  std::lock_guard<std::mutex> lock(planner_mutex());
  fftw_destroy_plan(plan);
}

std::vector<std::complex<double>> rfft(const std::vector<double>& data) {
  if (data.empty()) return {};
  std::vector<double> in(data);
  std::vector<std::complex<double>> out(data.size() / 2 + 1);
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    plan = fftw_plan_dft_r2c_1d(static_cast<int>(in.size()), in.data(), reinterpret_cast<fftw_complex*>(out.data()),
                                FFTW_ESTIMATE);
  }
  if (!plan) throw std::runtime_error("fft: plan creation failed");
  fftw_execute(plan);
  std::lock_guard<std::mutex> lock(planner_mutex());
  fftw_destroy_plan(plan);
  return out;
}

}  // namespace ndsense::detail
