#include "budtrack/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace budtrack::kernels {

namespace detail {

double dot_scalar(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double squared_l2_scalar(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

double logsumexp_scalar(std::span<const double> x) {
  if (x.empty()) return -std::numeric_limits<double>::infinity();
  double m = x[0];
  for (double v : x) m = std::max(m, v);
  if (std::isinf(m)) return m;
  double s = 0.0;
  for (double v : x) s += std::exp(v - m);
  return m + std::log(s);
}

void axpy_scalar(double alpha, std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

}  // namespace detail

namespace {

struct Backend {
  double (*dot)(std::span<const double>, std::span<const double>);
  double (*squared_l2)(std::span<const double>, std::span<const double>);
  double (*logsumexp)(std::span<const double>);
  void (*axpy)(double, std::span<const double>, std::span<double>);
  std::string_view name;
};

constexpr Backend kScalar{detail::dot_scalar, detail::squared_l2_scalar,
                          detail::logsumexp_scalar, detail::axpy_scalar,
                          "scalar"};

#if defined(__x86_64__)
constexpr Backend kAvx2{detail::dot_avx2, detail::squared_l2_avx2,
                        detail::logsumexp_avx2, detail::axpy_avx2, "avx2"};

bool avx2_supported() { return __builtin_cpu_supports("avx2"); }
#else
bool avx2_supported() { return false; }
#endif

const Backend& default_backend() {
#if defined(__x86_64__)
  static const Backend& b = avx2_supported() ? kAvx2 : kScalar;
#else
  static const Backend& b = kScalar;
#endif
  return b;
}

const Backend* g_backend = nullptr;

const Backend& backend() {
  if (!g_backend) g_backend = &default_backend();
  return *g_backend;
}

}  // namespace

std::string_view active_backend() { return backend().name; }

bool set_backend(std::string_view name) {
  if (name == "auto") {
    g_backend = &default_backend();
    return true;
  }
  if (name == "scalar") {
    g_backend = &kScalar;
    return true;
  }
#if defined(__x86_64__)
  if (name == "avx2" && avx2_supported()) {
    g_backend = &kAvx2;
    return true;
  }
#endif
  return false;
}

double dot(std::span<const double> a, std::span<const double> b) {
  return backend().dot(a, b);
}

double squared_l2(std::span<const double> a, std::span<const double> b) {
  return backend().squared_l2(a, b);
}

double logsumexp(std::span<const double> x) { return backend().logsumexp(x); }

double softmax(std::span<const double> x, std::span<double> out) {
  const double lse = logsumexp(x);
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = std::exp(x[i] - lse);
  return lse;
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  backend().axpy(alpha, x, y);
}

}  // namespace budtrack::kernels
