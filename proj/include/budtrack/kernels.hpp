#pragma once

// Data-parallel arithmetic kernels used by the scoring and embedding paths.
// Scalar reference implementations always exist; an AVX2 variant is picked
// at runtime when the CPU supports it. Equivalence between the two is
// covered by tests/test_kernels.cpp.

#include <cstddef>
#include <span>
#include <string_view>

namespace budtrack::kernels {

// Which implementation the dispatcher resolved to ("scalar" or "avx2").
std::string_view active_backend();

// Force a backend for testing; name must be "scalar", "avx2" or "auto".
// Returns false if the requested backend is unavailable on this CPU.
bool set_backend(std::string_view name);

double dot(std::span<const double> a, std::span<const double> b);

// max_i |a_i - b_i| free squared-distance
double squared_l2(std::span<const double> a, std::span<const double> b);

// log(sum_i exp(x_i)), stable under large magnitudes; -inf for empty input.
double logsumexp(std::span<const double> x);

// out_i = exp(x_i - logsumexp(x)); returns logsumexp(x).
double softmax(std::span<const double> x, std::span<double> out);

// y_i += alpha * x_i
void axpy(double alpha, std::span<const double> x, std::span<double> y);

namespace detail {
double dot_scalar(std::span<const double> a, std::span<const double> b);
double squared_l2_scalar(std::span<const double> a, std::span<const double> b);
double logsumexp_scalar(std::span<const double> x);
void axpy_scalar(double alpha, std::span<const double> x, std::span<double> y);
#if defined(__x86_64__)
double dot_avx2(std::span<const double> a, std::span<const double> b);
double squared_l2_avx2(std::span<const double> a, std::span<const double> b);
double logsumexp_avx2(std::span<const double> x);
void axpy_avx2(double alpha, std::span<const double> x, std::span<double> y);
#endif
}  // namespace detail

}  // namespace budtrack::kernels
