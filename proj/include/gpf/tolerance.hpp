#pragma once

#include <atomic>

namespace gpf {

// Process-wide default tolerances. Set once at startup (the CLI's --tol does
// this); library calls read them through default_tolerances().
struct Tolerances {
  double weight = 1e-12;       // normalization of states, kernel rows, triviality
  double matrix = 1e-10;       // Hermiticity / PSD / trace checks on operators
  double certificate = 1e-9;   // Choi-eigenvalue certification, imaginary traces
};

namespace detail {
inline std::atomic<double> weight_tol{1e-12};
inline std::atomic<double> matrix_tol{1e-10};
inline std::atomic<double> certificate_tol{1e-9};
}  // namespace detail

inline Tolerances default_tolerances() {
  return {detail::weight_tol.load(std::memory_order_relaxed),
          detail::matrix_tol.load(std::memory_order_relaxed),
          detail::certificate_tol.load(std::memory_order_relaxed)};
}

inline void set_default_tolerances(const Tolerances& t) {
  detail::weight_tol.store(t.weight, std::memory_order_relaxed);
  detail::matrix_tol.store(t.matrix, std::memory_order_relaxed);
  detail::certificate_tol.store(t.certificate, std::memory_order_relaxed);
}

// RAII override, mainly for tests.
class ScopedTolerances {
 public:
  explicit ScopedTolerances(const Tolerances& t) : saved_(default_tolerances()) {
    set_default_tolerances(t);
  }
  ~ScopedTolerances() { set_default_tolerances(saved_); }
  ScopedTolerances(const ScopedTolerances&) = delete;
  ScopedTolerances& operator=(const ScopedTolerances&) = delete;

 private:
  Tolerances saved_;
};

}  // namespace gpf
