#pragma once

// Hand-rolled generators for property tests. Every property runs a fixed
// number of cases from a fixed seed; a failure reports the case index so it
// can be replayed with the same seed.

#include <Eigen/Dense>
#include <cstdint>
#include <random>
#include <string>

#include <doctest.h>

#include "ppmp/angle.hpp"

namespace gen {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(eng_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(eng_); }
  double normal(double sd = 1.0) { return std::normal_distribution<double>(0.0, sd)(eng_); }
  bool coin() { return integer(0, 1) == 1; }
  // Angle in (-pi, pi].
  double angle() { return ppmp::wrap_angle(uniform(-ppmp::kPi, ppmp::kPi)); }

  Eigen::VectorXd vector(Eigen::Index n, double lo, double hi) {
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = uniform(lo, hi);
    return v;
  }
  Eigen::VectorXd normal_vector(Eigen::Index n, double sd = 1.0) {
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = normal(sd);
    return v;
  }
  // A A^T + eps I with A ~ N(0, 1): SPD with a spread of eigenvalues.
  Eigen::MatrixXd spd(Eigen::Index n, double eps = 0.1) {
    Eigen::MatrixXd a(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) a(i, j) = normal();
    Eigen::MatrixXd s = a * a.transpose() / static_cast<double>(n);
    s.diagonal().array() += eps;
    return 0.5 * (s + s.transpose());
  }

  std::mt19937_64& engine() { return eng_; }

 private:
  std::mt19937_64 eng_;
};

// Runs `prop(rng, case_index)` for `cases` cases; each case gets its own
// generator derived from (seed, index) so failures replay in isolation.
template <class Prop>
void for_all(std::uint64_t seed, int cases, Prop&& prop) {
  for (int i = 0; i < cases; ++i) {
    Rng rng(seed * 0x9E3779B97F4A7C15ULL + static_cast<std::uint64_t>(i));
    CAPTURE(i);
    prop(rng, i);
  }
}

inline double rel_err(const Eigen::MatrixXd& got, const Eigen::MatrixXd& want) {
  const double scale = std::max(1.0, want.cwiseAbs().maxCoeff());
  return (got - want).cwiseAbs().maxCoeff() / scale;
}

}  // namespace gen
