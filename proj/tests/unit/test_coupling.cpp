#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "gen.hpp"
#include "ppmp/coupling.hpp"
#include "ppmp/error.hpp"
#include "ppmp/io.hpp"

using namespace ppmp;

TEST_CASE("basis peaks at its centers and sums to one") {
  for (PhaseMode m : {PhaseMode::cyclic, PhaseMode::single_stroke}) {
    const RbfBasis b = RbfBasis::uniform(10, m);
    for (int k = 0; k < b.size(); ++k) {
      const Eigen::VectorXd psi = eval_basis(b, PhaseAngle(b.centers[k]));
      Eigen::Index arg;
      psi.maxCoeff(&arg);
      CHECK(arg == k);
      CHECK(psi.sum() == doctest::Approx(1.0).epsilon(1e-15));
    }
  }
}

TEST_CASE("uniform basis layout") {
  const RbfBasis c = RbfBasis::uniform(4, PhaseMode::cyclic, 2.0);
  CHECK(c.centers[0] == doctest::Approx(-kPi + kPi / 4));
  CHECK(c.spacing() == doctest::Approx(kPi / 2));
  CHECK(c.width == doctest::Approx(kPi));
  const RbfBasis s = RbfBasis::uniform(3, PhaseMode::single_stroke);
  CHECK(s.centers[2] == doctest::Approx(kPi));
  CHECK_THROWS_AS(RbfBasis::uniform(1, PhaseMode::cyclic), ConfigError);
}

TEST_CASE("cyclic basis is continuous across the seam") {
  const RbfBasis b = RbfBasis::uniform(10, PhaseMode::cyclic);
  const double eps = 1e-6;
  const Eigen::VectorXd a = eval_basis(b, PhaseAngle(kPi - eps));
  const Eigen::VectorXd c = eval_basis(b, PhaseAngle(-kPi + eps));
  CHECK((a - c).cwiseAbs().maxCoeff() < 10 * eps);
}

TEST_CASE("constant handover coupling") {
  const RbfBasis b = RbfBasis::uniform(10, PhaseMode::single_stroke);
  const PolicyWeights w = PolicyWeights::constant(10, 30.0, -65.0 * kPi / 180.0);
  gen::for_all(41, 200, [&](gen::Rng& r, int) {
    const Coupling c = eval_coupling(b, w, PhaseAngle(r.uniform(0, kPi)));
    CHECK(c.stiffness == doctest::Approx(30.0).epsilon(1e-13));
    CHECK(c.shift == doctest::Approx(-65.0 * kPi / 180.0).epsilon(1e-13));
  });
}

TEST_CASE("zero weights give zero coupling") {
  const RbfBasis b = RbfBasis::uniform(6, PhaseMode::cyclic);
  const Coupling c = eval_coupling(b, PolicyWeights::constant(6, 0.0, 0.0), PhaseAngle(1.0));
  CHECK(c.stiffness == 0.0);
  CHECK(c.shift == 0.0);
}

TEST_CASE("property: narrow basis reproduces the weight at its center") {
  gen::for_all(42, 100, [](gen::Rng& r, int) {
    const int n = r.integer(2, 20);
    const PhaseMode m = r.coin() ? PhaseMode::cyclic : PhaseMode::single_stroke;
    const RbfBasis b = RbfBasis::uniform(n, m, 0.01);
    const PolicyWeights w{r.vector(n, 0, 60), r.vector(n, -kPi, kPi)};
    const int k = r.integer(0, n - 1);
    const Coupling c = eval_coupling(b, w, PhaseAngle(b.centers[k]));
    CHECK(std::fabs(c.stiffness - w.w_k[k]) < 1e-6);
    CHECK(std::fabs(c.shift - w.w_alpha[k]) < 1e-6);
  });
}

TEST_CASE("property: stiffness is clamped at zero") {
  gen::for_all(43, 500, [](gen::Rng& r, int) {
    const RbfBasis b = RbfBasis::uniform(8, PhaseMode::cyclic);
    const PolicyWeights w{r.vector(8, -50, 50), r.vector(8, -3, 3)};
    CHECK(eval_coupling(b, w, PhaseAngle(r.angle())).stiffness >= 0.0);
  });
}

TEST_CASE("property: coupling is continuous in phase") {
  gen::for_all(44, 500, [](gen::Rng& r, int) {
    const RbfBasis b = RbfBasis::uniform(10, PhaseMode::cyclic, r.uniform(0.5, 2.0));
    const PolicyWeights w{r.vector(10, 0, 60), r.vector(10, -3, 3)};
    const double phi = r.angle();
    const double h = 1e-7;
    const Coupling a = eval_coupling(b, w, PhaseAngle(phi));
    const Coupling c = eval_coupling(b, w, PhaseAngle(phi + h));
    // Lipschitz bound: |dpsi/dphi| stays below n / width.
    CHECK(std::fabs(a.stiffness - c.stiffness) < 60 * 10 / b.width * h * 10);
    CHECK(std::fabs(a.shift - c.shift) < 3 * 10 / b.width * h * 10);
  });
}

TEST_CASE("property: constant weights give constant coupling") {
  gen::for_all(45, 500, [](gen::Rng& r, int) {
    const int n = r.integer(2, 30);
    const double k = r.uniform(0, 80);
    const double a = r.uniform(-3, 3);
    const RbfBasis b = RbfBasis::uniform(n, r.coin() ? PhaseMode::cyclic : PhaseMode::single_stroke,
                                         r.uniform(0.05, 3));
    const Coupling c = eval_coupling(b, PolicyWeights::constant(n, k, a), PhaseAngle(r.angle()));
    CHECK(c.stiffness == doctest::Approx(k).epsilon(1e-12));
    CHECK(c.shift == doctest::Approx(a).epsilon(1e-12));
  });
}

TEST_CASE("policy vector and file round trip") {
  const CouplingPolicy p{RbfBasis::uniform(5, PhaseMode::cyclic), {Eigen::VectorXd::LinSpaced(5, 1, 5),
                                                                   Eigen::VectorXd::LinSpaced(5, -1, 1)}};
  const PolicyWeights w = PolicyWeights::from_vector(p.weights.to_vector());
  CHECK(w.w_k == p.weights.w_k);
  CHECK(w.w_alpha == p.weights.w_alpha);
  CHECK_THROWS_AS(PolicyWeights::from_vector(Eigen::VectorXd::Zero(3)), ConfigError);

  const auto path = std::filesystem::temp_directory_path() / "ppmp_test_policy.json";
  save_policy(p, path);
  const CouplingPolicy back = load_policy(path);
  CHECK(back.basis.centers == p.basis.centers);
  CHECK(back.basis.width == p.basis.width);
  CHECK(back.weights.w_k == p.weights.w_k);
  CHECK(back.weights.w_alpha == p.weights.w_alpha);

  nlohmann::json doc = io::read_json(path);
  doc["w_K"].push_back(1.0);
  CHECK_THROWS_AS(policy_from_json(doc), ConfigError);
}
