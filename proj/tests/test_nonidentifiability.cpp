#include "hazardlab/nonidentifiability.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>

using namespace hazardlab;
using doctest::Approx;

namespace {

const TimeGrid& grid10() {
  static const TimeGrid g = TimeGrid::uniform(10.0, 0.01);
  return g;
}

vector_t default_g(const TimeGrid& g) { return (0.5 * g.points().array() * (-g.points().array()).exp()).matrix(); }

Mechanism theta0() { return Mechanism{"theta0", HazardShape::exponential(1.0)}; }

constexpr double kMaxS0g = 0.091969860292860584;

}  // namespace

TEST_SUITE("nonidentifiability") {

TEST_CASE("default perturbation is accepted") {
  const auto fam = make_perturbation(theta0(), default_g(grid10()), 0.5, grid10());
  CHECK(fam.verified_horizon() == Approx(10.0));
  const auto m = fam.member(0.3);
  CHECK(m.label == "theta0[eps=0.3]");
  CHECK_THROWS_AS(fam.member(0.6), InputError);
}

TEST_CASE("invalid perturbations are rejected") {
  CHECK_THROWS_WITH_AS(make_perturbation(theta0(), vector_t::Zero(grid10().size()), 0.5, grid10()),
                       doctest::Contains("not be identically zero"), InputError);
  vector_t shifted = default_g(grid10()).array() + 0.1;
  CHECK_THROWS_WITH_AS(make_perturbation(theta0(), shifted, 0.5, grid10()), doctest::Contains("g(0) must be 0"),
                       InputError);
  CHECK_THROWS_WITH_AS(make_perturbation(theta0(), default_g(grid10()), 5.0, grid10()),
                       doctest::Contains("(t = "), InputError);
}

TEST_CASE("partner epsilon") {
  CHECK(partner_epsilon(0.5, 0.3) == -0.3);
  CHECK(partner_epsilon(0.25, 0.3) == Approx(-0.1));
  for (double a : {0.1, 0.25, 0.5, 0.7, 0.9}) {
    for (double e : {0.05, -0.2, 0.37}) CHECK(std::abs(a * e + (1 - a) * partner_epsilon(a, e)) <= 4 * std::numeric_limits<double>::epsilon() * std::abs(e));
  }
}

TEST_CASE("full replacement of a point mass") {
  const auto fam = make_perturbation(theta0(), default_g(grid10()), 0.5, grid10());
  const auto mu0 = finite_mixture({{theta0(), 1.0}});
  const auto mu = local_mass_replacement(mu0, fam, 0.5, 1.0, 0.3, partner_epsilon(0.5, 0.3));
  REQUIRE(mu.size() == 2);
  CHECK(mu.weight(*mu.find("theta0[eps=0.3]")) == Approx(0.5));
  CHECK(mu.weight(*mu.find("theta0[eps=-0.3]")) == Approx(0.5));
  CHECK_FALSE(mu.find("theta0"));
}

TEST_CASE("spec validation") {
  auto spec = default_demonstration(grid10());
  CHECK_NOTHROW(spec.validate());
  CHECK(spec.admissible_half_width() == Approx(0.5));
  spec.eta = 0.7;
  CHECK_THROWS_WITH_AS(spec.validate(), doctest::Contains("eta exceeds"), InputError);
  spec = default_demonstration(grid10(), 0.75);
  CHECK(spec.admissible_half_width() == Approx(0.5 / 3.0));
  CHECK_THROWS_AS(spec.validate(), InputError);
  spec.epsilons = {0.05, 0.1, -0.1};
  CHECK_NOTHROW(spec.validate());
  spec.epsilons = {0.05, 0.05};
  CHECK_THROWS_AS(spec.validate(), InputError);
  spec.epsilons = {0.0};
  CHECK_THROWS_AS(spec.validate(), InputError);
}

TEST_CASE("equivalence and distinctness of the default family") {
  for (double alpha : {0.25, 0.5}) {
    CAPTURE(alpha);
    const auto spec = default_demonstration(grid10(), alpha);
    const auto members = construct_counterexamples(spec);
    CHECK(members.size() >= 5);
    std::vector<MechanismDistribution> all{spec.mu0};
    all.insert(all.end(), members.begin(), members.end());
    CHECK(verify_equivalence(all, grid10()).max_abs_deviation <= 1e-10);
    const auto h0 = observable_hazard(spec.mu0, grid10());
    for (const auto& m : members) {
      CHECK((observable_hazard(m, grid10()).values - h0.values).cwiseAbs().maxCoeff() <= 1e-8);
      CHECK(total_variation(spec.mu0, m) == Approx(spec.eta));
    }
    for (std::size_t i = 0; i < members.size(); ++i) {
      for (std::size_t j = i + 1; j < members.size(); ++j) {
        const auto d = path_distinctness(members[i], members[j], grid10());
        CHECK(d.tv_distance >= std::min(alpha, 1 - alpha) * spec.eta * (1 - 1e-12));
        const double expected = std::abs(spec.epsilons[i] - spec.epsilons[j]) * kMaxS0g;
        CHECK(d.sup_path_gap == Approx(expected).epsilon(1e-9));
      }
    }
  }
}

TEST_CASE("self comparisons are zero") {
  const auto spec = default_demonstration(grid10());
  const MechanismDistribution same[] = {spec.mu0, spec.mu0};
  CHECK(verify_equivalence(same, grid10()).max_abs_deviation == 0.0);
  const auto d = path_distinctness(spec.mu0, spec.mu0, grid10());
  CHECK(d.sup_path_gap == 0.0);
  CHECK(d.tv_distance == 0.0);
}

TEST_CASE("negative control: corrupted partner breaks equivalence") {
  const auto spec = default_demonstration(grid10(), 0.25);
  const auto bad = local_mass_replacement(spec.mu0, spec.family, 0.25, spec.eta, 0.3, -0.3);
  const MechanismDistribution pair[] = {spec.mu0, bad};
  const auto rep = verify_equivalence(pair, grid10());
  // residual eta * (alpha eps + (1 - alpha) eps') * S0 g, maximal where S0 g peaks
  const double residual = spec.eta * std::abs(0.25 * 0.3 - 0.75 * 0.3) * kMaxS0g;
  CHECK(rep.max_abs_deviation == Approx(residual).epsilon(1e-9));
  CHECK(rep.argmax_t == Approx(0.5));
  CHECK(rep.max_abs_deviation > 1e-4);
}

TEST_CASE("alpha one half makes eps and -eps coincide") {
  auto spec = default_demonstration(grid10(), 0.5);
  spec.epsilons = {0.2, -0.2};
  CHECK_THROWS_AS(construct_counterexamples(spec), InputError);
}

TEST_CASE("property: interior members are valid survival curves") {
  const auto fam = make_perturbation(theta0(), default_g(grid10()), 0.5, grid10());
  for (double eps : {-0.45, -0.2, 0.01, 0.25, 0.49}) {
    const auto m = fam.member(eps);
    double prev = 1.0;
    for (Eigen::Index i = 0; i < grid10().size(); ++i) {
      const double s = survival_at(m, grid10()[i]);
      CHECK(s <= prev + 1e-15);
      CHECK(s >= 0.0);
      CHECK(s <= 1.0);
      prev = s;
    }
  }
}

TEST_CASE("property: random admissible specs stay equivalent") {
  testing::Gen gen(21);
  for (int trial = 0; trial < 20; ++trial) {
    const double rate = gen.uniform(0.5, 2.0);
    const double amp = gen.uniform(0.1, 0.5);
    const Mechanism base{"base", HazardShape::exponential(rate)};
    const vector_t g = (amp * grid10().points().array() * (-grid10().points().array()).exp()).matrix();
    const auto fam = make_perturbation(base, g, 0.5, grid10());
    const double w = gen.uniform(0.3, 0.9);
    const auto mu0 = finite_mixture({{base, w}, {Mechanism{"other", HazardShape::weibull(1.5, 1.0)}, 1 - w}});
    const double alpha = gen.uniform(0.1, 0.9);
    CounterexampleSpec spec{mu0, fam, alpha, gen.uniform(0.05, w), {}};
    const double dp = spec.admissible_half_width();
    spec.epsilons = {0.2 * dp, 0.5 * dp, -0.7 * dp};
    const auto members = construct_counterexamples(spec);
    std::vector<MechanismDistribution> all{mu0};
    all.insert(all.end(), members.begin(), members.end());
    CHECK(verify_equivalence(all, grid10()).max_abs_deviation <= 1e-10);
  }
}

}
