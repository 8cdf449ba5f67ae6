#include "hazardlab/simulate.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <map>
#include <sstream>

using namespace hazardlab;
using doctest::Approx;

namespace {

Mechanism expo(const std::string& label, double rate) { return Mechanism{label, HazardShape::exponential(rate)}; }

Scenario two_exp_scenario(std::size_t n, std::uint64_t seed = 1) {
  Scenario s;
  s.cohorts.push_back(Cohort{CovariateValue{0.0}, finite_mixture({{expo("exp1", 1.0), 0.5}, {expo("exp2", 2.0), 0.5}}), n});
  s.seed = seed;
  return s;
}

EventRecord rec(double t, bool event) { return EventRecord{0, CovariateValue{}, t, event, "m"}; }

std::string csv_of(const std::vector<EventRecord>& r) {
  std::ostringstream out;
  write_dataset_csv(out, r);
  return out.str();
}

}  // namespace

TEST_SUITE("simulate") {

TEST_CASE("rng streams are deterministic and distinct") {
  SplitMix64 a = substream(7, 3, 1), b = substream(7, 3, 1), c = substream(7, 4, 1), d = substream(7, 3, 2);
  const auto x = a();
  CHECK(x == b());
  CHECK(x != c());
  CHECK(x != d());
  SplitMix64 r(0);
  for (int i = 0; i < 1000; ++i) {
    const double u = uniform01(r);
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    CHECK(unit_exponential(r) > 0.0);
  }
}

TEST_CASE("exponential draws: mean within four standard errors") {
  const double rate = 2.5;
  const Mechanism m = expo("e", rate);
  const std::size_t n = 1000000;
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    SplitMix64 rng = substream(42, i);
    sum += sample_event_time(m, rng);
  }
  const double se = (1.0 / rate) / std::sqrt(static_cast<double>(n));
  CHECK(std::abs(sum / n - 1.0 / rate) < 4 * se);
}

TEST_CASE("exponential draws: survival at 1 within the DKW band") {
  const std::size_t n = 100000;
  std::size_t alive = 0;
  for (std::size_t i = 0; i < n; ++i) {
    SplitMix64 rng = substream(5, i);
    alive += sample_event_time(expo("e", 1.0), rng) > 1.0 ? 1 : 0;
  }
  CHECK(std::abs(static_cast<double>(alive) / n - std::exp(-1.0)) <= dkw_bound(n, 1e-3));
}

TEST_CASE("defective mechanisms are refused") {
  const Mechanism tab{"tab", HazardShape::tabulated(testing::linspace(0, 1, 3), vector_t::Ones(3))};
  SplitMix64 rng(1);
  CHECK_THROWS_WITH_AS(sample_event_time(tab, rng), doctest::Contains("defective mechanism not supported"), InputError);
  Scenario s;
  s.cohorts.push_back(Cohort{CovariateValue{}, finite_mixture({{tab, 1.0}}), 10});
  CHECK_THROWS_AS(generate_dataset(s), InputError);
}

TEST_CASE("scenario validation") {
  Scenario s = two_exp_scenario(0);
  CHECK_THROWS_AS(s.validate(), InputError);
  s = two_exp_scenario(5);
  s.censoring = ExponentialCensoring{-1.0};
  CHECK_THROWS_AS(s.validate(), InputError);
  CHECK_THROWS_AS(Scenario{}.validate(), InputError);
}

TEST_CASE("point-mass cohort yields a single label") {
  Scenario s;
  s.cohorts.push_back(Cohort{CovariateValue{}, finite_mixture({{expo("only", 1.0), 1.0}}), 500});
  for (const auto& r : generate_dataset(s)) {
    CHECK(r.mechanism_label == "only");
    CHECK(r.event);
    CHECK(r.time > 0.0);
  }
}

TEST_CASE("censoring: event fraction of competing exponentials") {
  const double lambda = 1.0, r = 0.5;
  Scenario s;
  s.cohorts.push_back(Cohort{CovariateValue{}, finite_mixture({{expo("e", lambda), 1.0}}), 100000});
  s.censoring = ExponentialCensoring{r};
  s.seed = 3;
  std::size_t events = 0;
  for (const auto& rec : generate_dataset(s)) events += rec.event;
  const double p = lambda / (lambda + r);
  const double se = std::sqrt(p * (1 - p) / 100000.0);
  CHECK(std::abs(events / 100000.0 - p) < 3 * se);
}

TEST_CASE("label frequencies follow the mixture weights") {
  const auto recs = generate_dataset(two_exp_scenario(100000, 11));
  std::size_t first = 0;
  for (const auto& r : recs) first += r.mechanism_label == "exp1";
  CHECK(std::abs(first / 100000.0 - 0.5) < 3 * std::sqrt(0.25 / 100000.0));
}

TEST_CASE("dataset is independent of thread count and byte-identical on repeat") {
  const auto s = two_exp_scenario(20000, 9);
  const auto one = csv_of(generate_dataset(s, 1));
  CHECK(one == csv_of(generate_dataset(s, 1)));
  CHECK(one == csv_of(generate_dataset(s, 4)));
  CHECK(one.rfind("subject_id,covariate_json,time,event,mechanism_label\n0,[0],", 0) == 0);
}

TEST_CASE("adding a cohort leaves earlier cohorts' draws unchanged") {
  Scenario a = two_exp_scenario(100, 4);
  Scenario b = a;
  b.cohorts.push_back(Cohort{CovariateValue{1.0}, finite_mixture({{expo("x", 3.0), 1.0}}), 50});
  b.cohorts.front().count = 100;
  const auto ra = generate_dataset(a), rb = generate_dataset(b);
  for (std::size_t i = 0; i < ra.size(); ++i) CHECK(ra[i].time == rb[i].time);
  Scenario c = b;
  c.cohorts.front().count = 60;
  const auto rc = generate_dataset(c);
  for (std::size_t i = 0; i < 50; ++i) CHECK(rc[60 + i].time == rb[100 + i].time);
}

TEST_CASE("csv quoting") {
  std::vector<EventRecord> r{EventRecord{0, CovariateValue{1.0, 2.5}, 0.5, false, "a,\"b\""}};
  CHECK(csv_of(r) == "subject_id,covariate_json,time,event,mechanism_label\n0,\"[1,2.5]\",0.5,0,\"a,\"\"b\"\"\"\n");
}

TEST_CASE("kaplan-meier") {
  const std::vector<EventRecord> hand{rec(1, true), rec(2, false), rec(3, true)};
  const auto km = kaplan_meier(hand);
  CHECK(km(0.5) == 1.0);
  CHECK(km(1.0) == Approx(2.0 / 3.0));
  CHECK(km(2.5) == Approx(2.0 / 3.0));
  CHECK(km(3.0) == 0.0);

  const std::vector<EventRecord> censored{rec(1, false), rec(2, false)};
  CHECK(kaplan_meier(censored)(1.5) == 1.0);
  CHECK(kaplan_meier(censored).last_observed_time() == 2.0);

  // the tied censoring is still at risk when the event at 2 happens
  const std::vector<EventRecord> tie{rec(1, true), rec(2, false), rec(2, true), rec(4, true)};
  CHECK(kaplan_meier(tie)(2.0) == Approx(0.75 * (1.0 - 1.0 / 3.0)));
  CHECK_THROWS_AS(kaplan_meier(std::vector<EventRecord>{}), InputError);
}

TEST_CASE("kaplan-meier without censoring is the empirical survival function") {
  Scenario s = two_exp_scenario(2000, 13);
  const auto recs = generate_dataset(s);
  const auto km = kaplan_meier(recs);
  for (double t : {0.1, 0.5, 1.0, 2.0, 3.0}) {
    std::size_t alive = 0;
    for (const auto& r : recs) alive += r.time > t;
    CHECK(km(t) == Approx(alive / 2000.0).epsilon(1e-12));
  }
}

TEST_CASE("dkw bound") {
  CHECK(dkw_bound(100000, 1e-3) == Approx(0.006165).epsilon(1e-4));
  CHECK(dkw_bound(100, 1e-3) == Approx(0.1949).epsilon(1e-3));
  CHECK_THROWS_AS(dkw_bound(0, 0.1), InputError);
}

TEST_CASE("representation check") {
  const auto grid = TimeGrid::uniform(5.0, 0.01);
  const auto big = verify_representation(two_exp_scenario(100000, 21), grid);
  CHECK(big.pass);
  CHECK(big.strict);
  CHECK(big.max_abs_gap < big.dkw_bound);
  const auto small = verify_representation(two_exp_scenario(100, 21), grid);
  CHECK(small.dkw_bound == Approx(0.1949).epsilon(1e-3));
  CHECK(small.pass);
  Scenario cens = two_exp_scenario(1000, 2);
  cens.censoring = ExponentialCensoring{0.3};
  CHECK_FALSE(verify_representation(cens, grid).strict);
}

TEST_CASE("property: mechanism sufficiency across covariates") {
  const auto grid = TimeGrid::uniform(4.0, 0.02);
  const auto dist = finite_mixture({{expo("fast", 2.0), 0.5}, {Mechanism{"slow", HazardShape::weibull(1.5, 2.0)}, 0.5}});
  Scenario s;
  s.cohorts.push_back(Cohort{CovariateValue{-1.0}, dist, 40000});
  s.cohorts.push_back(Cohort{CovariateValue{3.0}, dist, 40000});
  s.seed = 77;
  const auto recs = generate_dataset(s);
  for (const auto& label : {std::string("fast"), std::string("slow")}) {
    for (double x : {-1.0, 3.0}) {
      std::vector<EventRecord> sub;
      for (const auto& r : recs) {
        if (r.mechanism_label == label && r.covariate.values()(0) == x) sub.push_back(r);
      }
      const auto& m = dist.mechanism(*dist.find(label));
      vector_t analytic(grid.size());
      for (Eigen::Index i = 0; i < grid.size(); ++i) analytic(i) = survival_at(m, grid[i]);
      const auto rep = compare_to_analytic(sub, Curve(grid, analytic, CurveKind::Survival), true);
      CHECK(rep.pass);
    }
  }
}

TEST_CASE("property: two-stage draws match the collapsed aggregate law") {
  const auto s = two_exp_scenario(100000, 31);
  const auto recs = generate_dataset(s);
  std::vector<double> t;
  for (const auto& r : recs) t.push_back(r.time);
  const auto& dist = s.cohorts.front().distribution;
  const double ks = ks_distance(t, [&](double u) {
    return 1.0 - 0.5 * survival_at(dist.mechanism(0), u) - 0.5 * survival_at(dist.mechanism(1), u);
  });
  CHECK(ks <= dkw_bound(100000, 1e-3));
}

}
