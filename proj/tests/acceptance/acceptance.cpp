// Acceptance suite: one line per criterion, exit status 1 if any criterion fails.

#include "hazardlab/classical_bridge.hpp"
#include "hazardlab/cli.hpp"
#include "hazardlab/nonidentifiability.hpp"
#include "hazardlab/simulate.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

using namespace hazardlab;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::vector<std::string> notes;

  void require(bool ok, const std::string& what) {
    pass = pass && ok;
    notes.push_back(std::string(ok ? "" : "!! ") + what);
  }
};

std::string num(double v) {
  std::ostringstream s;
  s << std::setprecision(4) << v;
  return s.str();
}

int failures = 0;

void criterion(int id, const std::string& name, double budget_s, const std::function<void(Outcome&)>& body) {
  Outcome out;
  const auto start = std::chrono::steady_clock::now();
  try {
    body(out);
  } catch (const std::exception& e) {
    out.require(false, std::string("exception: ") + e.what());
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (budget_s > 0) out.require(secs <= budget_s, "runtime " + num(secs) + " s <= " + num(budget_s) + " s");
  if (!out.pass) ++failures;
  std::cout << (out.pass ? "[PASS] " : "[FAIL] ") << std::setw(2) << id << " " << name << ": ";
  for (std::size_t i = 0; i < out.notes.size(); ++i) std::cout << (i ? "; " : "") << out.notes[i];
  std::cout << std::endl;
}

Mechanism expo(const std::string& label, double rate) { return Mechanism{label, HazardShape::exponential(rate)}; }

MechanismDistribution two_exp(double p = 0.5) {
  return finite_mixture({{expo("exp1", 1.0), 1.0 - p}, {expo("exp2", 2.0), p}});
}

double sup_diff(const Curve& a, const Curve& b) { return (a.values - b.values).cwiseAbs().maxCoeff(); }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void representation(Outcome& out) {
  Scenario s;
  s.cohorts.push_back(Cohort{CovariateValue{}, two_exp(), 100000});
  s.seed = 20240501;
  const auto rep = verify_representation(s, TimeGrid::uniform(5.0, 0.001), 1e-3, 4);
  out.require(rep.strict && rep.max_abs_gap < rep.dkw_bound,
              "max|KM - S| = " + num(rep.max_abs_gap) + " < DKW " + num(rep.dkw_bound) + " (n=1e5, t in [0,5])");
}

void hazard_routes(Outcome& out) {
  const auto grid = TimeGrid::uniform(5.0, 1e-3);
  const auto mix = two_exp();
  const double d1 = sup_diff(observable_hazard(mix, grid), observable_hazard_logderiv(mix, grid));
  out.require(d1 <= 1e-4, "two-exponential route gap " + num(d1) + " <= 1e-4");
  const FrailtySpec spec{HazardShape::exponential(1.0), vector_t::Zero(0), 1.0};
  const auto frail = frailty_distribution(spec, CovariateValue{}).distribution;
  const double d2 = sup_diff(observable_hazard(frail, grid), observable_hazard_logderiv(frail, grid));
  out.require(d2 <= 1e-4, "gamma-frailty (v=1) route gap " + num(d2) + " <= 1e-4");
}

void selection(Outcome& out) {
  const auto grid = TimeGrid::uniform(5.0, 1e-3);
  const auto gap = selection_gap(two_exp(), grid);
  out.require(std::abs(gap.values(0)) <= 1e-12, "|gap(0)| = " + num(std::abs(gap.values(0))) + " <= 1e-12");
  const double g1 = gap.values(*grid.index_of(1.0));
  out.require(g1 >= 0.2, "gap(1) = " + num(g1) + " >= 0.2");
  double point_sup = 0.0;
  for (const auto& shape : {HazardShape::exponential(1.0), HazardShape::weibull(2.0, 1.0), HazardShape::log_logistic(1.5, 2.0)}) {
    point_sup = std::max(point_sup, selection_gap(finite_mixture({{Mechanism{"m", shape}, 1.0}}), grid).sup_norm());
  }
  out.require(point_sup <= 1e-12, "point-mass sup gap " + num(point_sup) + " <= 1e-12");
  double prev = std::numeric_limits<double>::infinity();
  bool monotone = true;
  std::string trail;
  for (double p : {0.4, 0.2, 0.1, 0.05, 0.01}) {
    const double s = selection_gap(two_exp(p), grid).sup_norm();
    monotone = monotone && s < prev;
    prev = s;
    trail += (trail.empty() ? "" : ", ") + num(s);
  }
  out.require(monotone, "sup gap over p = 0.4..0.01 decreasing (" + trail + ")");
  out.require(prev < 1e-3, "sup gap at p = 0.01 is " + num(prev) + " < 1e-3");
}

void nonidentifiability(Outcome& out) {
  const auto grid = TimeGrid::uniform(10.0, 0.01);
  for (double alpha : {0.25, 0.5}) {
    const auto spec = default_demonstration(grid, alpha);
    const auto members = construct_counterexamples(spec);
    std::vector<MechanismDistribution> all{spec.mu0};
    all.insert(all.end(), members.begin(), members.end());
    const auto eq = verify_equivalence(all, grid);
    double min_tv = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < members.size(); ++i) {
      for (std::size_t j = i + 1; j < members.size(); ++j) min_tv = std::min(min_tv, total_variation(members[i], members[j]));
    }
    const double floor = std::min(alpha, 1 - alpha) * spec.eta;
    const auto h0 = observable_hazard(spec.mu0, grid);
    double hdev = 0.0;
    for (const auto& m : members) hdev = std::max(hdev, sup_diff(observable_hazard(m, grid), h0));
    const std::string a = "alpha=" + num(alpha) + ": ";
    out.require(members.size() >= 5, a + num(members.size()) + " distributions");
    out.require(min_tv >= floor * (1 - 1e-12), a + "min TV " + num(min_tv) + " >= " + num(floor));
    out.require(eq.max_abs_deviation <= 1e-10, a + "max survival deviation " + num(eq.max_abs_deviation) + " <= 1e-10");
    out.require(hdev <= 1e-8, a + "hazard deviation " + num(hdev) + " <= 1e-8");
  }
  const auto spec = default_demonstration(grid, 0.25);
  const auto bad = local_mass_replacement(spec.mu0, spec.family, 0.25, spec.eta, 0.3, -0.3);
  const MechanismDistribution pair[] = {spec.mu0, bad};
  const double control = verify_equivalence(pair, grid).max_abs_deviation;
  out.require(control > 1e-4, "corrupted-partner control " + num(control) + " > 1e-4");
}

void indistinguishability(Outcome& out) {
  const auto grid = TimeGrid::uniform(10.0, 0.01);
  const auto spec = default_demonstration(grid, 0.25);
  const auto mu = local_mass_replacement(spec.mu0, spec.family, 0.25, spec.eta, 0.3, partner_epsilon(0.25, 0.3));
  const Curve analytic = aggregate_survival(spec.mu0, grid);
  for (const auto* d : {&spec.mu0, &mu}) {
    Scenario s;
    s.cohorts.push_back(Cohort{CovariateValue{}, *d, 100000});
    s.seed = 77;
    const auto recs = generate_dataset(s, 4);
    const auto rep = compare_to_analytic(recs, analytic, true);
    out.require(rep.pass, std::string(d == &mu ? "mu_0.3" : "mu0") + " gap " + num(rep.max_abs_gap) +
                              " <= " + num(rep.dkw_bound));
  }
}

void ph_recovery(Outcome& out) {
  const auto grid = TimeGrid::uniform(5.0, 0.01);
  SplitMix64 rng(606);
  double worst = 0.0;
  for (int k : {2, 3, 5}) {
    for (int trial = 0; trial < 20; ++trial) {
      vector_t c(k);
      matrix_t w(k, k);
      for (int i = 0; i < k; ++i) {
        c(i) = std::exp(-1.5 + 3.0 * uniform01(rng));
        for (int j = 0; j < k; ++j) w(i, j) = 0.05 + 0.25 * uniform01(rng) + (i == j ? 1.0 : 0.0);
        w.row(i) /= w.row(i).sum();
      }
      std::vector<CovariateValue> xs;
      for (int i = 0; i < k; ++i) xs.push_back(CovariateValue{static_cast<double>(i)});
      const HazardShape shape = HazardShape::weibull(2.0, 1.0);
      const auto rec = ph_shape_recovery(PHScenario{shape, c, xs, w}, grid, 1.0);
      const vector_t truth = c / c(0);
      worst = std::max(worst, ((rec.recovered_scales - truth).array() / truth.array()).abs().maxCoeff());
      for (Eigen::Index i = 1; i < grid.size(); ++i) {
        const double h = hazard_at(shape, grid[i]) / hazard_at(shape, 1.0);
        worst = std::max(worst, std::abs(rec.recovered_shape.values(i) - h) / h);
      }
    }
  }
  out.require(worst <= 1e-8, "K in {2,3,5}: worst relative error " + num(worst) + " <= 1e-8");
  matrix_t singular(2, 2);
  singular << 0.5, 0.5, 0.5, 0.5;
  vector_t c2(2);
  c2 << 1.0, 3.0;
  bool rejected = false;
  try {
    ph_shape_recovery(PHScenario{HazardShape::exponential(1.0), c2, {CovariateValue{0.0}, CovariateValue{1.0}}, singular},
                      grid, 1.0);
  } catch (const NumericalError&) {
    rejected = true;
  }
  out.require(rejected, "singular W rejected");
  matrix_t w2(2, 2);
  w2 << 0.7, 0.3, 0.4, 0.6;
  const PHScenario ph{HazardShape::weibull(1.5, 1.0), c2, {CovariateValue{0.0}, CovariateValue{1.0}}, w2};
  const double spread = ph_audit(ph_observable_hazards(ph, grid, PHWeightMode::SurvivorUpdated)).worst_spread();
  const double flat = ph_audit(ph_observable_hazards(ph, grid, PHWeightMode::TimeConstant)).worst_spread();
  out.require(spread > 1.01, "survivor-updated ratio spread " + num(spread) + " > 1.01");
  out.require(flat <= 1 + 1e-9, "time-constant ratio spread - 1 = " + num(flat - 1) + " <= 1e-9");
}

void frailty(Outcome& out) {
  const auto grid = TimeGrid::uniform(10.0, 0.01);
  vector_t beta(1);
  beta << 0.5;
  for (double x : {0.0, 1.0}) {
    for (double v : {0.25, 1.0, 4.0}) {
      const auto m = frailty_marginal_survival(FrailtySpec{HazardShape::exponential(1.0), beta, v}, CovariateValue{x}, grid);
      out.require(m.max_discrepancy <= 1e-6, "x=" + num(x) + " v=" + num(v) + ": " + num(m.max_discrepancy) + " <= 1e-6");
    }
  }
  const auto h = observable_hazard(
      frailty_distribution(FrailtySpec{HazardShape::exponential(1.0), beta, 1.0}, CovariateValue{1.0}).distribution, grid);
  bool decreasing = true;
  for (Eigen::Index i = 1; i < h.values.size(); ++i) decreasing = decreasing && h.values(i) < h.values(i - 1);
  out.require(decreasing, "v=1 observable hazard strictly decreasing");
}

void aft(Outcome& out) {
  vector_t beta(1);
  beta << 0.3;
  const CovariateValue x{1.0};
  const std::size_t n = 100000;
  const double bound = dkw_bound(n, 1e-3);
  int stream = 0;
  for (const auto& h0 : {HazardShape::exponential(1.0), HazardShape::weibull(2.0, 1.0)}) {
    for (bool lognormal : {false, true}) {
      AFTSpec spec{h0, beta, std::nullopt};
      if (lognormal) spec.u_law = LognormalLaw{0.0, 0.5};
      const auto d = aft_sample(spec, x, n, 900 + stream++);
      const double log_a = std::log(spec.acceleration(x));
      std::vector<double> z(n);
      for (std::size_t i = 0; i < n; ++i) {
        const auto e = static_cast<Eigen::Index>(i);
        z[i] = std::log(d.event_time(e)) - log_a - std::log(d.time_scale(e));
      }
      const double ks = ks_distance(z, [&](double v) { return aft_error_cdf(spec, v); });
      out.require(ks <= bound, std::string(h0.kind()) + (lognormal ? "/lognormal U" : "/U=1") + " KS " + num(ks) +
                                   " <= " + num(bound));
    }
  }
}

void shape_algebra(Outcome& out) {
  std::vector<HazardShape> shapes;
  for (double r : {0.1, 1.0, 3.5}) shapes.push_back(HazardShape::exponential(r));
  for (double k : {0.5, 1.0, 2.0, 3.0}) {
    for (double s : {0.5, 2.0}) shapes.push_back(HazardShape::weibull(k, s));
  }
  shapes.push_back(HazardShape::piecewise_constant({1.0}, {1.0, 3.0}));
  shapes.push_back(HazardShape::piecewise_constant({0.5, 2.0, 4.0}, {0.2, 0.05, 1.5, 0.7}));
  for (double k : {0.8, 2.5}) shapes.push_back(HazardShape::log_logistic(k, 1.5));
  const std::size_t bases = shapes.size();
  for (std::size_t i = 0; i < bases; ++i) {
    shapes.push_back(HazardShape::scaled(shapes[i], 2.5));
    shapes.push_back(HazardShape::time_scaled(shapes[i], 0.4));
  }
  bool monotone = true, origin = true;
  double round_trip = 0.0, scaled = 0.0, timescaled = 0.0;
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    const auto& s = shapes[i];
    origin = origin && survival_at(s, 0.0) == 1.0;
    double prev = 0.0;
    for (int j = 0; j <= 400; ++j) {
      const double h = cumulative_hazard(s, 0.05 * j);
      monotone = monotone && h >= prev;
      prev = h;
    }
    for (int j = 0; j <= 120; ++j) {
      const double u = std::exp(std::log(1e-6) + j * (std::log(50.0) - std::log(1e-6)) / 120.0);
      round_trip = std::max(round_trip, std::abs(cumulative_hazard(s, inverse_cumulative_hazard(s, u)) - u));
    }
    if (i < bases) {
      const auto sc = HazardShape::scaled(s, 2.5);
      const auto ts = HazardShape::time_scaled(s, 0.4);
      for (int j = 0; j <= 200; ++j) {
        const double t = 0.05 * j;
        const double base_h = cumulative_hazard(s, t);
        scaled = std::max(scaled, std::abs(cumulative_hazard(sc, t) - 2.5 * base_h) / std::max(1.0, 2.5 * base_h));
        timescaled = std::max(timescaled, std::abs(survival_at(ts, t) - survival_at(s, t / 0.4)));
      }
    }
  }
  out.require(monotone, num(shapes.size()) + " shapes: H monotone");
  out.require(origin, "S(0) = 1");
  out.require(round_trip <= 1e-8, "inverse round trip " + num(round_trip) + " <= 1e-8");
  out.require(scaled <= 1e-12, "Scaled identity " + num(scaled) + " <= 1e-12");
  out.require(timescaled <= 1e-12, "TimeScaled identity " + num(timescaled) + " <= 1e-12");
}

void determinism(Outcome& out) {
  const fs::path root = fs::temp_directory_path() / "hazardlab_acceptance_determinism";
  fs::remove_all(root);
  fs::create_directories(root);
  const fs::path scenario = root / "scenario.json";
  std::ofstream(scenario) << R"({"seed": 99, "cohorts": [
    {"covariate": [0], "count": 20000, "distribution": {"atoms": [
      {"label": "exp1", "shape": {"kind": "exponential", "rate": 1}, "weight": 0.5},
      {"label": "exp2", "shape": {"kind": "exponential", "rate": 2}, "weight": 0.5}]}},
    {"covariate": [1], "count": 5000, "distribution": {"atoms": [
      {"label": "ll", "shape": {"kind": "log_logistic", "shape": 1.5, "scale": 2}, "weight": 1}]}}],
    "censoring": {"kind": "exponential", "rate": 0.3}})";
  const fs::path aft_scenario = root / "aft.json";
  std::ofstream(aft_scenario) << R"({"reference": {"kind": "weibull", "shape": 2, "scale": 1}, "beta": [0.3],
    "covariate": [1], "u_law": {"kind": "lognormal", "mu_log": 0, "sigma_log": 0.5}, "n": 20000, "seed": 4})";
  std::size_t files = 0;
  for (const auto& [cmd, path] : {std::pair{"simulate", scenario}, std::pair{"verify", scenario},
                                  std::pair{"aft-check", aft_scenario}}) {
    for (const char* threads : {"1", "8"}) {
      setenv("HAZARDLAB_THREADS", threads, 1);
      for (const char* rep : {"a", "b"}) {
        cli::RunConfig c;
        c.command = cmd;
        c.scenario_path = path.string();
        c.output_dir = (root / (std::string(cmd) + "_" + threads + rep)).string();
        std::ostringstream log;
        const int rc = cli::run(c, log);
        if (rc != cli::kExitPass) out.require(false, std::string(cmd) + " exited " + num(rc) + ": " + log.str());
      }
    }
    const fs::path ref = root / (std::string(cmd) + "_1a");
    for (const auto& entry : fs::directory_iterator(ref)) {
      if (entry.path().extension() != ".csv") continue;
      const std::string bytes = slurp(entry.path());
      for (const char* other : {"_1b", "_8a", "_8b"}) {
        const bool same = bytes == slurp(root / (std::string(cmd) + other) / entry.path().filename());
        if (!same) out.require(false, std::string(cmd) + "/" + entry.path().filename().string() + " differs");
      }
      ++files;
    }
  }
  unsetenv("HAZARDLAB_THREADS");
  out.require(files >= 5, num(files) + " CSV files byte-identical across repeats and thread counts");
}

}  // namespace

int main() {
  std::cout << "hazardlab acceptance suite (library " << kLibraryVersion << ")" << std::endl;
  criterion(1, "representation: KM vs analytic aggregate survival", 10.0, representation);
  criterion(2, "observable hazard: ratio vs log-derivative routes", 5.0, hazard_routes);
  criterion(3, "selection gap", 2.0, selection);
  criterion(4, "non-identifiability construction", 2.0, nonidentifiability);
  criterion(5, "empirical indistinguishability", 20.0, indistinguishability);
  criterion(6, "proportional-hazards shape recovery", 2.0, ph_recovery);
  criterion(7, "gamma frailty oracle", 2.0, frailty);
  criterion(8, "AFT generative structure", 10.0, aft);
  criterion(9, "shape algebra invariants", 5.0, shape_algebra);
  criterion(10, "determinism of seeded commands", 0.0, determinism);
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criterion/criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
