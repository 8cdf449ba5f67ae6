#include "hazardlab/cli.hpp"

#include "hazardlab/classical_bridge.hpp"
#include "hazardlab/json_io.hpp"
#include "hazardlab/nonidentifiability.hpp"
#include "hazardlab/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <ostream>
#include <sstream>
#include <thread>

namespace hazardlab::cli {

namespace fs = std::filesystem;

namespace {

constexpr const char* kGapCaveat =
    "diagnostic only: the mechanism-average hazard needs the true mechanism distribution, "
    "which survival data cannot reveal; this curve is computable here because the scenario "
    "supplies ground truth";

struct Defaults {
  double t_max;
  double step;
};

Defaults grid_defaults(const std::string& command) {
  if (command == "aggregate" || command == "gap") return {5.0, 1e-3};
  if (command == "counterexample" || command == "frailty-check") return {10.0, 0.01};
  return {5.0, 0.01};
}

const std::map<std::string, double>& default_tolerances() {
  static const std::map<std::string, double> tol{
      {"hazard_routes", 1e-4},  {"gap_origin", 1e-12}, {"equivalence", 1e-10},
      {"hazard_equivalence", 1e-8}, {"control_floor", 1e-4}, {"ph_spread", 1e-9},
      {"recovery", 1e-8},       {"frailty", 1e-6},     {"dkw_alpha", 1e-3},
  };
  return tol;
}

struct Check {
  std::string name;
  double value;
  double tolerance;
  std::string relation;  // "<=" or ">=" or ">"
  bool enforced = true;

  bool passed() const {
    if (std::isnan(value)) return false;
    if (relation == "<=") return value <= tolerance;
    if (relation == ">=") return value >= tolerance;
    return value > tolerance;
  }
};

class Context {
 public:
  Context(const RunConfig& config, std::ostream& log) : config_(config), log_(log) {}

  const RunConfig& config() const { return config_; }
  std::ostream& log() { return log_; }
  json& scenario() { return scenario_; }
  json& result() { return result_; }
  const TimeGrid& grid() const { return *grid_; }
  std::uint64_t seed() const { return seed_; }
  unsigned threads() const { return threads_; }
  double tol(const std::string& name) const { return tolerances_.at(name); }

  void load();
  void write_curve(const std::string& name, const Curve& curve);
  void write_text(const std::string& name, const std::string& text);
  void check(Check c) { checks_.push_back(std::move(c)); }
  int finish();

 private:
  void resolve_grid();
  fs::path out_path(const std::string& name) const { return fs::path(config_.output_dir) / name; }

  const RunConfig& config_;
  std::ostream& log_;
  json scenario_ = json::object();
  json result_ = json::object();
  json grid_echo_;
  std::optional<TimeGrid> grid_;
  std::uint64_t seed_ = 0;
  unsigned threads_ = 1;
  std::map<std::string, double> tolerances_;
  std::vector<Check> checks_;
  std::vector<std::string> written_;
};

void Context::load() {
  const auto& names = command_names();
  if (std::find(names.begin(), names.end(), config_.command) == names.end()) {
    throw InputError("unknown command '" + config_.command + "'");
  }
  if (config_.scenario_path) {
    std::ifstream in(*config_.scenario_path);
    if (!in) throw InputError("scenario: cannot open '" + *config_.scenario_path + "'");
    try {
      scenario_ = json::parse(in);
    } catch (const json::parse_error& e) {
      throw InputError(std::string("scenario: invalid JSON: ") + e.what());
    }
    if (!scenario_.is_object()) throw InputError("scenario: expected a JSON object at the top level");
  } else if (config_.command != "counterexample") {
    throw InputError("--scenario is required for command '" + config_.command + "'");
  }

  tolerances_ = default_tolerances();
  for (const auto& [name, value] : config_.tolerances) {
    if (!tolerances_.count(name)) throw InputError("--tol: unknown tolerance '" + name + "'");
    if (!(value > 0.0) || !std::isfinite(value)) throw InputError("--tol " + name + ": must be positive");
    tolerances_[name] = value;
  }
  if (!(tolerances_["dkw_alpha"] < 1.0)) throw InputError("--tol dkw_alpha: must lie in (0, 1)");

  if (config_.seed) {
    seed_ = *config_.seed;
  } else if (auto it = scenario_.find("seed"); it != scenario_.end()) {
    if (!it->is_number_unsigned()) throw InputError("scenario.seed: expected a nonnegative integer");
    seed_ = it->get<std::uint64_t>();
  }

  threads_ = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("HAZARDLAB_THREADS"); env && *env) {
    char* end = nullptr;
    const long cap = std::strtol(env, &end, 10);
    if (*end != '\0' || cap < 1) throw InputError("HAZARDLAB_THREADS must be a positive integer");
    threads_ = std::min<unsigned>(threads_, static_cast<unsigned>(std::min<long>(cap, 1024)));
  }

  resolve_grid();

  std::error_code ec;
  fs::create_directories(config_.output_dir, ec);
  if (ec || !fs::is_directory(config_.output_dir)) {
    throw InputError("--out: cannot create output directory '" + config_.output_dir + "'");
  }
}

void Context::resolve_grid() {
  std::optional<std::vector<double>> points = config_.grid_points;
  const Defaults d = grid_defaults(config_.command);
  double t_max = d.t_max;
  double step = d.step;
  if (auto it = scenario_.find("grid"); it != scenario_.end()) {
    const json& g = *it;
    if (!g.is_object()) throw InputError("scenario.grid: expected an object");
    if (auto p = g.find("points"); p != g.end() && !points) {
      const vector_t v = decode_vector(*p, "scenario.grid.points");
      points = std::vector<double>(v.data(), v.data() + v.size());
    }
    if (auto p = g.find("t_max"); p != g.end()) t_max = decode_number(*p, "scenario.grid.t_max");
    if (auto p = g.find("step"); p != g.end()) step = decode_number(*p, "scenario.grid.step");
  }
  if (config_.t_max) t_max = *config_.t_max;
  if (config_.step) step = *config_.step;

  if (points && !config_.t_max && !config_.step) {
    vector_t v = Eigen::Map<const vector_t>(points->data(), static_cast<Eigen::Index>(points->size()));
    try {
      grid_.emplace(std::move(v));
    } catch (const InputError& e) {
      throw InputError(std::string("grid.points: ") + e.what());
    }
    grid_echo_ = json{{"points", *points}};
    return;
  }
  if (!(t_max > 0.0) || !std::isfinite(t_max)) throw InputError("--t-max: must be positive");
  if (!(step > 0.0) || !std::isfinite(step)) throw InputError("--step: must be positive");
  if (t_max / step > 5e6) throw InputError("--step: grid would exceed 5e6 points");
  try {
    grid_.emplace(TimeGrid::uniform(t_max, step));
  } catch (const InputError& e) {
    throw InputError(std::string("grid: ") + e.what());
  }
  grid_echo_ = json{{"t_max", t_max}, {"step", step}};
}

void Context::write_text(const std::string& name, const std::string& text) {
  std::ofstream out(out_path(name), std::ios::binary);
  out << text;
  if (!out) throw InputError("--out: cannot write '" + out_path(name).string() + "'");
  written_.push_back(name);
}

void Context::write_curve(const std::string& name, const Curve& curve) {
  std::ostringstream s;
  write_csv(s, curve);
  write_text(name, s.str());
}

int Context::finish() {
  json checks = json::array();
  bool pass = true;
  for (const auto& c : checks_) {
    const bool ok = c.passed();
    if (c.enforced && !ok) pass = false;
    checks.push_back(json{{"name", c.name},
                          {"value", c.value},
                          {"relation", c.relation},
                          {"threshold", c.tolerance},
                          {"enforced", c.enforced},
                          {"pass", ok}});
  }

  json config;
  config["command"] = config_.command;
  config["scenario_path"] = config_.scenario_path ? json(*config_.scenario_path) : json(nullptr);
  config["output_dir"] = config_.output_dir;
  config["grid"] = grid_echo_;
  config["seed"] = seed_;
  config["tolerances"] = tolerances_;

  json report;
  report["schema_version"] = kSchemaVersion;
  report["library_version"] = kLibraryVersion;
  report["command"] = config_.command;
  report["config"] = std::move(config);
  report["scenario"] = scenario_;
  report["seed"] = seed_;
  report["grid"] = json{{"size", grid_->size()}, {"t_min", (*grid_)[0]}, {"t_max", grid_->back()}};
  report["result"] = result_;
  report["checks"] = std::move(checks);
  report["pass"] = pass;
  written_.push_back("report.json");
  report["artifacts"] = written_;
  write_text("report.json", report.dump(2) + "\n");

  for (const auto& c : checks_) {
    if (c.enforced && !c.passed()) {
      log_ << "check failed: " << c.name << " = " << format_double(c.value) << " (required " << c.relation << " "
           << format_double(c.tolerance) << ")\n";
    }
  }
  return pass ? kExitPass : kExitVerificationFailure;
}

Mechanism decode_mechanism(const json& j, const std::string& path) {
  const json& label = require_field(j, "label", path);
  if (!label.is_string()) throw InputError(path + ".label: expected a string");
  return Mechanism{label.get<std::string>(), decode_shape(require_field(j, "shape", path), path + ".shape")};
}

std::size_t decode_count(const json& j, const std::string& path) {
  if (!j.is_number_unsigned() || j.get<std::uint64_t>() < 1) {
    throw InputError(path + ": expected a positive integer");
  }
  return static_cast<std::size_t>(j.get<std::uint64_t>());
}

// Largest |a - b| over points where both are finite; nonfinite points are counted.
std::pair<double, std::size_t> finite_sup_diff(const vector_t& a, const vector_t& b) {
  double worst = 0.0;
  std::size_t skipped = 0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (!std::isfinite(a(i)) || !std::isfinite(b(i))) {
      ++skipped;
      continue;
    }
    worst = std::max(worst, std::abs(a(i) - b(i)));
  }
  return {worst, skipped};
}

void note_degenerate(Context& ctx, const MechanismDistribution& dist) {
  if (dist.size() == 1) {
    ctx.log() << "note: the mechanism distribution is a point mass; aggregation is trivial\n";
    ctx.result()["degenerate"] = true;
  }
}

void cmd_aggregate(Context& ctx) {
  const auto dist = decode_distribution(require_field(ctx.scenario(), "distribution", "scenario"),
                                        "scenario.distribution");
  note_degenerate(ctx, dist);
  const Curve s = aggregate_survival(dist, ctx.grid());
  const Curve h = observable_hazard(dist, ctx.grid());
  const Curve hl = observable_hazard_logderiv(dist, ctx.grid());
  ctx.write_curve("survival.csv", s);
  ctx.write_curve("hazard.csv", h);
  ctx.write_curve("hazard_logderiv.csv", hl);
  const auto [diff, skipped] = finite_sup_diff(h.values, hl.values);
  json& r = ctx.result();
  r["atoms"] = dist.size();
  r["provenance"] = dist.provenance().tag();
  r["survival_at_t_max"] = s.values(s.values.size() - 1);
  r["hazard_route_max_difference"] = diff;
  r["nonfinite_points_skipped"] = skipped;
  ctx.check({"hazard_routes", diff, ctx.tol("hazard_routes"), "<="});
}

void cmd_gap(Context& ctx) {
  const auto dist = decode_distribution(require_field(ctx.scenario(), "distribution", "scenario"),
                                        "scenario.distribution");
  note_degenerate(ctx, dist);
  const Curve avg = mechanism_average_hazard(dist, ctx.grid());
  const Curve obs = observable_hazard(dist, ctx.grid());
  const Curve gap = selection_gap(dist, ctx.grid());
  ctx.write_curve("average_hazard.csv", avg);
  ctx.write_curve("observable_hazard.csv", obs);
  ctx.write_curve("gap.csv", gap);
  json& r = ctx.result();
  r["caveat"] = kGapCaveat;
  r["gap_at_origin"] = gap.values(0);
  r["sup_gap"] = finite_sup_diff(gap.values, vector_t::Zero(gap.values.size())).first;
  Eigen::Index at = 0;
  vector_t finite = gap.values.unaryExpr([](double v) { return std::isfinite(v) ? v : 0.0; });
  finite.maxCoeff(&at);
  r["argmax_t"] = ctx.grid()[at];
  ctx.check({"gap_origin", std::abs(gap.values(0)), ctx.tol("gap_origin"), "<="});
}

CounterexampleSpec counterexample_spec(Context& ctx) {
  const json& s = ctx.scenario();
  if (s.empty() || (s.size() == 1 && s.contains("grid")) || (!s.contains("mu0") && !s.contains("theta0"))) {
    double alpha = 0.25;
    if (auto it = s.find("alpha"); it != s.end()) alpha = decode_number(*it, "scenario.alpha");
    CounterexampleSpec spec = default_demonstration(ctx.grid(), alpha);
    if (auto it = s.find("epsilons"); it != s.end()) {
      const vector_t e = decode_vector(*it, "scenario.epsilons");
      spec.epsilons.assign(e.data(), e.data() + e.size());
    }
    try {
      spec.validate();
    } catch (const InputError& e) {
      throw InputError(std::string("scenario: ") + e.what());
    }
    ctx.result()["family"] = "default";
    return spec;
  }
  const auto mu0 = decode_distribution(require_field(s, "mu0", "scenario"), "scenario.mu0");
  const json& label = require_field(s, "theta0", "scenario");
  if (!label.is_string()) throw InputError("scenario.theta0: expected the label of an atom of mu0");
  const auto k = mu0.find(label.get<std::string>());
  if (!k) throw InputError("scenario.theta0: label '" + label.get<std::string>() + "' is not an atom of mu0");
  const TimeGrid& grid = ctx.grid();
  vector_t g(grid.size());
  const json& pert = require_field(s, "perturbation", "scenario");
  if (pert.is_array()) {
    g = decode_vector(pert, "scenario.perturbation");
    if (g.size() != grid.size()) {
      throw InputError("scenario.perturbation: expected " + std::to_string(grid.size()) + " values, one per grid point");
    }
  } else {
    const double amp = decode_number(require_field(pert, "amplitude", "scenario.perturbation"),
                                     "scenario.perturbation.amplitude");
    const double rate = decode_number(require_field(pert, "rate", "scenario.perturbation"),
                                      "scenario.perturbation.rate");
    if (!(rate > 0.0)) throw InputError("scenario.perturbation.rate: must be positive");
    for (Eigen::Index i = 0; i < grid.size(); ++i) g(i) = amp * grid[i] * std::exp(-rate * grid[i]);
  }
  const double delta = decode_number(require_field(s, "delta", "scenario"), "scenario.delta");
  PerturbationFamily family = [&] {
    try {
      return make_perturbation(mu0.mechanism(*k), g, delta, grid);
    } catch (const InputError& e) {
      throw InputError(std::string("scenario.perturbation: ") + e.what());
    }
  }();
  const vector_t eps = decode_vector(require_field(s, "epsilons", "scenario"), "scenario.epsilons");
  CounterexampleSpec spec{mu0,
                          std::move(family),
                          decode_number(require_field(s, "alpha", "scenario"), "scenario.alpha"),
                          decode_number(require_field(s, "eta", "scenario"), "scenario.eta"),
                          std::vector<double>(eps.data(), eps.data() + eps.size())};
  try {
    spec.validate();
  } catch (const InputError& e) {
    throw InputError(std::string("scenario: ") + e.what());
  }
  ctx.result()["family"] = "scenario";
  return spec;
}

void cmd_counterexample(Context& ctx) {
  const CounterexampleSpec spec = counterexample_spec(ctx);
  const TimeGrid& grid = ctx.grid();
  const auto members = construct_counterexamples(spec);

  std::vector<MechanismDistribution> all{spec.mu0};
  all.insert(all.end(), members.begin(), members.end());
  const EquivalenceReport eq = verify_equivalence(all, grid);

  const Curve h0 = observable_hazard(spec.mu0, grid);
  ctx.write_curve("survival_mu0.csv", aggregate_survival(spec.mu0, grid));
  ctx.write_curve("hazard_mu0.csv", h0);
  double hazard_dev = 0.0;
  json distributions = json::array();
  for (std::size_t i = 0; i < members.size(); ++i) {
    const Curve h = observable_hazard(members[i], grid);
    hazard_dev = std::max(hazard_dev, finite_sup_diff(h.values, h0.values).first);
    ctx.write_curve("survival_eps_" + std::to_string(i) + ".csv", aggregate_survival(members[i], grid));
    ctx.write_curve("hazard_eps_" + std::to_string(i) + ".csv", h);
    distributions.push_back(encode_distribution(members[i]));
  }

  json tv = json::array();
  json gaps = json::array();
  double min_tv = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < members.size(); ++i) {
    json tv_row = json::array();
    json gap_row = json::array();
    for (std::size_t j = 0; j < members.size(); ++j) {
      const DistinctnessReport d = path_distinctness(members[i], members[j], grid);
      tv_row.push_back(d.tv_distance);
      gap_row.push_back(d.sup_path_gap);
      if (i != j) min_tv = std::min(min_tv, d.tv_distance);
    }
    tv.push_back(std::move(tv_row));
    gaps.push_back(std::move(gap_row));
  }

  double largest = 0.0;
  for (double e : spec.epsilons) largest = std::abs(e) > std::abs(largest) ? e : largest;
  const double flipped = -partner_epsilon(spec.alpha, largest);
  const auto corrupted = local_mass_replacement(spec.mu0, spec.family, spec.alpha, spec.eta, largest, flipped);
  const MechanismDistribution pair[] = {spec.mu0, corrupted};
  const EquivalenceReport control = verify_equivalence(pair, grid);

  const double tv_floor = std::min(spec.alpha, 1.0 - spec.alpha) * spec.eta;
  json& r = ctx.result();
  r["theta0"] = spec.family.theta0.label;
  r["epsilons"] = spec.epsilons;
  r["alpha"] = spec.alpha;
  r["eta"] = spec.eta;
  r["delta"] = spec.family.delta;
  r["admissible_half_width"] = spec.admissible_half_width();
  r["distinct_distributions"] = members.size();
  r["max_deviation"] = eq.max_abs_deviation;
  r["argmax_t"] = eq.argmax_t;
  r["hazard_max_deviation"] = hazard_dev;
  r["tv_distances"] = std::move(tv);
  r["tv_floor"] = tv_floor;
  r["sup_path_gaps"] = std::move(gaps);
  r["verified_horizon"] = spec.family.verified_horizon();
  r["negative_control"] = json{{"epsilon", largest},
                               {"epsilon_partner", flipped},
                               {"max_deviation", control.max_abs_deviation},
                               {"argmax_t", control.argmax_t}};
  r["distributions"] = std::move(distributions);

  ctx.check({"equivalence", eq.max_abs_deviation, ctx.tol("equivalence"), "<="});
  ctx.check({"hazard_equivalence", hazard_dev, ctx.tol("hazard_equivalence"), "<="});
  if (members.size() > 1) ctx.check({"min_pairwise_tv", min_tv, tv_floor * (1.0 - 1e-12), ">="});
  ctx.check({"negative_control", control.max_abs_deviation, ctx.tol("control_floor"), ">"});
}

PHScenario decode_ph_scenario(const json& s) {
  PHScenario ph{decode_shape(require_field(s, "shared_shape", "scenario"), "scenario.shared_shape"),
                decode_vector(require_field(s, "scale_factors", "scenario"), "scenario.scale_factors"),
                {},
                decode_matrix(require_field(s, "weight_matrix", "scenario"), "scenario.weight_matrix")};
  const json& xs = require_field(s, "covariate_points", "scenario");
  if (!xs.is_array()) throw InputError("scenario.covariate_points: expected an array");
  for (std::size_t i = 0; i < xs.size(); ++i) {
    ph.covariate_points.push_back(decode_covariate(xs[i], "scenario.covariate_points[" + std::to_string(i) + "]"));
  }
  try {
    ph.validate();
  } catch (const InputError& e) {
    throw InputError(std::string("scenario: ") + e.what());
  }
  return ph;
}

json audit_json(const PHAuditReport& audit) {
  json pairs = json::array();
  for (const auto& p : audit.pairs) {
    pairs.push_back(json{{"first", p.first},
                         {"second", p.second},
                         {"max_ratio", p.max_ratio},
                         {"min_ratio", p.min_ratio},
                         {"spread", p.spread},
                         {"excluded_points", p.excluded_times.size()}});
  }
  return pairs;
}

void cmd_ph_audit(Context& ctx) {
  const json& s = ctx.scenario();
  std::vector<Curve> hazards;
  if (auto it = s.find("groups"); it != s.end()) {
    if (!it->is_array()) throw InputError("scenario.groups: expected an array");
    bool all_degenerate = true;
    for (std::size_t j = 0; j < it->size(); ++j) {
      const std::string path = "scenario.groups[" + std::to_string(j) + "]";
      decode_covariate(require_field((*it)[j], "covariate", path), path + ".covariate");
      const auto dist = decode_distribution(require_field((*it)[j], "distribution", path), path + ".distribution");
      all_degenerate = all_degenerate && dist.size() == 1;
      hazards.push_back(observable_hazard(dist, ctx.grid()));
    }
    if (all_degenerate) {
      ctx.log() << "note: every group is a point mass; mechanisms are then a deterministic function of x\n";
      ctx.result()["degenerate"] = true;
    }
    ctx.result()["source"] = "groups";
  } else {
    const PHScenario ph = decode_ph_scenario(s);
    PHWeightMode mode = PHWeightMode::SurvivorUpdated;
    if (auto m = s.find("weight_mode"); m != s.end()) {
      const std::string name = m->is_string() ? m->get<std::string>() : "";
      if (name == "time_constant") {
        mode = PHWeightMode::TimeConstant;
      } else if (name != "survivor_updated") {
        throw InputError("scenario.weight_mode: expected 'time_constant' or 'survivor_updated'");
      }
    }
    hazards = ph_observable_hazards(ph, ctx.grid(), mode);
    ctx.result()["source"] = mode == PHWeightMode::TimeConstant ? "time_constant" : "survivor_updated";
  }
  for (std::size_t j = 0; j < hazards.size(); ++j) ctx.write_curve("hazard_" + std::to_string(j) + ".csv", hazards[j]);
  const PHAuditReport audit = ph_audit(hazards);
  const double worst = audit.worst_spread();
  ctx.result()["pairs"] = audit_json(audit);
  ctx.result()["worst_spread"] = worst;
  ctx.result()["proportional"] = worst - 1.0 <= ctx.tol("ph_spread");
}

void cmd_ph_recover(Context& ctx) {
  const json& s = ctx.scenario();
  const PHScenario ph = decode_ph_scenario(s);
  const double t_ref = decode_number(require_field(s, "t_ref", "scenario"), "scenario.t_ref");
  const PHRecovery rec = [&] {
    try {
      return ph_shape_recovery(ph, ctx.grid(), t_ref);
    } catch (const InputError& e) {
      throw InputError(std::string("scenario: ") + e.what());
    }
  }();
  ctx.write_curve("recovered_shape.csv", rec.recovered_shape);

  const vector_t true_scales = ph.scale_factors / ph.scale_factors(0);
  const double scale_err = ((rec.recovered_scales - true_scales).array() / true_scales.array()).abs().maxCoeff();
  const double h_ref = hazard_at(ph.shared_shape, t_ref);
  double shape_err = 0.0;
  for (Eigen::Index i = 0; i < ctx.grid().size(); ++i) {
    const double truth = hazard_at(ph.shared_shape, ctx.grid()[i]) / h_ref;
    if (!std::isfinite(truth) || truth == 0.0) continue;
    shape_err = std::max(shape_err, std::abs(rec.recovered_shape.values(i) - truth) / std::abs(truth));
  }
  json& r = ctx.result();
  r["t_ref"] = t_ref;
  r["recovered_scales"] = encode_vector(rec.recovered_scales);
  r["condition_number"] = rec.condition_number;
  r["proportionality_defect"] = rec.proportionality_defect;
  r["scale_relative_error"] = scale_err;
  r["shape_relative_error"] = shape_err;
  ctx.check({"recovery", std::max(scale_err, shape_err), ctx.tol("recovery"), "<="});
}

void cmd_frailty_check(Context& ctx) {
  const json& s = ctx.scenario();
  const HazardShape baseline = decode_shape(require_field(s, "baseline", "scenario"), "scenario.baseline");
  vector_t beta(0);
  if (auto it = s.find("beta"); it != s.end()) beta = decode_vector(*it, "scenario.beta");
  CovariateValue x;
  if (auto it = s.find("covariate"); it != s.end()) x = decode_covariate(*it, "scenario.covariate");
  if (beta.size() != x.dim()) throw InputError("scenario.beta: dimension must match scenario.covariate");
  vector_t variances;
  if (auto it = s.find("variances"); it != s.end()) {
    variances = decode_vector(*it, "scenario.variances");
  } else {
    variances = vector_t::Constant(1, decode_number(require_field(s, "variance", "scenario"), "scenario.variance"));
  }
  QuadratureSpec quad;
  if (auto it = s.find("nodes"); it != s.end()) {
    if (!it->is_number_integer()) throw InputError("scenario.nodes: expected an integer");
    quad.nodes = it->get<int>();
    try {
      quad.validate();
    } catch (const InputError& e) {
      throw InputError(std::string("scenario.nodes: ") + e.what());
    }
  }

  json runs = json::array();
  double worst = 0.0;
  for (Eigen::Index i = 0; i < variances.size(); ++i) {
    const std::string path = "scenario.variances[" + std::to_string(i) + "]";
    if (!(variances(i) > 0.0)) throw InputError(path + ": variance must be positive");
    const FrailtySpec spec{baseline, beta, variances(i)};
    const Discretization disc = frailty_distribution(spec, x, quad);
    const FrailtyMarginal m = frailty_marginal_survival(spec, x, ctx.grid(), quad);
    const Curve h = observable_hazard(disc.distribution, ctx.grid());
    bool decreasing = true;
    for (Eigen::Index t = 1; t < h.values.size(); ++t) decreasing = decreasing && h.values(t) < h.values(t - 1);
    const std::string tag = std::to_string(i);
    ctx.write_curve("frailty_quadrature_" + tag + ".csv", m.quadrature);
    ctx.write_curve("frailty_closed_form_" + tag + ".csv", m.closed_form);
    ctx.write_curve("frailty_hazard_" + tag + ".csv", h);
    worst = std::max(worst, m.max_discrepancy);
    runs.push_back(json{{"variance", variances(i)},
                        {"atoms", disc.distribution.size()},
                        {"quadrature_defect", disc.defect},
                        {"max_discrepancy", m.max_discrepancy},
                        {"observable_hazard_strictly_decreasing", decreasing}});
  }
  ctx.result()["nodes"] = quad.nodes;
  ctx.result()["runs"] = std::move(runs);
  ctx.check({"frailty", worst, ctx.tol("frailty"), "<="});
}

void cmd_aft_check(Context& ctx) {
  const json& s = ctx.scenario();
  AFTSpec spec{decode_shape(require_field(s, "reference", "scenario"), "scenario.reference"), vector_t(0), {}};
  if (auto it = s.find("beta"); it != s.end()) spec.beta = decode_vector(*it, "scenario.beta");
  CovariateValue x;
  if (auto it = s.find("covariate"); it != s.end()) x = decode_covariate(*it, "scenario.covariate");
  if (spec.beta.size() != x.dim()) throw InputError("scenario.beta: dimension must match scenario.covariate");
  if (auto it = s.find("u_law"); it != s.end() && !it->is_null()) spec.u_law = decode_law(*it, "scenario.u_law");
  std::size_t n = 100000;
  if (auto it = s.find("n"); it != s.end()) n = decode_count(*it, "scenario.n");

  const AFTDraws d = aft_sample(spec, x, n, ctx.seed());
  const double log_a = std::log(spec.acceleration(x));
  std::vector<double> residuals(n);
  std::ostringstream csv;
  csv << "index,event_time,time_scale,reference_time\n";
  for (std::size_t i = 0; i < n; ++i) {
    const auto e = static_cast<Eigen::Index>(i);
    residuals[i] = std::log(d.event_time(e)) - log_a - std::log(d.time_scale(e));
    csv << i << ',' << format_double(d.event_time(e)) << ',' << format_double(d.time_scale(e)) << ','
        << format_double(d.reference_time(e)) << '\n';
  }
  ctx.write_text("aft_draws.csv", csv.str());
  const double ks = ks_distance(residuals, [&](double z) { return aft_error_cdf(spec, z); });
  const double bound = dkw_bound(n, ctx.tol("dkw_alpha"));
  json& r = ctx.result();
  r["n"] = n;
  r["acceleration"] = std::exp(log_a);
  r["u_law"] = spec.u_law ? encode_law(*spec.u_law) : json(nullptr);
  r["ks_distance"] = ks;
  r["dkw_bound"] = bound;
  ctx.check({"aft_error_law", ks, bound, "<="});
}

void cmd_clustering(Context& ctx) {
  const json& s = ctx.scenario();
  ClusteringSpec spec;
  const json& comps = require_field(s, "components", "scenario");
  if (!comps.is_array()) throw InputError("scenario.components: expected an array");
  for (std::size_t k = 0; k < comps.size(); ++k) {
    spec.components.push_back(decode_mechanism(comps[k], "scenario.components[" + std::to_string(k) + "]"));
  }
  spec.weight_params = decode_matrix(require_field(s, "weight_params", "scenario"), "scenario.weight_params");
  const json& xs = require_field(s, "covariates", "scenario");
  if (!xs.is_array() || xs.empty()) throw InputError("scenario.covariates: expected a nonempty array");
  json out = json::array();
  for (std::size_t j = 0; j < xs.size(); ++j) {
    const std::string path = "scenario.covariates[" + std::to_string(j) + "]";
    const CovariateValue x = decode_covariate(xs[j], path);
    const auto [weights, dist] = [&] {
      try {
        return std::make_pair(clustering_weights(spec, x), clustering_distribution(spec, x));
      } catch (const InputError& e) {
        throw InputError(path + ": " + e.what());
      }
    }();
    ctx.write_curve("survival_" + std::to_string(j) + ".csv", aggregate_survival(dist, ctx.grid()));
    ctx.write_curve("hazard_" + std::to_string(j) + ".csv", observable_hazard(dist, ctx.grid()));
    out.push_back(json{{"covariate", encode_vector(x.values())},
                       {"weights", encode_vector(weights)},
                       {"provenance", dist.provenance().tag()}});
  }
  ctx.result()["covariates"] = std::move(out);
}

Scenario decode_simulation(Context& ctx) {
  const json& s = ctx.scenario();
  Scenario sc;
  sc.seed = ctx.seed();
  const json& cohorts = require_field(s, "cohorts", "scenario");
  if (!cohorts.is_array() || cohorts.empty()) throw InputError("scenario.cohorts: expected a nonempty array");
  for (std::size_t c = 0; c < cohorts.size(); ++c) {
    const std::string path = "scenario.cohorts[" + std::to_string(c) + "]";
    CovariateValue x;
    if (auto it = cohorts[c].find("covariate"); it != cohorts[c].end()) x = decode_covariate(*it, path + ".covariate");
    sc.cohorts.push_back(Cohort{
        x, decode_distribution(require_field(cohorts[c], "distribution", path), path + ".distribution"),
        decode_count(require_field(cohorts[c], "count", path), path + ".count")});
    for (const auto& m : sc.cohorts.back().distribution.mechanisms()) {
      if (std::isfinite(cumulative_hazard_supremum(m.shape))) {
        throw InputError(path + ".distribution: defective mechanism not supported: '" + m.label +
                         "' has bounded cumulative hazard");
      }
    }
  }
  if (auto it = s.find("censoring"); it != s.end()) {
    const std::string kind_path = "scenario.censoring.kind";
    const json& kind = require_field(*it, "kind", "scenario.censoring");
    if (kind == "exponential") {
      const double rate = decode_number(require_field(*it, "rate", "scenario.censoring"), "scenario.censoring.rate");
      if (!(rate > 0.0)) throw InputError("scenario.censoring.rate: must be positive");
      sc.censoring = ExponentialCensoring{rate};
    } else if (kind != "none") {
      throw InputError(kind_path + ": expected 'none' or 'exponential'");
    }
  }
  return sc;
}

void cmd_simulate(Context& ctx, bool verify) {
  const Scenario sc = decode_simulation(ctx);
  const auto records = generate_dataset(sc, ctx.threads());
  const Curve analytic = pooled_aggregate_survival(sc, ctx.grid());
  const Curve km = kaplan_meier(records).sample(ctx.grid());
  if (!verify) {
    std::ostringstream csv;
    write_dataset_csv(csv, records);
    ctx.write_text("dataset.csv", csv.str());
  }
  ctx.write_curve("km.csv", km);
  ctx.write_curve("analytic_survival.csv", analytic);

  const RepresentationReport rep = compare_to_analytic(records, analytic, !sc.censored(), ctx.tol("dkw_alpha"));
  std::size_t events = 0;
  for (const auto& r : records) events += r.event ? 1 : 0;
  json& r = ctx.result();
  r["subjects"] = rep.subjects;
  r["events"] = events;
  r["censored"] = records.size() - events;
  r["max_abs_gap"] = rep.max_abs_gap;
  r["argmax_t"] = rep.argmax_t;
  r["dkw_bound"] = rep.dkw_bound;
  r["strict"] = rep.strict;
  if (verify) {
    Check c{"representation", rep.max_abs_gap, rep.dkw_bound, "<="};
    c.enforced = rep.strict;
    if (!rep.strict) ctx.log() << "note: censoring present; the DKW comparison is indicative only\n";
    ctx.check(c);
  }
}

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"aggregate",     "gap",       "counterexample", "ph-audit",
                                              "ph-recover",    "frailty-check", "aft-check",  "clustering",
                                              "simulate",      "verify"};
  return names;
}

void parse_tolerance(const std::string& text, std::map<std::string, double>& into) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0) throw InputError("--tol: expected NAME=VALUE, got '" + text + "'");
  const std::string name = text.substr(0, eq);
  const std::string value = text.substr(eq + 1);
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != value.size()) throw InputError("--tol " + name + ": '" + value + "' is not a number");
  into[name] = v;
}

int run(const RunConfig& config, std::ostream& log) {
  try {
    Context ctx(config, log);
    ctx.load();
    const std::string& c = config.command;
    if (c == "aggregate") cmd_aggregate(ctx);
    else if (c == "gap") cmd_gap(ctx);
    else if (c == "counterexample") cmd_counterexample(ctx);
    else if (c == "ph-audit") cmd_ph_audit(ctx);
    else if (c == "ph-recover") cmd_ph_recover(ctx);
    else if (c == "frailty-check") cmd_frailty_check(ctx);
    else if (c == "aft-check") cmd_aft_check(ctx);
    else if (c == "clustering") cmd_clustering(ctx);
    else if (c == "simulate") cmd_simulate(ctx, false);
    else cmd_simulate(ctx, true);
    return ctx.finish();
  } catch (const InputError& e) {
    log << "input error: " << e.what() << "\n";
    return kExitInputError;
  } catch (const NumericalError& e) {
    log << "numerical failure: " << e.what() << "\n";
    return kExitVerificationFailure;
  } catch (const json::exception& e) {
    log << "input error: " << e.what() << "\n";
    return kExitInputError;
  }
}

}  // namespace hazardlab::cli
