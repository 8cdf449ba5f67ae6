#include "hazardlab/json_io.hpp"

#include <cmath>

namespace hazardlab {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::vector<double> to_std(const vector_t& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

// Runs a library constructor and re-throws its InputError with the JSON path prepended.
template <typename F>
auto at_path(const std::string& path, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const InputError& e) {
    throw InputError(path + ": " + e.what());
  }
}

}  // namespace

const json& require_field(const json& obj, const char* key, const std::string& path) {
  if (!obj.is_object()) throw InputError(path + ": expected an object");
  const auto it = obj.find(key);
  if (it == obj.end()) throw InputError(path + "." + key + ": missing required field");
  return *it;
}

double decode_number(const json& j, const std::string& path) {
  if (!j.is_number()) throw InputError(path + ": expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw InputError(path + ": expected a finite number");
  return v;
}

json encode_vector(const vector_t& v) { return json(to_std(v)); }

vector_t decode_vector(const json& j, const std::string& path) {
  if (!j.is_array()) throw InputError(path + ": expected an array of numbers");
  vector_t v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    v(static_cast<Eigen::Index>(i)) = decode_number(j[i], path + "[" + std::to_string(i) + "]");
  }
  return v;
}

matrix_t decode_matrix(const json& j, const std::string& path) {
  if (!j.is_array()) throw InputError(path + ": expected an array of rows");
  matrix_t m;
  for (std::size_t r = 0; r < j.size(); ++r) {
    const std::string row_path = path + "[" + std::to_string(r) + "]";
    const vector_t row = decode_vector(j[r], row_path);
    if (r == 0) m.resize(static_cast<Eigen::Index>(j.size()), row.size());
    if (row.size() != m.cols()) throw InputError(row_path + ": rows must have equal length");
    m.row(static_cast<Eigen::Index>(r)) = row.transpose();
  }
  return m;
}

CovariateValue decode_covariate(const json& j, const std::string& path) {
  return CovariateValue(decode_vector(j, path));
}

json encode_shape(const HazardShape& shape) {
  json j;
  j["kind"] = std::string(shape.kind());
  std::visit(overloaded{
                 [&](const Exponential& e) { j["rate"] = e.rate; },
                 [&](const Weibull& w) {
                   j["shape"] = w.shape;
                   j["scale"] = w.scale;
                 },
                 [&](const PiecewiseConstant& p) {
                   j["breakpoints"] = p.breakpoints;
                   j["rates"] = p.rates;
                 },
                 [&](const LogLogistic& l) {
                   j["shape"] = l.shape;
                   j["scale"] = l.scale;
                 },
                 [&](const Scaled& s) {
                   j["base"] = encode_shape(*s.base);
                   j["factor"] = s.factor;
                 },
                 [&](const TimeScaled& s) {
                   j["base"] = encode_shape(*s.base);
                   j["factor"] = s.factor;
                 },
                 [&](const Tabulated& t) {
                   j["grid"] = to_std(t.grid);
                   j["values"] = to_std(t.values);
                 },
                 [&](const Perturbed& p) {
                   j["base"] = encode_shape(*p.base);
                   j["grid"] = to_std(p.grid);
                   j["g"] = to_std(p.g);
                   j["epsilon"] = p.epsilon;
                 },
             },
             shape.variant());
  return j;
}

HazardShape decode_shape(const json& j, const std::string& path) {
  const json& kind_field = require_field(j, "kind", path);
  if (!kind_field.is_string()) throw InputError(path + ".kind: expected a string");
  const std::string kind = kind_field.get<std::string>();
  auto num = [&](const char* key) { return decode_number(require_field(j, key, path), path + "." + key); };
  auto vec = [&](const char* key) { return decode_vector(require_field(j, key, path), path + "." + key); };
  auto base = [&]() { return decode_shape(require_field(j, "base", path), path + ".base"); };

  if (kind == "exponential") {
    const double rate = num("rate");
    return at_path(path + ".rate", [&] { return HazardShape::exponential(rate); });
  }
  if (kind == "weibull") {
    const double k = num("shape"), scale = num("scale");
    return at_path(path, [&] { return HazardShape::weibull(k, scale); });
  }
  if (kind == "piecewise_constant") {
    const vector_t b = vec("breakpoints"), r = vec("rates");
    return at_path(path, [&] { return HazardShape::piecewise_constant(to_std(b), to_std(r)); });
  }
  if (kind == "log_logistic") {
    const double k = num("shape"), scale = num("scale");
    return at_path(path, [&] { return HazardShape::log_logistic(k, scale); });
  }
  if (kind == "scaled" || kind == "time_scaled") {
    HazardShape b = base();
    const double factor = num("factor");
    return at_path(path + ".factor", [&] {
      return kind == "scaled" ? HazardShape::scaled(b, factor) : HazardShape::time_scaled(b, factor);
    });
  }
  if (kind == "tabulated") {
    vector_t grid = vec("grid"), values = vec("values");
    return at_path(path, [&] { return HazardShape::tabulated(grid, values); });
  }
  if (kind == "perturbed") {
    HazardShape b = base();
    vector_t grid = vec("grid"), g = vec("g");
    const double eps = num("epsilon");
    return at_path(path, [&] { return HazardShape::perturbed(b, grid, g, eps); });
  }
  throw InputError(path + ".kind: unknown hazard kind '" + kind + "'");
}

json encode_distribution(const MechanismDistribution& dist) {
  json atoms = json::array();
  for (Eigen::Index k = 0; k < dist.size(); ++k) {
    json a;
    a["label"] = dist.mechanism(k).label;
    a["shape"] = encode_shape(dist.mechanism(k).shape);
    a["weight"] = dist.weight(k);
    atoms.push_back(std::move(a));
  }
  json j;
  j["atoms"] = std::move(atoms);
  j["provenance"] = dist.provenance().tag();
  return j;
}

MechanismDistribution decode_distribution(const json& j, const std::string& path) {
  const json& atoms = require_field(j, "atoms", path);
  if (!atoms.is_array() || atoms.empty()) throw InputError(path + ".atoms: expected a nonempty array");
  std::vector<std::pair<Mechanism, double>> pairs;
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    const std::string ap = path + ".atoms[" + std::to_string(i) + "]";
    const json& label = require_field(atoms[i], "label", ap);
    if (!label.is_string()) throw InputError(ap + ".label: expected a string");
    const double w = decode_number(require_field(atoms[i], "weight", ap), ap + ".weight");
    if (!(w > 0.0)) throw InputError(ap + ".weight: weight must be positive, got " + format_double(w));
    pairs.emplace_back(Mechanism{label.get<std::string>(), decode_shape(require_field(atoms[i], "shape", ap), ap + ".shape")}, w);
  }
  Renormalize renorm = Renormalize::No;
  if (auto it = j.find("renormalize"); it != j.end()) {
    if (!it->is_boolean()) throw InputError(path + ".renormalize: expected a boolean");
    if (it->get<bool>()) renorm = Renormalize::Yes;
  }
  MechanismDistribution dist = at_path(path + ".atoms", [&] { return finite_mixture(std::move(pairs), renorm); });
  if (auto it = j.find("provenance"); it != j.end() && it->is_string()) {
    const std::string tag = it->get<std::string>();
    Provenance p;
    auto unwrap = [&](const std::string& prefix, ProvenanceKind kind) {
      if (tag.rfind(prefix, 0) == 0 && tag.back() == ')') {
        p = Provenance{kind, tag.substr(prefix.size(), tag.size() - prefix.size() - 1)};
        return true;
      }
      return false;
    };
    if (!unwrap("quadrature-of(", ProvenanceKind::Quadrature)) unwrap("clustering(", ProvenanceKind::Clustering);
    dist = MechanismDistribution(dist.mechanisms(), dist.weights(), p);
  }
  return dist;
}

json encode_law(const PositiveLaw& law) {
  return std::visit(overloaded{
                        [](const GammaLaw& g) { return json{{"kind", "gamma"}, {"shape", g.shape}, {"scale", g.scale}}; },
                        [](const LognormalLaw& l) {
                          return json{{"kind", "lognormal"}, {"mu_log", l.mu_log}, {"sigma_log", l.sigma_log}};
                        },
                    },
                    law);
}

PositiveLaw decode_law(const json& j, const std::string& path) {
  const json& kind_field = require_field(j, "kind", path);
  if (!kind_field.is_string()) throw InputError(path + ".kind: expected a string");
  const std::string kind = kind_field.get<std::string>();
  auto num = [&](const char* key) { return decode_number(require_field(j, key, path), path + "." + key); };
  PositiveLaw law;
  if (kind == "gamma") {
    law = GammaLaw{num("shape"), num("scale")};
  } else if (kind == "lognormal") {
    law = LognormalLaw{num("mu_log"), num("sigma_log")};
  } else {
    throw InputError(path + ".kind: unknown law '" + kind + "'");
  }
  at_path(path, [&] { validate_law(law); });
  return law;
}

}  // namespace hazardlab
