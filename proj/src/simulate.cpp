#include "hazardlab/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <thread>

namespace hazardlab {

namespace {

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

EventRecord draw_subject(const Cohort& cohort, const vector_t& cumulative, const Censoring& censoring,
                         std::uint64_t seed, std::uint64_t cohort_index, std::uint64_t local_index,
                         std::uint64_t subject_id) {
  SplitMix64 rng = substream(seed, local_index, cohort_index);
  const double u = uniform01(rng);
  const auto* begin = cumulative.data();
  const auto* end = begin + cumulative.size();
  auto k = static_cast<Eigen::Index>(std::upper_bound(begin, end, u) - begin);
  k = std::min<Eigen::Index>(k, cumulative.size() - 1);
  const Mechanism& m = cohort.distribution.mechanism(k);

  double time = sample_event_time(m, rng);
  bool event = true;
  if (const auto* c = std::get_if<ExponentialCensoring>(&censoring)) {
    const double censor_time = unit_exponential(rng) / c->rate;
    if (censor_time < time) {
      time = censor_time;
      event = false;
    }
  }
  return EventRecord{subject_id, cohort.covariate, time, event, m.label};
}

}  // namespace

SplitMix64 substream(std::uint64_t seed, std::uint64_t index, std::uint64_t stream) {
  const std::uint64_t key = mix64(mix64(seed ^ 0x6a09e667f3bcc909ULL) ^ (stream * 0x9e3779b97f4a7c15ULL + 0x3c6ef372fe94f82bULL));
  return SplitMix64(mix64(key ^ mix64(index + 0xbb67ae8584caa73bULL)));
}

double uniform01(SplitMix64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

double unit_exponential(SplitMix64& rng) {
  // midpoint of the 53-bit cell keeps the draw strictly inside (0, 1), so E > 0
  const double u = (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
  return -std::log(u);
}

double sample_law(const PositiveLaw& law, SplitMix64& rng) {
  if (const auto* g = std::get_if<GammaLaw>(&law)) {
    return std::gamma_distribution<double>(g->shape, g->scale)(rng);
  }
  const auto& l = std::get<LognormalLaw>(law);
  return std::lognormal_distribution<double>(l.mu_log, l.sigma_log)(rng);
}

double sample_event_time(const Mechanism& m, SplitMix64& rng) {
  if (std::isfinite(cumulative_hazard_supremum(m.shape))) {
    throw InputError("defective mechanism not supported: '" + m.label + "' has bounded cumulative hazard");
  }
  return inverse_cumulative_hazard(m.shape, unit_exponential(rng));
}

void Scenario::validate() const {
  if (cohorts.empty()) throw InputError("scenario needs at least one cohort");
  for (const auto& c : cohorts) {
    if (c.count < 1) throw InputError("cohort subject count must be at least 1");
  }
  if (const auto* c = std::get_if<ExponentialCensoring>(&censoring)) {
    if (!(c->rate > 0.0) || !std::isfinite(c->rate)) throw InputError("censoring rate must be positive");
  }
}

std::size_t Scenario::total_subjects() const {
  std::size_t n = 0;
  for (const auto& c : cohorts) n += c.count;
  return n;
}

std::vector<EventRecord> generate_dataset(const Scenario& s, unsigned threads) {
  s.validate();
  for (const auto& c : s.cohorts) {
    for (const auto& m : c.distribution.mechanisms()) {
      if (std::isfinite(cumulative_hazard_supremum(m.shape))) {
        throw InputError("defective mechanism not supported: '" + m.label + "' has bounded cumulative hazard");
      }
    }
  }

  struct Slot {
    std::size_t cohort;
    std::size_t local;
  };
  std::vector<Slot> slots;
  slots.reserve(s.total_subjects());
  std::vector<vector_t> cumulative;
  for (std::size_t c = 0; c < s.cohorts.size(); ++c) {
    const vector_t& w = s.cohorts[c].distribution.weights();
    vector_t cum(w.size());
    double acc = 0.0;
    for (Eigen::Index k = 0; k < w.size(); ++k) cum(k) = (acc += w(k));
    cumulative.push_back(std::move(cum));
    for (std::size_t i = 0; i < s.cohorts[c].count; ++i) slots.push_back({c, i});
  }

  std::vector<EventRecord> records(slots.size());
  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t id = begin; id < end; ++id) {
      const auto [c, local] = slots[id];
      records[id] = draw_subject(s.cohorts[c], cumulative[c], s.censoring, s.seed, c, local, id);
    }
  };

  threads = std::max(1u, threads);
  if (threads == 1 || slots.size() < 4096) {
    work(0, slots.size());
  } else {
    std::vector<std::jthread> pool;
    const std::size_t chunk = (slots.size() + threads - 1) / threads;
    for (unsigned t = 0; t < threads; ++t) {
      const std::size_t begin = t * chunk;
      const std::size_t end = std::min(slots.size(), begin + chunk);
      if (begin < end) pool.emplace_back(work, begin, end);
    }
  }
  return records;
}

std::string covariate_json(const CovariateValue& x) {
  std::string out = "[";
  for (Eigen::Index i = 0; i < x.dim(); ++i) {
    if (i > 0) out += ',';
    out += format_double(x.values()(i));
  }
  return out + "]";
}

void write_dataset_csv(std::ostream& out, std::span<const EventRecord> records) {
  out << "subject_id,covariate_json,time,event,mechanism_label\n";
  for (const auto& r : records) {
    out << r.subject_id << ',' << csv_field(covariate_json(r.covariate)) << ',' << format_double(r.time) << ','
        << (r.event ? 1 : 0) << ',' << csv_field(r.mechanism_label) << '\n';
  }
}

double KaplanMeier::operator()(double t) const {
  const auto it = std::upper_bound(times_.begin(), times_.end(), t);
  if (it == times_.begin()) return 1.0;
  return values_[static_cast<std::size_t>(it - times_.begin()) - 1];
}

Curve KaplanMeier::sample(const TimeGrid& grid) const {
  vector_t values(grid.size());
  for (Eigen::Index i = 0; i < grid.size(); ++i) values(i) = (*this)(grid[i]);
  return Curve(grid, std::move(values), CurveKind::Survival);
}

KaplanMeier kaplan_meier(std::span<const EventRecord> records) {
  if (records.empty()) throw InputError("Kaplan-Meier needs at least one record");
  std::vector<std::pair<double, bool>> obs;
  obs.reserve(records.size());
  for (const auto& r : records) obs.emplace_back(r.time, r.event);
  std::sort(obs.begin(), obs.end(), [](const auto& a, const auto& b) {
    return a.first < b.first || (a.first == b.first && a.second && !b.second);
  });

  KaplanMeier km;
  km.last_time_ = obs.back().first;
  double survival = 1.0;
  std::size_t at_risk = obs.size();
  std::size_t i = 0;
  while (i < obs.size()) {
    const double t = obs[i].first;
    std::size_t events = 0;
    std::size_t leaving = 0;
    while (i < obs.size() && obs[i].first == t) {
      if (obs[i].second) ++events;
      ++leaving;
      ++i;
    }
    if (events > 0) {
      survival *= 1.0 - static_cast<double>(events) / static_cast<double>(at_risk);
      km.times_.push_back(t);
      km.values_.push_back(survival);
    }
    at_risk -= leaving;
  }
  return km;
}

double dkw_bound(std::size_t n, double alpha) {
  if (n == 0) throw InputError("DKW bound needs n >= 1");
  if (!(alpha > 0.0 && alpha < 1.0)) throw InputError("DKW level must lie in (0, 1)");
  return std::sqrt(std::log(2.0 / alpha) / (2.0 * static_cast<double>(n)));
}

double ks_distance(std::vector<double> samples, const std::function<double(double)>& cdf) {
  if (samples.empty()) throw InputError("KS distance needs samples");
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = cdf(samples[i]);
    worst = std::max({worst, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return worst;
}

Curve pooled_aggregate_survival(const Scenario& s, const TimeGrid& grid) {
  s.validate();
  const double total = static_cast<double>(s.total_subjects());
  vector_t values = vector_t::Zero(grid.size());
  for (const auto& c : s.cohorts) {
    values += (static_cast<double>(c.count) / total) * aggregate_survival(c.distribution, grid).values;
  }
  return Curve(grid, std::move(values), CurveKind::Survival);
}

RepresentationReport compare_to_analytic(std::span<const EventRecord> records, const Curve& analytic,
                                         bool strict, double alpha) {
  const KaplanMeier km = kaplan_meier(records);
  const Curve empirical = km.sample(analytic.grid);
  const vector_t gap = (empirical.values - analytic.values).cwiseAbs();
  Eigen::Index at = 0;
  const double worst = gap.maxCoeff(&at);
  const double bound = dkw_bound(records.size(), alpha);
  return RepresentationReport{worst, analytic.grid[at], bound, records.size(), strict, worst <= bound};
}

RepresentationReport verify_representation(const Scenario& s, const TimeGrid& grid, double alpha,
                                           unsigned threads) {
  const auto records = generate_dataset(s, threads);
  return compare_to_analytic(records, pooled_aggregate_survival(s, grid), !s.censored(), alpha);
}

}  // namespace hazardlab
