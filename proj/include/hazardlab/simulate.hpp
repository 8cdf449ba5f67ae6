#pragma once

#include "hazardlab/aggregation.hpp"

#include <cstdint>
#include <functional>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace hazardlab {

/**
 * SplitMix64 generator. Satisfies UniformRandomBitGenerator, so it plugs into
 * the <random> distributions.
 */
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit SplitMix64(std::uint64_t state) : state_(state) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

/// Independent stream keyed by (seed, stream, index); editing one cohort never reshuffles another.
SplitMix64 substream(std::uint64_t seed, std::uint64_t index, std::uint64_t stream = 0);

/// Uniform on [0, 1) with 53 random bits.
double uniform01(SplitMix64& rng);
/// -log(U) with U strictly inside (0, 1); finite and positive for every draw.
double unit_exponential(SplitMix64& rng);
double sample_law(const PositiveLaw& law, SplitMix64& rng);

/**
 * Inverse-transform draw T = H^{-1}(E). Takes only the mechanism: covariates
 * cannot influence the event time except through the mechanism they selected.
 */
double sample_event_time(const Mechanism& m, SplitMix64& rng);

struct EventRecord {
  std::uint64_t subject_id;
  CovariateValue covariate;
  double time;
  bool event;
  std::string mechanism_label;
};

struct NoCensoring {};
struct ExponentialCensoring {
  double rate;
};
using Censoring = std::variant<NoCensoring, ExponentialCensoring>;

struct Cohort {
  CovariateValue covariate;
  MechanismDistribution distribution;
  std::size_t count;
};

struct Scenario {
  std::vector<Cohort> cohorts;
  Censoring censoring = NoCensoring{};
  std::uint64_t seed = 0;

  void validate() const;
  std::size_t total_subjects() const;
  bool censored() const { return std::holds_alternative<ExponentialCensoring>(censoring); }
};

/**
 * Two-stage sampling per subject: mechanism from the cohort's distribution,
 * then the event time from that mechanism alone. Subject ids run over the
 * cohorts in order; output is independent of `threads`.
 */
std::vector<EventRecord> generate_dataset(const Scenario& s, unsigned threads = 1);

/// Header `subject_id,covariate_json,time,event,mechanism_label`.
void write_dataset_csv(std::ostream& out, std::span<const EventRecord> records);
std::string covariate_json(const CovariateValue& x);

/// Right-continuous product-limit step function.
class KaplanMeier {
 public:
  /// Distinct event times, increasing.
  const std::vector<double>& times() const { return times_; }
  /// Survival just after each event time.
  const std::vector<double>& values() const { return values_; }
  double last_observed_time() const { return last_time_; }

  double operator()(double t) const;
  Curve sample(const TimeGrid& grid) const;

 private:
  friend KaplanMeier kaplan_meier(std::span<const EventRecord> records);
  std::vector<double> times_;
  std::vector<double> values_;
  double last_time_ = 0.0;
};

/// Events are processed before censorings that share a time.
KaplanMeier kaplan_meier(std::span<const EventRecord> records);

/// sqrt(log(2 / alpha) / (2 n)).
double dkw_bound(std::size_t n, double alpha);

/// Exact sup |F_n - F| for the empirical CDF of `samples` against a continuous CDF.
double ks_distance(std::vector<double> samples, const std::function<double(double)>& cdf);

struct RepresentationReport {
  double max_abs_gap;
  double argmax_t;
  double dkw_bound;
  std::size_t subjects;
  /// False when censoring is present; the DKW comparison is then only indicative.
  bool strict;
  bool pass;
};

/// Count-weighted analytic survival of the pooled cohorts.
Curve pooled_aggregate_survival(const Scenario& s, const TimeGrid& grid);

/// KM of the records against the analytic curve on the grid, DKW at level alpha.
RepresentationReport compare_to_analytic(std::span<const EventRecord> records, const Curve& analytic,
                                         bool strict, double alpha = 1e-3);

/// Simulates the scenario and compares its KM curve with the analytic aggregate.
RepresentationReport verify_representation(const Scenario& s, const TimeGrid& grid, double alpha = 1e-3,
                                           unsigned threads = 1);

}  // namespace hazardlab
