#pragma once

// Monte Carlo repetition of an experiment. Trial i draws its randomness from
// CounterRng(seed, i) only, so a report is a pure function of
// (model, state, trials, seed) whatever the number of worker threads.

#include <cstdint>
#include <optional>
#include <vector>

#include "gpf/quantum.hpp"

namespace gpf {

struct TrialRecord {
  std::uint64_t index = 0;
  std::optional<Index> input;  // sampled input atom; classical runs only
  Index outcome = 0;
  Index output = 0;  // posterior atom, or prepared-state index for quantum runs
};

struct ConditionalSummary {
  Event event;
  std::uint64_t count = 0;
  // Empirical posterior over the output atoms (classical) or over the
  // prepared states (quantum); empty when no trial landed in the event.
  Vector<double> empirical;
  std::optional<Vector<double>> exact;  // absent for zero-probability events
  std::optional<ComplexMatrix<double>> empirical_density;  // quantum only
  std::optional<ComplexMatrix<double>> exact_density;
  // Total variation (classical) or trace distance (quantum) between the two.
  std::optional<double> distance;
};

struct SimulationReport {
  enum class Kind { Classical, Quantum };
  Kind kind = Kind::Classical;
  std::uint64_t trials = 0;
  std::uint64_t seed = 0;
  std::optional<FiniteSpace> input;  // classical runs only
  FiniteSpace outcome{std::vector<std::string>{"_"}};
  FiniteSpace output{std::vector<std::string>{"_"}};
  std::vector<std::uint64_t> outcome_counts;
  Vector<double> frequencies;
  Vector<double> exact_law;
  double law_distance = 0.0;
  std::vector<ConditionalSummary> conditionals;
  std::vector<TrialRecord> records;
};

struct SimulationOptions {
  unsigned threads = 1;
  std::vector<Event> events;  // conditioning events; all singletons when empty
  bool keep_records = false;
};

SimulationReport run_classical(const ExtendedKernel& ext, const InformationState& state, std::uint64_t trials,
                               std::uint64_t seed, const SimulationOptions& options = {});

SimulationReport run_quantum(const QuantumExtendedObservable& qeo, const DensityMatrix& rho, std::uint64_t trials,
                             std::uint64_t seed, const SimulationOptions& options = {});

// Inverse-CDF lookup: the first index whose cumulative weight exceeds u.
// Zero-weight atoms are never returned.
Index sample_index(const std::vector<double>& cdf, double u);

std::vector<double> cumulative(const Vector<double>& weights);

// 0.5 * ||a - b||_1 for Hermitian a, b.
double trace_distance(const ComplexMatrix<double>& a, const ComplexMatrix<double>& b);

}  // namespace gpf
