#include "gpf/trial_sim.hpp"

#include <algorithm>
#include <functional>
#include <thread>

namespace gpf {

namespace {

// Per-chunk tallies of (outcome, output) pairs.
struct Tally {
  std::vector<std::uint64_t> joint;
};

using TrialFn = std::function<TrialRecord(std::uint64_t)>;

std::vector<std::uint64_t> run_trials(std::uint64_t trials, unsigned threads, Index n_outcome, Index n_output,
                                      const TrialFn& trial, std::vector<TrialRecord>* records) {
  threads = std::max(1u, threads);
  const auto cells = static_cast<std::size_t>(n_outcome * n_output);
  std::vector<Tally> tallies(threads, Tally{std::vector<std::uint64_t>(cells, 0)});
  if (records) records->resize(static_cast<std::size_t>(trials));

  auto work = [&](unsigned t, std::uint64_t begin, std::uint64_t end) {
    auto& joint = tallies[t].joint;
    for (std::uint64_t i = begin; i < end; ++i) {
      const TrialRecord r = trial(i);
      ++joint[static_cast<std::size_t>(r.outcome * n_output + r.output)];
      if (records) (*records)[static_cast<std::size_t>(i)] = r;
    }
  };

  const std::uint64_t chunk = (trials + threads - 1) / threads;
  if (threads == 1) {
    work(0, 0, trials);
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) {
      const std::uint64_t begin = std::min(trials, t * chunk);
      const std::uint64_t end = std::min(trials, begin + chunk);
      pool.emplace_back(work, t, begin, end);
    }
    for (auto& th : pool) th.join();
  }

  std::vector<std::uint64_t> joint(cells, 0);
  for (const auto& tally : tallies)
    for (std::size_t c = 0; c < cells; ++c) joint[c] += tally.joint[c];
  return joint;
}

std::vector<Event> conditioning_events(const FiniteSpace& outcome, const SimulationOptions& options) {
  if (!options.events.empty()) {
    for (const auto& e : options.events) require_same_space(outcome, e.space(), "conditioning event on another space");
    return options.events;
  }
  std::vector<Event> events;
  for (Index w = 0; w < outcome.size(); ++w) events.push_back(Event::singleton(outcome, w));
  return events;
}

void fill_outcome_stats(SimulationReport& report, const std::vector<std::uint64_t>& joint, Index n_output) {
  const Index n_outcome = report.outcome.size();
  report.outcome_counts.assign(static_cast<std::size_t>(n_outcome), 0);
  for (Index w = 0; w < n_outcome; ++w)
    for (Index o = 0; o < n_output; ++o)
      report.outcome_counts[static_cast<std::size_t>(w)] += joint[static_cast<std::size_t>(w * n_output + o)];
  report.frequencies.resize(n_outcome);
  for (Index w = 0; w < n_outcome; ++w)
    report.frequencies(w) =
        static_cast<double>(report.outcome_counts[static_cast<std::size_t>(w)]) / static_cast<double>(report.trials);
  report.law_distance = 0.5 * (report.frequencies - report.exact_law).cwiseAbs().sum();
}

// Output-atom counts restricted to outcomes in `event`.
std::pair<std::uint64_t, Vector<double>> conditional_counts(const Event& event, const std::vector<std::uint64_t>& joint,
                                                            Index n_output) {
  Vector<double> counts = Vector<double>::Zero(n_output);
  std::uint64_t total = 0;
  for (Index w : event.members())
    for (Index o = 0; o < n_output; ++o) {
      const auto c = joint[static_cast<std::size_t>(w * n_output + o)];
      counts(o) += static_cast<double>(c);
      total += c;
    }
  return {total, counts};
}

}  // namespace

std::vector<double> cumulative(const Vector<double>& weights) {
  std::vector<double> cdf(static_cast<std::size_t>(weights.size()));
  double running = 0.0;
  for (Index i = 0; i < weights.size(); ++i) {
    running += weights(i);
    cdf[static_cast<std::size_t>(i)] = running;
  }
  return cdf;
}

Index sample_index(const std::vector<double>& cdf, double u) {
  auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
  if (it != cdf.end()) return static_cast<Index>(it - cdf.begin());
  // u beyond the rounded total: fall back to the last atom with positive weight.
  for (std::size_t i = cdf.size(); i-- > 0;) {
    const double prev = i == 0 ? 0.0 : cdf[i - 1];
    if (cdf[i] > prev) return static_cast<Index>(i);
  }
  throw Error(ErrorCode::ZeroMeasure, "cannot sample from a zero measure");
}

double trace_distance(const ComplexMatrix<double>& a, const ComplexMatrix<double>& b) {
  const ComplexMatrix<double> d = a - b;
  Eigen::SelfAdjointEigenSolver<ComplexMatrix<double>> solver((d + d.adjoint()) / 2.0, Eigen::EigenvaluesOnly);
  return 0.5 * solver.eigenvalues().cwiseAbs().sum();
}

SimulationReport run_classical(const ExtendedKernel& ext, const InformationState& state, std::uint64_t trials,
                               std::uint64_t seed, const SimulationOptions& options) {
  require_same_space(ext.input(), state.space(), "run_classical: state is not on the input space");
  if (trials < 1) throw Error(ErrorCode::InvalidArgument, "trials must be positive");

  const Index n_output = ext.output().size();
  const std::vector<double> input_cdf = cumulative(state.weights());
  std::vector<std::vector<double>> row_cdf;
  for (Index t = 0; t < ext.input().size(); ++t) row_cdf.push_back(cumulative(ext.matrix().row(t).transpose()));

  auto trial = [&](std::uint64_t i) {
    CounterRng rng(seed, i);
    TrialRecord r;
    r.index = i;
    const Index t = sample_index(input_cdf, rng.uniform());
    const Index cell = sample_index(row_cdf[static_cast<std::size_t>(t)], rng.uniform());
    r.input = t;
    r.outcome = cell / n_output;
    r.output = cell % n_output;
    return r;
  };

  SimulationReport report;
  report.kind = SimulationReport::Kind::Classical;
  report.trials = trials;
  report.seed = seed;
  report.input = ext.input();
  report.outcome = ext.outcome();
  report.output = ext.output();
  report.exact_law = outcome_law(outcome_marginal(ext), state).probabilities();

  const auto joint = run_trials(trials, options.threads, ext.outcome().size(), n_output, trial,
                                options.keep_records ? &report.records : nullptr);
  fill_outcome_stats(report, joint, n_output);

  const double tol = default_tolerances().weight;
  for (const Event& event : conditioning_events(ext.outcome(), options)) {
    ConditionalSummary s{event, 0, {}, {}, {}, {}, {}};
    auto [count, counts] = conditional_counts(event, joint, n_output);
    s.count = count;
    if (count > 0) s.empirical = counts / static_cast<double>(count);
    const auto value = instrument_value(ext, state, event);
    if (value.total() > tol) s.exact = value.normalized().weights();
    if (count > 0 && s.exact) s.distance = 0.5 * (s.empirical - *s.exact).cwiseAbs().sum();
    report.conditionals.push_back(std::move(s));
  }
  return report;
}

SimulationReport run_quantum(const QuantumExtendedObservable& qeo, const DensityMatrix& rho, std::uint64_t trials,
                             std::uint64_t seed, const SimulationOptions& options) {
  if (rho.dimension() != qeo.input_dimension()) throw Error(ErrorCode::DimensionMismatch, "run_quantum: dimensions");
  if (trials < 1) throw Error(ErrorCode::InvalidArgument, "trials must be positive");

  const Index n_outcome = qeo.outcome().size();
  const Index n_output = qeo.prepared_count();
  Vector<double> cell_weights(n_outcome * n_output);
  for (Index k = 0; k < n_outcome; ++k)
    for (Index j = 0; j < n_output; ++j)
      cell_weights(k * n_output + j) = std::max(trace_product(rho.matrix(), qeo.op(k, j)).real(), 0.0);
  cell_weights /= cell_weights.sum();
  const std::vector<double> cdf = cumulative(cell_weights);

  auto trial = [&](std::uint64_t i) {
    CounterRng rng(seed, i);
    TrialRecord r;
    r.index = i;
    const Index cell = sample_index(cdf, rng.uniform());
    r.outcome = cell / n_output;
    r.output = cell % n_output;
    return r;
  };

  SimulationReport report;
  report.kind = SimulationReport::Kind::Quantum;
  report.trials = trials;
  report.seed = seed;
  report.outcome = qeo.outcome();
  report.output = prepared_space(qeo);
  report.exact_law = born_law(rho, q_outcome_marginal(qeo)).probabilities();

  const auto joint = run_trials(trials, options.threads, n_outcome, n_output, trial,
                                options.keep_records ? &report.records : nullptr);
  fill_outcome_stats(report, joint, n_output);

  const Index d_out = qeo.output_dimension();
  for (const Event& event : conditioning_events(qeo.outcome(), options)) {
    ConditionalSummary s{event, 0, {}, {}, {}, {}, {}};
    auto [count, counts] = conditional_counts(event, joint, n_output);
    s.count = count;
    if (count > 0) {
      s.empirical = counts / static_cast<double>(count);
      ComplexMatrix<double> m = ComplexMatrix<double>::Zero(d_out, d_out);
      for (Index j = 0; j < n_output; ++j) m += s.empirical(j) * qeo.prepared()[static_cast<std::size_t>(j)].projector();
      s.empirical_density = std::move(m);
    }
    try {
      auto exact = q_posterior(qeo, rho, event);
      s.exact = exact.weights;
      s.exact_density = exact.density.matrix();
    } catch (const Error& e) {
      if (e.code() != ErrorCode::ZeroProbabilityEvent) throw;
    }
    if (s.empirical_density && s.exact_density) s.distance = trace_distance(*s.empirical_density, *s.exact_density);
    report.conditionals.push_back(std::move(s));
  }
  return report;
}

}  // namespace gpf
