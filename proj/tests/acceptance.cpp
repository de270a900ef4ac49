// One PASS/FAIL line per acceptance criterion; exit status is non-zero if
// any criterion fails.

#include <chrono>
#include <cstdio>
#include <sys/wait.h>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>

#include "gpf/cli.hpp"
#include "gpf/model_io.hpp"
#include "gpf/trial_sim.hpp"
#include "support.hpp"

using namespace gpf;
using namespace gpf::testing;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok && pass) detail = what;
    pass = pass && ok;
  }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double x) {
  char buf[96];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

// Runs the built binary through the shell; returns stdout and sets the exit status.
std::string run_binary(const std::string& args, int& status) {
  std::string out;
  FILE* pipe = popen((std::string("\"") + GPF_CLI + "\" " + args + " 2>/dev/null").c_str(), "r");
  if (!pipe) {
    status = -1;
    return out;
  }
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) out.append(buf, n);
  const int raw = pclose(pipe);
  status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return out;
}

double max_abs(const Vector<double>& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

// 1. Outcome laws are affine in the state.
Outcome affinity() {
  Outcome o;
  Rng rng(1001);
  const auto t0 = Clock::now();
  double worst = 0;
  for (int i = 0; i < 500; ++i) {
    const auto in = labelled_space("t", uniform_int(rng, 1, 8));
    const auto out = labelled_space("l", uniform_int(rng, 1, 8));
    const auto k = random_kernel(rng, in, out);
    const auto p1 = random_state(rng, in), p2 = random_state(rng, in);
    const double a = uniform01(rng);
    const auto mixed = outcome_law(k, mix(p1, p2, a));
    const auto l1 = outcome_law(k, p1), l2 = outcome_law(k, p2);
    for (const auto& b : all_events(out))
      worst = std::max(worst, std::abs(mixed.probability(b) - a * l1.probability(b) - (1 - a) * l2.probability(b)));
  }
  const double t = seconds_since(t0);
  o.require(worst <= 1e-12, "max deviation " + fmt("%.3g", worst));
  o.require(t < 1.0, "runtime " + fmt("%.3f s", t));
  o.detail = o.pass ? "max deviation " + fmt("%.3g", worst) + ", " + fmt("%.3f s", t) : o.detail;
  return o;
}

// 2. Kernels are recovered from their laws at point masses.
Outcome affine_round_trip() {
  Outcome o;
  Rng rng(1002);
  const auto t0 = Clock::now();
  double worst_entry = 0, worst_law = 0;
  for (int i = 0; i < 200; ++i) {
    const auto in = labelled_space("t", uniform_int(rng, 1, 8));
    const auto out = labelled_space("l", uniform_int(rng, 1, 8));
    const auto k = random_kernel(rng, in, out);
    std::vector<OutcomeLaw> laws;
    for (Index t = 0; t < in.size(); ++t) laws.push_back(outcome_law(k, dirac(in, t)));
    const auto rebuilt = from_affine_family(in, laws);
    worst_entry = std::max(worst_entry, (rebuilt.matrix() - k.matrix()).cwiseAbs().maxCoeff());
    for (int s = 0; s < 50; ++s) {
      const auto pi = random_state(rng, in);
      Vector<double> expect = Vector<double>::Zero(out.size());
      for (Index t = 0; t < in.size(); ++t) expect += pi.weight(t) * k.matrix().row(t).transpose();
      worst_law = std::max(worst_law, max_abs(outcome_law(rebuilt, pi).probabilities() - expect));
    }
  }
  const double t = seconds_since(t0);
  o.require(worst_entry <= 1e-14, "entry deviation " + fmt("%.3g", worst_entry));
  o.require(worst_law <= 1e-12, "law deviation " + fmt("%.3g", worst_law));
  o.require(t < 1.0, "runtime " + fmt("%.3f s", t));
  if (o.pass) o.detail = "entry " + fmt("%.3g", worst_entry) + ", law " + fmt("%.3g", worst_law) + ", " + fmt("%.3f s", t);
  return o;
}

// 3. Laws of a convolution equal laws of the induced state.
Outcome convolution() {
  Outcome o;
  Rng rng(1003);
  double worst = 0;
  for (int i = 0; i < 200; ++i) {
    const auto a = labelled_space("a", uniform_int(rng, 1, 8));
    const auto b = labelled_space("b", uniform_int(rng, 1, 8));
    const auto l = labelled_space("l", uniform_int(rng, 1, 8));
    const auto pi = random_kernel(rng, b, l);
    const auto s = random_kernel(rng, a, b);
    const auto state = random_state(rng, a);
    worst = std::max(worst, max_abs(outcome_law(pi, apply_kernel(state, s)).probabilities() -
                                    outcome_law(convolve(pi, s), state).probabilities()));
  }
  o.require(worst <= 1e-12, "max deviation " + fmt("%.3g", worst));
  if (o.pass) o.detail = "max deviation " + fmt("%.3g", worst);
  return o;
}

// 4. Posteriors of map-built extended kernels equal enumerated conditionals.
Outcome bayes() {
  Outcome o;
  Rng rng(1004);
  double worst = 0;
  int checked = 0;
  for (int i = 0; i < 100; ++i) {
    const auto theta = labelled_space("t", uniform_int(rng, 1, 16));
    const auto omega = labelled_space("w", uniform_int(rng, 1, 4));
    const auto out = labelled_space("o", uniform_int(rng, 1, 6));
    const auto phi = random_map(rng, theta, omega);
    const auto g = random_map(rng, theta, out);
    const auto pi = random_state(rng, theta);
    const auto ext = extended_from_maps(phi, g);
    const auto events = all_events(omega);
    const auto& b = events[static_cast<std::size_t>(uniform_int(rng, 1, static_cast<int>(events.size()) - 1))];
    Vector<double> num = Vector<double>::Zero(out.size());
    double den = 0;
    for (Index t = 0; t < theta.size(); ++t)
      if (b.contains(phi(t))) {
        den += pi.weight(t);
        num(g(t)) += pi.weight(t);
      }
    if (den <= 1e-12) {
      bool threw = false;
      try {
        posterior(ext, pi, b);
      } catch (const Error& e) {
        threw = e.code() == ErrorCode::ZeroProbabilityEvent;
      }
      o.require(threw, "null event accepted");
      continue;
    }
    ++checked;
    worst = std::max(worst, max_abs(posterior(ext, pi, b).weights() - num / den));
  }
  o.require(worst <= 1e-12, "max deviation " + fmt("%.3g", worst));
  if (o.pass) o.detail = std::to_string(checked) + " positive events, max deviation " + fmt("%.3g", worst);
  return o;
}

// 5. Factorized experiments leave the state alone and pass point masses through.
Outcome nonperturbing() {
  Outcome o;
  Rng rng(1005);
  double worst = 0;
  for (int i = 0; i < 100; ++i) {
    const auto in = labelled_space("t", uniform_int(rng, 1, 8));
    const auto w = labelled_space("w", uniform_int(rng, 1, 4));
    const auto m = random_kernel(rng, in, w);
    const auto pi = random_state(rng, in);
    worst = std::max(worst, max_abs(posterior(factorized_extended(m, MeasurableMap::identity(in)), pi,
                                              Event::all(w)).weights() - pi.weights()));
    const auto phi_out = random_map(rng, in, labelled_space("o", uniform_int(rng, 1, 5)));
    const auto f = factorized_extended(m, phi_out);
    const Index t0 = uniform_int(rng, 0, static_cast<int>(in.size()) - 1);
    for (const auto& b : all_events(w)) {
      if (m.value(b)(t0) <= 1e-12) continue;
      o.require(posterior(f, dirac(in, t0), b).weights() == dirac(phi_out.target(), phi_out(t0)).weights(),
                "point mass moved");
    }
  }
  o.require(worst <= 1e-15, "identity-output posterior deviates by " + fmt("%.3g", worst));
  if (o.pass) o.detail = "prior deviation " + fmt("%.3g", worst) + ", point masses exact";
  return o;
}

// 6. State instruments are completely positive; the full one preserves trace.
Outcome complete_positivity() {
  Outcome o;
  Rng rng(1006);
  const auto t0 = Clock::now();
  double lowest = 1e300, worst_tp = 0;
  for (int i = 0; i < 200; ++i) {
    const auto q = random_qeo(rng, uniform_int(rng, 1, 4), uniform_int(rng, 1, 4), uniform_int(rng, 1, 3),
                              uniform_int(rng, 1, 5));
    for (const auto& b : all_events(q.outcome())) {
      const auto cp = is_completely_positive(state_instrument(q, b), 1e-9);
      o.require(cp.completely_positive, "instrument rejected");
      lowest = std::min(lowest, cp.min_eigenvalue);
    }
    const auto full = state_instrument(q, Event::all(q.outcome()));
    o.require(is_trace_preserving(full, 1e-10), "full instrument not trace preserving");
    const Index d = q.input_dimension();
    for (Index r = 0; r < d; ++r)
      for (Index c = 0; c < d; ++c) {
        CMat e = CMat::Zero(d, d);
        e(r, c) = 1.0;
        worst_tp = std::max(worst_tp, std::abs(full(e).trace() - cd(r == c ? 1.0 : 0.0)));
      }
  }
  const auto transpose = is_completely_positive(SuperOperator::transpose(2), 1e-9);
  const double t = seconds_since(t0);
  o.require(lowest >= -1e-9, "min Choi eigenvalue " + fmt("%.3g", lowest));
  o.require(worst_tp <= 1e-10, "trace deviation " + fmt("%.3g", worst_tp));
  o.require(!transpose.completely_positive && transpose.min_eigenvalue <= -0.49,
            "transpose min eigenvalue " + fmt("%.3g", transpose.min_eigenvalue));
  o.require(t < 30.0, "runtime " + fmt("%.3f s", t));
  if (o.pass)
    o.detail = "min Choi eigenvalue " + fmt("%.3g", lowest) + ", trace deviation " + fmt("%.3g", worst_tp) +
               ", transpose " + fmt("%.3g", transpose.min_eigenvalue) + ", " + fmt("%.2f s", t);
  return o;
}

// 7. Only PVM eigenstates admit an indicator-valued response.
Outcome no_go() {
  Outcome o;
  const auto pvm = z_pvm();
  const auto scan = nogo_scan(pvm, 1000, 2024);
  o.require(scan.total == 1000 && scan.deterministic_count == 0,
            "deterministic_count " + std::to_string(scan.deterministic_count));
  const auto r0 = nogo_deterministic_response(PureState::basis(2, 0), pvm);
  const auto r1 = nogo_deterministic_response(PureState::basis(2, 1), pvm);
  o.require(r0.outcome && *r0.outcome == 0, "|0> not assigned outcome 0");
  o.require(r1.outcome && *r1.outcome == 1, "|1> not assigned outcome 1");
  const auto plus = nogo_deterministic_response(PureState(CVec{{cd(1), cd(1)}}), pvm);
  o.require(!plus.outcome, "|+> assigned an outcome");
  o.require(std::abs(plus.traces(0) - 0.5) <= 1e-12 && std::abs(plus.traces(1) - 0.5) <= 1e-12,
            "|+> traces off 0.5");
  const auto injected = nogo_scan(pvm, 1000, 2024, 1e-10, {PureState::basis(2, 0), PureState::basis(2, 1)});
  o.require(injected.deterministic_count == 2, "injected eigenstates not counted");
  if (o.pass) o.detail = "0 of 1000 Haar states deterministic; |0>,|1> assigned; |+> traces 0.5";
  return o;
}

// 8. Simulated frequencies match exact laws; reports are thread-count invariant.
Outcome monte_carlo() {
  Outcome o;
  const std::uint64_t n = 200000;
  const auto space = four_atoms();
  const auto ext = beable_extended(parity_map(), MeasurableMap::identity(space));
  const auto even = Event::from_labels(parity_map().target(), {"even"});
  std::string classical[3], quantum[3];
  const unsigned threads[3] = {1, 2, 8};
  double slowest = 0, law_tv = 0, post_tv = 0, qdev = 0;
  for (int i = 0; i < 3; ++i) {
    SimulationOptions opts;
    opts.threads = threads[i];
    opts.events = {even};
    auto t0 = Clock::now();
    const auto r = run_classical(ext, uniform(space), n, 8128, opts);
    slowest = std::max(slowest, seconds_since(t0));
    classical[i] = canonical_dump(to_json(r));
    law_tv = r.law_distance;
    const Vector<double> target{{0.0, 0.5, 0.0, 0.5}};
    post_tv = 0.5 * (r.conditionals[0].empirical - target).cwiseAbs().sum();

    SimulationOptions qopts;
    qopts.threads = threads[i];
    t0 = Clock::now();
    const auto q = run_quantum(collapse_qeo(), plus_density(), n, 8128, qopts);
    slowest = std::max(slowest, seconds_since(t0));
    quantum[i] = canonical_dump(to_json(q));
    qdev = std::max(std::abs(q.frequencies(0) - 0.5), std::abs(q.frequencies(1) - 0.5));
  }
  o.require(law_tv <= 0.01, "law TV " + fmt("%.3g", law_tv));
  o.require(post_tv <= 0.01, "posterior TV " + fmt("%.3g", post_tv));
  o.require(qdev <= 0.01, "quantum frequency deviation " + fmt("%.3g", qdev));
  o.require(slowest < 10.0, "slowest run " + fmt("%.2f s", slowest));
  o.require(classical[0] == classical[1] && classical[0] == classical[2], "classical report depends on threads");
  o.require(quantum[0] == quantum[1] && quantum[0] == quantum[2], "quantum report depends on threads");
  if (o.pass)
    o.detail = "law TV " + fmt("%.2g", law_tv) + ", posterior TV " + fmt("%.2g", post_tv) + ", quantum dev " +
               fmt("%.2g", qdev) + ", slowest " + fmt("%.2f s", slowest) + ", identical at 1/2/8 threads";
  return o;
}

// 9. The shipped parity example reduces the uniform state.
Outcome reduction_witness() {
  Outcome o;
  const auto model = parse_model_file(std::string(GPF_SOURCE_DIR) + "/models/example.json");
  const auto& ext = model.extended_kernel("parity_reduction").kernel;
  const auto& prior = model.state("uniform4").state;
  const auto post = posterior(ext, prior, Event::from_labels(ext.outcome(), {"even"}));
  const double tv = total_variation(post, prior);
  o.require(tv == 0.5, "TV " + fmt("%.17g", tv));
  o.require(post.weights() == Vector<double>{{0.0, 0.5, 0.0, 0.5}}, "posterior is not (0, 0.5, 0, 0.5)");
  o.require(check_nonperturbing(ext, ext.input(), MeasurableMap::identity(ext.input()),
                                MeasurableMap::identity(ext.input()))
                .nonperturbing,
            "parity experiment is not non-perturbing");
  if (o.pass) o.detail = "posterior (0, 0.5, 0, 0.5), TV 0.5, non-perturbing";
  return o;
}

// 10. CLI: stable output, golden files, all exit codes.
Outcome cli_contract() {
  Outcome o;
  const std::string model = std::string(GPF_SOURCE_DIR) + "/models/example.json";
  const std::string bad = std::string(GPF_SOURCE_DIR) + "/models/bad_row.json";
  struct Case {
    std::vector<std::string> args;
    int code;
    const char* golden;
  };
  const std::vector<Case> cases{
      {{"law", "--model", model, "--kernel", "noisy", "--state", "pi_ab"}, 0, "law_kernel"},
      {{"posterior", "--model", model, "--extended", "parity_reduction", "--state", "uniform4", "--event", "even"},
       0, "posterior_classical"},
      {{"instrument", "--model", model, "--qeo", "collapse", "--rho", "plus", "--event", "0"}, 0,
       "instrument_quantum"},
      {{"check", "cp", "--model", model, "--qeo", "collapse", "--event", "0"}, 0, "check_cp_collapse"},
      {{"check", "cp", "--model", model, "--superop", "transpose"}, 3, "check_cp_transpose"},
      {{"simulate", "--model", model, "--qeo", "collapse", "--rho", "plus", "--trials", "2000", "--seed", "7",
        "--threads", "4"},
       0, "simulate_quantum"},
      {{"nogo", "--model", model, "--pvm", "z", "--samples", "1000", "--seed", "1", "--threads", "2"}, 0, "nogo"},
      {{"law", "--model", bad, "--kernel", "almost", "--state", "s"}, 2, nullptr},
      {{"posterior", "--model", model, "--extended", "parity_reduction", "--state", "at1", "--event", "even"}, 4,
       nullptr},
  };
  std::set<int> codes;
  for (const auto& c : cases) {
    std::ostringstream out1, err1, out2, err2;
    const int rc = run_cli(c.args, out1, err1);
    run_cli(c.args, out2, err2);
    codes.insert(rc);
    o.require(rc == c.code, c.args[0] + " exit " + std::to_string(rc) + ", expected " + std::to_string(c.code));
    o.require(out1.str() == out2.str(), c.args[0] + " output differs between runs");
    if (c.golden) {
      std::ifstream in(std::string(GPF_SOURCE_DIR) + "/tests/golden/" + c.golden + ".json", std::ios::binary);
      std::stringstream expected;
      expected << in.rdbuf();
      o.require(in.good() || in.eof(), std::string("missing golden ") + c.golden);
      o.require(out1.str() == expected.str(), std::string("golden mismatch: ") + c.golden);
    }
  }
  o.require(codes == std::set<int>{0, 2, 3, 4}, "not all exit codes exercised");

  std::set<int> binary_codes;
  for (const auto& c : cases) {
    std::string args;
    for (const auto& a : c.args) args += "'" + a + "' ";
    int s1 = 0, s2 = 0;
    const auto first = run_binary(args, s1);
    const auto second = run_binary(args, s2);
    binary_codes.insert(s1);
    o.require(s1 == c.code && s2 == c.code, c.args[0] + " binary exit " + std::to_string(s1));
    o.require(first == second, c.args[0] + " binary output differs between runs");
  }
  o.require(binary_codes == codes, "binary exit codes differ from in-process ones");
  if (o.pass)
    o.detail = std::to_string(cases.size()) + " invocations in-process and via the binary, exit codes 0/2/3/4, goldens match";
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"affinity of outcome laws", affinity},
      {"kernel reconstruction from point-mass laws", affine_round_trip},
      {"convolution equivalence", convolution},
      {"posterior equals enumerated conditional", bayes},
      {"non-perturbing posteriors", nonperturbing},
      {"complete positivity of state instruments", complete_positivity},
      {"deterministic responses only at eigenstates", no_go},
      {"Monte Carlo consistency and determinism", monte_carlo},
      {"reduction witness on the shipped model", reduction_witness},
      {"CLI contract", cli_contract},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome r;
    try {
      r = criteria[i].second();
    } catch (const std::exception& e) {
      r = {false, std::string("exception: ") + e.what()};
    }
    std::cout << (r.pass ? "PASS" : "FAIL") << " " << (i + 1) << " " << criteria[i].first << ": " << r.detail << "\n";
    failed += r.pass ? 0 : 1;
  }
  return failed == 0 ? 0 : 1;
}
