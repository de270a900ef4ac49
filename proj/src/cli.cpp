#include "gpf/cli.hpp"

#include <sstream>

#include "CLI11.hpp"

#include "gpf/model_io.hpp"

namespace gpf {

using nlohmann::json;

namespace {

struct CheckFailed {
  json result;
};

std::vector<std::string> split_labels(const std::string& text) {
  std::vector<std::string> out;
  if (text.empty()) return out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, ',')) out.push_back(item);
  if (text.back() == ',') out.emplace_back();
  return out;
}

Event parse_event(const FiniteSpace& space, const std::optional<std::string>& text) {
  if (!text) return Event::all(space);
  return Event::from_labels(space, split_labels(*text));
}

json tolerances_json() {
  const auto t = default_tolerances();
  return {{"weight", t.weight}, {"matrix", t.matrix}, {"certificate", t.certificate}};
}

struct Args {
  std::string model_path;
  std::optional<double> tol;
  unsigned threads = 1;

  std::optional<std::string> kernel, state, rho, povm, extended, qeo, event, superop;
  std::optional<std::string> phi_in, phi_out, preimage_space;
  std::uint64_t trials = 1000;
  std::uint64_t samples = 1000;
  std::uint64_t seed = 0;
  bool records = false;
};

[[noreturn]] void usage(const std::string& message) { throw CLI::ValidationError(message); }

void require(const std::optional<std::string>& opt, const char* flag) {
  if (!opt) usage(std::string("missing ") + flag);
}

json run_law(const ModelFile& m, const Args& a) {
  if (a.kernel) {
    require(a.state, "--state");
    const auto& k = m.kernel(*a.kernel);
    const auto law = outcome_law(k.kernel, m.state(*a.state).state);
    return {{"kernel", *a.kernel}, {"state", *a.state}, {"law", weights_to_json(law.outcome(), law.probabilities())}};
  }
  require(a.rho, "--rho or --kernel");
  require(a.povm, "--povm");
  const auto law = born_law(m.density(*a.rho), m.povm(*a.povm).povm);
  return {{"rho", *a.rho}, {"povm", *a.povm}, {"law", weights_to_json(law.outcome(), law.probabilities())}};
}

json run_posterior(const ModelFile& m, const Args& a) {
  if (a.extended) {
    require(a.state, "--state");
    const auto& ext = m.extended_kernel(*a.extended).kernel;
    const auto& state = m.state(*a.state).state;
    const Event event = parse_event(ext.outcome(), a.event);
    const auto value = instrument_value(ext, state, event);
    const auto post = posterior(ext, state, event);
    return {{"extended", *a.extended},
            {"state", *a.state},
            {"event", event.labels()},
            {"probability", value.total()},
            {"posterior", weights_to_json(post.space(), post.weights())}};
  }
  require(a.qeo, "--qeo or --extended");
  require(a.rho, "--rho");
  const auto& qeo = m.qeo(*a.qeo).qeo;
  std::vector<std::string> labels = a.event ? split_labels(*a.event) : qeo.outcome().atoms();
  std::vector<Index> members;
  for (const auto& l : labels) {
    auto i = qeo.outcome().find(l);
    if (!i) throw Error(ErrorCode::UnknownOutcome, "no outcome '" + l + "'");
    members.push_back(*i);
  }
  const Event event(qeo.outcome(), members);
  const auto post = q_posterior(qeo, m.density(*a.rho), event);
  return {{"qeo", *a.qeo},
          {"rho", *a.rho},
          {"event", event.labels()},
          {"probability", post.probability},
          {"density", matrix_to_json(post.density.matrix())},
          {"weights", weights_to_json(prepared_space(qeo), post.weights)}};
}

json run_instrument(const ModelFile& m, const Args& a) {
  if (a.extended) {
    require(a.state, "--state");
    const auto& ext = m.extended_kernel(*a.extended).kernel;
    const Event event = parse_event(ext.outcome(), a.event);
    const auto value = instrument_value(ext, m.state(*a.state).state, event);
    return {{"extended", *a.extended},
            {"state", *a.state},
            {"event", event.labels()},
            {"total", value.total()},
            {"weights", weights_to_json(value.space(), value.weights())}};
  }
  require(a.qeo, "--qeo or --extended");
  const auto& qeo = m.qeo(*a.qeo).qeo;
  const auto labels = a.event ? split_labels(*a.event) : qeo.outcome().atoms();
  const auto op = state_instrument(qeo, labels);
  json out = {{"qeo", *a.qeo}, {"event", Event::from_labels(qeo.outcome(), labels).labels()}};
  if (a.rho) {
    const auto value = op(m.density(*a.rho).matrix());
    out["rho"] = *a.rho;
    out["value"] = matrix_to_json(value);
    out["trace"] = value.trace().real();
  } else {
    out["action"] = matrix_to_json(op.action());
  }
  return out;
}

SuperOperator superop_from(const ModelFile& m, const Args& a, bool default_to_all) {
  if (a.superop) return m.superoperator(*a.superop);
  require(a.qeo, "--qeo or --superop");
  const auto& qeo = m.qeo(*a.qeo).qeo;
  if (!a.event && !default_to_all) usage("missing --event");
  return state_instrument(qeo, a.event ? split_labels(*a.event) : qeo.outcome().atoms());
}

json run_check(const std::string& which, const ModelFile& m, const Args& a) {
  json out = {{"check", which}};
  bool pass = false;
  if (which == "trivial") {
    require(a.kernel, "--kernel");
    const auto& k = m.kernel(*a.kernel).kernel;
    const auto r = is_trivial(k, default_tolerances().weight);
    pass = r.trivial;
    out["kernel"] = *a.kernel;
    out["witness"] = r.witness ? weights_to_json(k.outcome(), *r.witness) : json(nullptr);
  } else if (which == "observable") {
    require(a.kernel, "--kernel");
    pass = is_observable(m.kernel(*a.kernel).kernel, default_tolerances().weight);
    out["kernel"] = *a.kernel;
  } else if (which == "nonperturbing") {
    require(a.extended, "--extended");
    require(a.phi_out, "--phi-out");
    const auto& ext = m.extended_kernel(*a.extended).kernel;
    const FiniteSpace chart = a.preimage_space ? m.space(*a.preimage_space) : ext.input();
    const MeasurableMap phi_in = a.phi_in ? m.map(*a.phi_in).map : MeasurableMap::identity(ext.input());
    const auto r = check_nonperturbing(ext, chart, phi_in, m.map(*a.phi_out).map, default_tolerances().weight);
    pass = r.nonperturbing;
    out["extended"] = *a.extended;
    if (r.factor) {
      json rows = json::object();
      for (Index t = 0; t < r.factor->input().size(); ++t)
        rows[r.factor->input().label(t)] = weights_to_json(r.factor->outcome(), r.factor->matrix().row(t).transpose());
      out["factor"] = std::move(rows);
    } else {
      out["factor"] = nullptr;
    }
  } else if (which == "cp") {
    const auto op = superop_from(m, a, false);
    const auto r = is_completely_positive(op, default_tolerances().certificate);
    pass = r.completely_positive;
    out["min_eigenvalue"] = r.min_eigenvalue;
    out["hermitian"] = r.hermitian;
  } else if (which == "tp") {
    const auto op = superop_from(m, a, true);
    pass = is_trace_preserving(op, default_tolerances().matrix);
  } else {
    usage("unknown check '" + which + "'");
  }
  if (a.qeo && (which == "cp" || which == "tp")) out["qeo"] = *a.qeo;
  if (a.superop) out["superop"] = *a.superop;
  if (a.event && (which == "cp" || which == "tp")) out["event"] = split_labels(*a.event);
  out["pass"] = pass;
  if (!pass) throw CheckFailed{std::move(out)};
  return out;
}

json run_simulate(const ModelFile& m, const Args& a) {
  SimulationOptions options;
  options.threads = a.threads;
  options.keep_records = a.records;
  if (a.extended) {
    require(a.state, "--state");
    const auto& ext = m.extended_kernel(*a.extended).kernel;
    if (a.event) options.events.push_back(parse_event(ext.outcome(), a.event));
    return to_json(run_classical(ext, m.state(*a.state).state, a.trials, a.seed, options));
  }
  require(a.qeo, "--qeo or --extended");
  require(a.rho, "--rho");
  const auto& qeo = m.qeo(*a.qeo).qeo;
  if (a.event) options.events.push_back(parse_event(qeo.outcome(), a.event));
  return to_json(run_quantum(qeo, m.density(*a.rho), a.trials, a.seed, options));
}

json run_nogo(const ModelFile& m, const Args& a) {
  require(a.povm, "--pvm");
  const auto r = nogo_scan(m.povm(*a.povm).povm, a.samples, a.seed, default_tolerances().matrix, {}, a.threads);
  return {{"pvm", *a.povm},
          {"samples", a.samples},
          {"seed", a.seed},
          {"total", r.total},
          {"deterministic_count", r.deterministic_count},
          {"eigenstate_count", r.eigenstate_count}};
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::ParseError:
    case ErrorCode::ValidationError:
    case ErrorCode::DanglingReference:
    case ErrorCode::UnknownAtom:
    case ErrorCode::UnknownOutcome:
      return kExitInvalidInput;
    default:
      return kExitRuntimeError;
  }
}

}  // namespace

int run_cli(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Finite probabilistic models of experiments: laws, posteriors, instruments and certificates"};
  app.name("gpf");
  app.require_subcommand(1);
  Args a;
  std::string check_kind;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--model", a.model_path, "JSON model file")->required();
    sub->add_option("--tol", a.tol, "override every default tolerance");
  };

  auto* law = app.add_subcommand("law", "outcome probability law");
  add_common(law);
  law->add_option("--kernel", a.kernel);
  law->add_option("--state", a.state);
  law->add_option("--rho", a.rho);
  law->add_option("--povm", a.povm);

  auto* post = app.add_subcommand("posterior", "conditional posterior state");
  add_common(post);
  for (auto* sub : {post}) {
    sub->add_option("--extended", a.extended);
    sub->add_option("--state", a.state);
    sub->add_option("--qeo", a.qeo);
    sub->add_option("--rho", a.rho);
    sub->add_option("--event", a.event, "comma-separated outcome labels (default: all)");
  }

  auto* inst = app.add_subcommand("instrument", "instrument value on an event");
  add_common(inst);
  inst->add_option("--extended", a.extended);
  inst->add_option("--state", a.state);
  inst->add_option("--qeo", a.qeo);
  inst->add_option("--rho", a.rho);
  inst->add_option("--event", a.event);

  auto* check = app.add_subcommand("check", "structural checks and certificates");
  add_common(check);
  check->add_option("kind", check_kind, "trivial|observable|nonperturbing|cp|tp")
      ->required()
      ->check(CLI::IsMember({"trivial", "observable", "nonperturbing", "cp", "tp"}));
  check->add_option("--kernel", a.kernel);
  check->add_option("--extended", a.extended);
  check->add_option("--phi-in", a.phi_in);
  check->add_option("--phi-out", a.phi_out);
  check->add_option("--preimage-space", a.preimage_space);
  check->add_option("--qeo", a.qeo);
  check->add_option("--superop", a.superop);
  check->add_option("--event", a.event);

  auto* sim = app.add_subcommand("simulate", "Monte Carlo trials");
  add_common(sim);
  sim->add_option("--extended", a.extended);
  sim->add_option("--state", a.state);
  sim->add_option("--qeo", a.qeo);
  sim->add_option("--rho", a.rho);
  sim->add_option("--event", a.event, "conditioning event (default: every singleton)");
  sim->add_option("--trials", a.trials)->check(CLI::PositiveNumber);
  sim->add_option("--seed", a.seed);
  sim->add_option("--threads", a.threads)->check(CLI::PositiveNumber);
  sim->add_flag("--records", a.records, "include every trial record");

  auto* nogo = app.add_subcommand("nogo", "deterministic-response scan over Haar-random pure states");
  add_common(nogo);
  nogo->add_option("--pvm", a.povm)->required();
  nogo->add_option("--samples", a.samples)->check(CLI::PositiveNumber);
  nogo->add_option("--seed", a.seed);
  nogo->add_option("--threads", a.threads)->check(CLI::PositiveNumber);

  std::vector<const char*> cargv;
  cargv.push_back("gpf");
  for (const auto& s : argv) cargv.push_back(s.c_str());

  try {
    app.parse(static_cast<int>(cargv.size()), cargv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInvalidInput;
  }

  std::optional<ScopedTolerances> scoped;
  if (a.tol) {
    if (!(*a.tol > 0.0)) {
      err << "error: --tol must be positive\n";
      return kExitInvalidInput;
    }
    scoped.emplace(Tolerances{*a.tol, *a.tol, *a.tol});
  }

  try {
    const ModelFile model = parse_model_file(a.model_path);
    json result;
    std::string command;
    if (law->parsed()) command = "law", result = run_law(model, a);
    else if (post->parsed()) command = "posterior", result = run_posterior(model, a);
    else if (inst->parsed()) command = "instrument", result = run_instrument(model, a);
    else if (check->parsed()) command = "check", result = run_check(check_kind, model, a);
    else if (sim->parsed()) command = "simulate", result = run_simulate(model, a);
    else command = "nogo", result = run_nogo(model, a);
    result["command"] = command;
    result["tolerances"] = tolerances_json();
    out << canonical_dump(result);
    return kExitOk;
  } catch (CheckFailed& f) {
    f.result["command"] = "check";
    f.result["tolerances"] = tolerances_json();
    out << canonical_dump(f.result);
    err << "check " << check_kind << " failed\n";
    return kExitCheckFailed;
  } catch (const CLI::ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInvalidInput;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntimeError;
  }
}

}  // namespace gpf
