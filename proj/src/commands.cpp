// SPDX-License-Identifier: Apache-2.0
#include "impulsive/commands.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <utility>

#include <json.hpp>

#include "impulsive/checks.hpp"
#include "impulsive/switched.hpp"

namespace impulsive {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Full-precision form used in files and for constants; round-trips exactly.
std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Short form for the prose parts of reports.
std::string g9(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::io, "cannot open for writing: " + path);
  out << content;
  out.flush();
  if (!out) throw Error(ErrorKind::io, "write failed: " + path);
}

const char* flavor_name(Flavor f) { return f == Flavor::strong ? "strong" : "weak"; }

const char* kind_name(IssReport::Kind k) {
  switch (k) {
    case IssReport::Kind::small_input: return "small_input";
    case IssReport::Kind::unrestricted: return "unrestricted";
    case IssReport::Kind::iiss_only: return "iiss_only";
  }
  return "unknown";
}

const char* kind_label(IssReport::Kind k) {
  switch (k) {
    case IssReport::Kind::small_input:
      return "small-input sup-norm certificate (inputs within the certified radius)";
    case IssReport::Kind::unrestricted:
      return "unrestricted sup-norm certificate (no input-slope term)";
    case IssReport::Kind::iiss_only:
      return "integral-variant certificate (any input magnitude)";
  }
  return "unknown";
}

std::string trajectory_csv(const Trajectory& traj, int n) {
  std::string out = "t";
  for (int i = 1; i <= n; ++i) out += ",x_" + std::to_string(i);
  out += ",is_jump,pre_post\n";
  for (const auto& s : traj.samples) {
    out += g17(s.t);
    for (int i = 0; i < n; ++i) {
      out += ',';
      out += g17(s.x(i));
    }
    switch (s.phase) {
      case TrajectorySample::Phase::flow: out += ",0,"; break;
      case TrajectorySample::Phase::pre_jump: out += ",1,pre"; break;
      case TrajectorySample::Phase::post_jump: out += ",1,post"; break;
    }
    out += '\n';
  }
  return out;
}

// Everything cmd_certify and cmd_verify share: the report plus the constants
// that fed it (budgets, baseline, fitted envelope).
struct CertOutcome {
  IssReport report;
  bool fitted = false;
  std::size_t fit_pairs = 0;  // sampled pairs behind a plain-document fit
  std::vector<NamedConstant> inputs;
  std::vector<std::string> extra_notes;
};

CertOutcome build_certificate(const SystemDocument& doc, const CertifyArgs& args) {
  CertOutcome out;
  CertifyOptions opts;
  opts.variant =
      args.iiss_only ? CertifyOptions::Variant::iiss : CertifyOptions::Variant::automatic;
  opts.chosenR = args.chosenR;
  opts.dwell = doc.dwell;

  if (doc.is_switched()) {
    SignalClass cls = doc.switched_dwell ? SignalClass(*doc.switched_dwell)
                                         : SignalClass(doc.signals);
    CertSource src;
    if (args.fit) {
      EnvelopeFitRequest req;
      req.flavor = args.fit_flavor;
      req.step = args.fit_step.value_or(doc.sim.step);
      req.options = args.fit_options;
      req.pair_seed = doc.seed;
      src = req;
      out.fitted = true;
    } else if (doc.certificate) {
      src = *doc.certificate;
    } else {
      throw Error(ErrorKind::config,
                  "the document carries no certificate block; pass --fit to estimate one");
    }
    out.report = switched_certify(*doc.switched, cls, src, opts);
    if (out.fitted) {
      out.inputs.push_back({"fittedK", out.report.source.K,
                            "smallest overshoot covering every sampled transition pair at the "
                            "selected rate"});
      out.inputs.push_back({"fittedLambda", out.report.source.lambda,
                            "largest grid rate whose overshoot stays within the fitting cap"});
    }
    out.inputs.push_back({"Nbar", out.report.Nbar,
                          "largest constant slope bound among the admitted modes and resets"});
    out.inputs.push_back({"ThetaC", out.report.thetaC,
                          "worst over the admitted signals of the integrated slope excess "
                          "above the baseline"});
    out.inputs.push_back({"ThetaD", out.report.thetaD,
                          "worst over the admitted signals of the summed slope excess at the "
                          "switches"});
    return out;
  }

  const ImpulsiveSystem& sys = *doc.system;
  Certificate cert;
  if (args.fit) {
    if (!sys.has_linear_part())
      throw Error(ErrorKind::config,
                  "envelope fitting needs the linear part (A and R) in the document");
    auto pairs = default_pair_grid(sys.seq, doc.seed);
    EnvelopeFit fit = estimate_envelope(sys.linear_part(), args.fit_flavor, pairs,
                                        args.fit_step.value_or(doc.sim.step), args.fit_options);
    cert = fit.cert;
    out.fitted = true;
    out.fit_pairs = fit.pairs.size();
    out.inputs.push_back({"fittedK", cert.K,
                          "smallest overshoot covering every sampled transition pair at the "
                          "selected rate"});
    out.inputs.push_back({"fittedLambda", cert.lambda,
                          "largest grid rate whose overshoot stays within the fitting cap"});
  } else if (doc.certificate) {
    cert = *doc.certificate;
  } else {
    throw Error(ErrorKind::config,
                "the document carries no certificate block; pass --fit to estimate one");
  }

  PerturbationBound bound;
  double theta_c = 0.0, theta_d = 0.0;
  if (sys.bound) {
    bound = *sys.bound;
    const ScalarFunction& theta = bound.theta;
    std::vector<double> splits = theta.breakpoints();
    splits.insert(splits.end(), sys.seq.times().begin(), sys.seq.times().end());
    theta_c = detail::trapezoid_split([&](double t) { return theta(t); },
                                      [&](double t) { return theta.left(t); }, 0.0,
                                      sys.seq.horizon(), args.budget_step, splits);
    for (double tau : sys.seq.times()) theta_d += theta(tau);
  } else {
    out.extra_notes.push_back(
        "the document declares no perturbation bound; certifying the nominal system "
        "(zero perturbation)");
  }
  out.inputs.push_back({"ThetaC", theta_c, "integral of theta over [0, horizon]"});
  out.inputs.push_back({"ThetaD", theta_d, "sum of theta over the impulse times"});
  out.report = certify(cert, bound, theta_c, theta_d, opts);
  return out;
}

// Pairs every provenance entry with the report field it describes.
std::vector<NamedConstant> named_constants(const IssReport& rep) {
  auto value_of = [&](const std::string& f) -> std::optional<double> {
    if (f == "hatK") return rep.hatK;
    if (f == "hatLambda") return rep.hatLambda;
    if (f == "kappa") return rep.kappa;
    if (f == "betaScale") return rep.betaScale;
    if (f == "betaRate") return rep.betaRate;
    if (f == "rhoCoeff") return rep.rhoCoeff;
    if (f == "Rmax") return rep.Rmax;
    if (f == "chosenR") return rep.chosenR;
    if (f == "barK") return rep.barK;
    if (f == "barLambda") return rep.barLambda;
    if (f == "gainCoeff") return rep.gainCoeff;
    return std::nullopt;
  };
  std::vector<NamedConstant> out;
  for (const auto& p : rep.provenance) {
    auto v = value_of(p.field);
    if (!v) throw Error(ErrorKind::internal, "provenance entry without a value: " + p.field);
    out.push_back({p.field, *v, p.formula});
  }
  return out;
}

void render_certificate(std::ostream& os, const IssReport& rep,
                        const std::vector<NamedConstant>& constants) {
  os << "kind: " << kind_label(rep.kind) << "\n";
  os << "source envelope: K = " << g9(rep.source.K) << ", lambda = " << g9(rep.source.lambda)
     << ", flavor = " << flavor_name(rep.source.flavor) << "\n";
  const bool strengthened = rep.source.K != rep.effective.K ||
                            rep.source.lambda != rep.effective.lambda ||
                            rep.source.flavor != rep.effective.flavor;
  if (strengthened)
    os << "effective envelope: K = " << g9(rep.effective.K)
       << ", lambda = " << g9(rep.effective.lambda)
       << ", flavor = " << flavor_name(rep.effective.flavor) << "\n";
  if (rep.dwell)
    os << "dwell-time class: chatter bound " << rep.dwell->chatter_bound
       << ", average dwell time " << g9(rep.dwell->avg_dwell) << "\n";
  os << "perturbation: Nbar = " << g9(rep.Nbar) << ", M = " << g9(rep.M)
     << ", c = " << g9(rep.c) << ", ThetaC = " << g9(rep.thetaC)
     << ", ThetaD = " << g9(rep.thetaD) << "\n";
  os << "constants:\n";
  for (const auto& c : constants)
    os << "  " << c.name << " = " << g17(c.value) << "  [" << c.formula << "]\n";
  if (!rep.notes.empty()) {
    os << "notes:\n";
    for (const auto& n : rep.notes) os << "  - " << n << "\n";
  }
}

nlohmann::ordered_json certificate_json(const SystemDocument& doc, const IssReport& rep,
                                        const std::vector<NamedConstant>& constants,
                                        const std::vector<std::string>& extra_notes) {
  nlohmann::ordered_json j;
  j["command"] = "certify";
  j["digest"] = doc.digest;
  j["kind"] = kind_name(rep.kind);
  j["source"] = {{"K", rep.source.K},
                 {"lambda", rep.source.lambda},
                 {"flavor", flavor_name(rep.source.flavor)}};
  nlohmann::ordered_json eff = {{"K", rep.effective.K},
                                {"lambda", rep.effective.lambda},
                                {"flavor", flavor_name(rep.effective.flavor)}};
  if (!rep.effective.note.empty()) eff["note"] = rep.effective.note;
  j["effective"] = eff;
  if (rep.dwell)
    j["dwell"] = {{"chatter_bound", rep.dwell->chatter_bound},
                  {"avg_dwell", rep.dwell->avg_dwell}};
  j["bound"] = {{"Nbar", rep.Nbar},
                {"M", rep.M},
                {"c", rep.c},
                {"ThetaC", rep.thetaC},
                {"ThetaD", rep.thetaD}};
  nlohmann::ordered_json cs = nlohmann::ordered_json::object();
  for (const auto& c : constants) {
    if (cs.contains(c.name))
      throw Error(ErrorKind::internal, "duplicate constant in certificate output: " + c.name);
    cs[c.name] = {{"value", c.value}, {"formula", c.formula}};
  }
  j["constants"] = cs;
  std::vector<std::string> notes = rep.notes;
  notes.insert(notes.end(), extra_notes.begin(), extra_notes.end());
  j["notes"] = notes;
  return j;
}

}  // namespace

int exit_code_for(const Error& err) {
  switch (err.kind()) {
    case ErrorKind::threshold:
    case ErrorKind::not_stable:
      return 3;
    case ErrorKind::escape:
      return 1;
    default:
      return 2;
  }
}

RunReport cmd_simulate(const SystemDocument& doc, const SimulateArgs& args, std::ostream& os) {
  const auto start = Clock::now();
  RunReport rr;
  rr.command = "simulate";
  rr.digest = doc.digest;

  ImpulsiveSystem sys = cast_signal(doc, args.signal);
  const double t0 = args.t0.value_or(doc.t0);
  double t_end;
  if (args.t_end)
    t_end = *args.t_end;
  else if (doc.horizon)
    t_end = *doc.horizon;
  else
    t_end = sys.seq.horizon();
  SimulateOptions opts = doc.sim;
  if (args.step) opts.step = *args.step;
  Vec x0;
  if (args.x0)
    x0 = *args.x0;
  else if (doc.x0)
    x0 = *doc.x0;
  else
    throw Error(ErrorKind::argument,
                "no initial state: give x0 or add a simulation.x0 block to the document");

  Trajectory traj = simulate(sys, t0, x0, doc.input, t_end, opts);

  os << "simulate: " << sys.n << "-state system over [" << g9(t0) << ", " << g9(t_end)
     << "], step " << g9(opts.step) << "\n";
  os << "impulses applied: " << traj.jumps.size() << "\n";
  const double final_norm = traj.final_state().norm();
  os << "final |x| = " << g9(final_norm) << " at t = " << g9(traj.t_end) << "\n";

  if (!args.out_path.empty()) {
    write_text_file(args.out_path, trajectory_csv(traj, sys.n));
    rr.outputs.push_back(args.out_path);
    os << "wrote " << args.out_path << " (" << traj.samples.size() << " rows)\n";
  }

  rr.constants.push_back(
      {"final_norm", final_norm, "|x(t_end)| of the integrated trajectory"});
  rr.message = "simulated " + std::to_string(traj.samples.size()) + " samples, " +
               std::to_string(traj.jumps.size()) + " impulses";
  rr.wall_seconds = elapsed_since(start);
  return rr;
}

RunReport cmd_certify(const SystemDocument& doc, const CertifyArgs& args, std::ostream& os) {
  const auto start = Clock::now();
  RunReport rr;
  rr.command = "certify";
  rr.digest = doc.digest;

  CertOutcome oc = build_certificate(doc, args);
  std::vector<NamedConstant> constants = oc.inputs;
  std::vector<NamedConstant> derived = named_constants(oc.report);
  constants.insert(constants.end(), derived.begin(), derived.end());

  if (oc.fitted) {
    os << "envelope fitted from sampled transition pairs";
    if (oc.fit_pairs > 0) os << " (" << oc.fit_pairs << " pairs)";
    os << "\n";
  }
  render_certificate(os, oc.report, constants);
  for (const auto& n : oc.extra_notes) os << "note: " << n << "\n";

  if (!args.out_path.empty()) {
    write_text_file(args.out_path,
                    certificate_json(doc, oc.report, constants, oc.extra_notes).dump(2) + "\n");
    rr.outputs.push_back(args.out_path);
    os << "wrote " << args.out_path << "\n";
  }

  rr.constants = std::move(constants);
  rr.message = kind_label(oc.report.kind);
  rr.wall_seconds = elapsed_since(start);
  return rr;
}

RunReport cmd_verify(const SystemDocument& doc, const VerifyArgs& args, std::ostream& os) {
  const auto start = Clock::now();
  RunReport rr;
  rr.command = "verify";
  rr.digest = doc.digest;

  CertOutcome oc = build_certificate(doc, args.certify);
  ImpulsiveSystem sys = cast_signal(doc, args.signal);

  if (oc.report.dwell) {
    DwellCheck dc = check_dwell_class(sys.seq, *oc.report.dwell);
    if (!dc.ok)
      throw Error(ErrorKind::precondition,
                  "the impulse sequence falls outside the certificate's dwell-time class: " +
                      std::to_string(dc.count) + " impulses on (" + g9(dc.from) + ", " +
                      g9(dc.to) + "] against the admissible " + g9(dc.admissible));
  }

  const int trials = args.trials.value_or(doc.verify.trials);
  const std::uint64_t seed = args.seed.value_or(doc.seed);
  const double state_radius = args.state_radius.value_or(doc.verify.state_radius);
  double input_radius;
  if (args.input_radius)
    input_radius = *args.input_radius;
  else if (doc.verify.input_radius)
    input_radius = *doc.verify.input_radius;
  else if (oc.report.chosenR)
    input_radius = *oc.report.chosenR;
  else
    input_radius = 1.0;

  MonteCarloOptions mco;
  mco.step = doc.sim.step;
  mco.blowup_cap = doc.sim.blowup_cap;
  MonteCarloReport mc =
      monte_carlo_iss(sys, oc.report, trials, input_radius, state_radius, seed, mco);

  int failed = 0, escapes = 0;
  for (const auto& t : mc.trials) {
    if (!t.pass) ++failed;
    if (t.escaped) ++escapes;
  }

  os << "verify: " << trials << " trials, seed " << seed << ", input radius "
     << g9(input_radius) << ", state radius " << g9(state_radius) << "\n";
  os << "bound: " << (oc.report.barK ? "sup-norm variant" : "integral variant") << " of the "
     << kind_label(oc.report.kind) << "\n";
  os << "pass rate " << g9(100.0 * mc.pass_rate) << "% (" << (trials - failed) << "/" << trials
     << "), worst margin " << g9(mc.aggregate.worstMargin) << "\n";
  os << "violations: " << mc.aggregate.violations.size() << "\n";
  if (escapes > 0) os << "finite escapes: " << escapes << "\n";

  if (!args.out_path.empty()) {
    std::string csv = "trial,seed,t,lhs,rhs,margin\n";
    for (const auto& rec : mc.trials)
      for (const auto& v : rec.violations)
        csv += std::to_string(rec.trial) + "," + std::to_string(rec.seed) + "," + g17(v.t) +
               "," + g17(v.lhs) + "," + g17(v.rhs) + "," + g17(v.margin) + "\n";
    write_text_file(args.out_path, csv);
    rr.outputs.push_back(args.out_path);
    os << "wrote " << args.out_path << "\n";
  }

  rr.constants.push_back({"pass_rate", mc.pass_rate,
                          "fraction of trials whose trajectory stayed within the certified "
                          "bound"});
  rr.constants.push_back({"worst_margin", mc.aggregate.worstMargin,
                          "min over all samples of bound minus observed norm"});
  rr.exit_code = mc.aggregate.pass ? 0 : 1;
  rr.message = mc.aggregate.pass
                   ? "all trials within the certified bound"
                   : std::to_string(failed) + " trial(s) violated the certified bound";
  rr.wall_seconds = elapsed_since(start);
  return rr;
}

RunReport cmd_phi(const SystemDocument& doc, double s, double t, const PhiArgs& args,
                  std::ostream& os) {
  const auto start = Clock::now();
  RunReport rr;
  rr.command = "phi";
  rr.digest = doc.digest;

  ImpulsiveSystem sys = cast_signal(doc, args.signal);
  if (!sys.has_linear_part())
    throw Error(ErrorKind::config,
                "transition matrices need the linear part (A and R) in the document");
  const double step = args.step.value_or(doc.sim.step);
  Mat phi = transition_matrix(sys.linear_part(), s, t, step);

  os << "Phi(" << g9(t) << ", " << g9(s) << ") =\n";
  for (int i = 0; i < phi.rows(); ++i) {
    os << " ";
    for (int j = 0; j < phi.cols(); ++j) os << " " << g17(phi(i, j));
    os << "\n";
  }
  const double norm = spectral_norm(phi);
  os << "||Phi|| = " << g17(norm) << "\n";
  rr.constants.push_back(
      {"phi_norm", norm, "spectral norm of the transition matrix over (s, t]"});

  if (doc.certificate) {
    const Certificate& cert = *doc.certificate;
    const double d =
        t - s + (cert.flavor == Flavor::strong ? static_cast<double>(sys.seq.count(s, t)) : 0.0);
    const double margin = cert.K * std::exp(-cert.lambda * d) - norm;
    os << "envelope margin: K*e^{-lambda*d} - ||Phi|| = " << g17(margin) << "  (d = " << g9(d)
       << ", " << flavor_name(cert.flavor) << " counting)\n";
    rr.constants.push_back({"envelope_margin", margin, "K*e^{-lambda*d} - ||Phi(t, s)||"});
  }

  rr.message = "||Phi|| = " + g9(norm);
  rr.wall_seconds = elapsed_since(start);
  return rr;
}

}  // namespace impulsive
