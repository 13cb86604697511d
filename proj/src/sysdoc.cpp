// SPDX-License-Identifier: Apache-2.0
#include "impulsive/sysdoc.hpp"

#include <json.hpp>

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>
#include <utility>

#include "impulsive/expr.hpp"

namespace impulsive {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
  throw Error(ErrorKind::schema, path + ": " + msg);
}

std::string join(const std::string& path, const std::string& key) { return path + "." + key; }

void require_object(const json& j, const std::string& path) {
  if (!j.is_object()) fail(path, "expected an object");
}

void require_keys(const json& obj, const std::string& path,
                  std::initializer_list<const char*> allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (const char* key : allowed)
      if (it.key() == key) {
        known = true;
        break;
      }
    if (!known) fail(path, "unknown key \"" + it.key() + "\"");
  }
}

double num_at(const json& obj, const std::string& path, const std::string& key) {
  if (!obj.contains(key)) fail(path, "missing required number \"" + key + "\"");
  const json& v = obj.at(key);
  if (!v.is_number()) fail(join(path, key), "expected a number");
  return v.get<double>();
}

double num_or(const json& obj, const std::string& path, const std::string& key, double fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number()) fail(join(path, key), "expected a number");
  return v.get<double>();
}

int int_at(const json& obj, const std::string& path, const std::string& key) {
  if (!obj.contains(key)) fail(path, "missing required integer \"" + key + "\"");
  const json& v = obj.at(key);
  if (!v.is_number_integer()) fail(join(path, key), "expected an integer");
  return v.get<int>();
}

int int_or(const json& obj, const std::string& path, const std::string& key, int fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number_integer()) fail(join(path, key), "expected an integer");
  return v.get<int>();
}

std::vector<double> num_list(const json& j, const std::string& path) {
  if (!j.is_array()) fail(path, "expected an array of numbers");
  std::vector<double> out;
  out.reserve(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) fail(path + "[" + std::to_string(i) + "]", "expected a number");
    out.push_back(j[i].get<double>());
  }
  return out;
}

Vec vec_at(const json& j, const std::string& path, int expect) {
  std::vector<double> vals = num_list(j, path);
  if (static_cast<int>(vals.size()) != expect)
    fail(path, "expected " + std::to_string(expect) + " numbers, got " +
                   std::to_string(vals.size()));
  Vec v(expect);
  for (int i = 0; i < expect; ++i) v(i) = vals[static_cast<std::size_t>(i)];
  return v;
}

Mat mat_at(const json& j, const std::string& path, int n) {
  if (!j.is_array() || static_cast<int>(j.size()) != n)
    fail(path, "expected " + std::to_string(n) + " matrix rows");
  Mat m(n, n);
  for (int i = 0; i < n; ++i) m.row(i) = vec_at(j[static_cast<std::size_t>(i)],
                                                path + "[" + std::to_string(i) + "]", n)
                                             .transpose();
  return m;
}

std::vector<std::string> string_list(const json& j, const std::string& path, int expect) {
  if (!j.is_array() || static_cast<int>(j.size()) != expect)
    fail(path, "expected " + std::to_string(expect) + " expression strings");
  std::vector<std::string> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_string()) fail(path + "[" + std::to_string(i) + "]", "expected a string");
    out.push_back(j[i].get<std::string>());
  }
  return out;
}

StateMap expr_map(const json& j, const std::string& path, int n, int m) {
  ExprVector ev;
  try {
    ev = ExprVector::parse(string_list(j, path, n), n, m);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::schema && std::string(e.what()).rfind(path, 0) == 0) throw;
    fail(path, e.what());
  }
  return [ev](double t, const Vec& x, const Vec& u) { return ev.eval(t, x, u); };
}

// A dynamics block: {"expr": [n strings]} or {"linear_plus": {"A"|"R": matrix,
// "phi"|"psi": [n strings]}}. Writes into the map/matrix/perturbation slots.
void parse_dynamics(const json& j, const std::string& path, int n, int m, const char* mat_key,
                    const char* pert_key, StateMap* full, std::optional<MatrixFunction>* lin,
                    StateMap* pert) {
  require_object(j, path);
  require_keys(j, path, {"expr", "linear_plus"});
  const bool has_expr = j.contains("expr");
  const bool has_lin = j.contains("linear_plus");
  if (has_expr == has_lin) fail(path, "give exactly one of \"expr\" and \"linear_plus\"");
  if (has_expr) {
    *full = expr_map(j.at("expr"), join(path, "expr"), n, m);
    return;
  }
  const json& lp = j.at("linear_plus");
  const std::string lp_path = join(path, "linear_plus");
  require_object(lp, lp_path);
  require_keys(lp, lp_path, {mat_key, pert_key});
  if (!lp.contains(mat_key)) fail(lp_path, std::string("missing matrix \"") + mat_key + "\"");
  *lin = MatrixFunction::constant(mat_at(lp.at(mat_key), join(lp_path, mat_key), n));
  if (lp.contains(pert_key))
    *pert = expr_map(lp.at(pert_key), join(lp_path, pert_key), n, m);
}

ScalarFunction parse_scalar_fn(const json& j, const std::string& path) {
  if (j.is_number()) return ScalarFunction::constant(j.get<double>());
  require_object(j, path);
  require_keys(j, path, {"piecewise"});
  if (!j.contains("piecewise")) fail(path, "expected a number or a \"piecewise\" object");
  const json& pw = j.at("piecewise");
  const std::string pw_path = join(path, "piecewise");
  require_object(pw, pw_path);
  require_keys(pw, pw_path, {"breakpoints", "values"});
  if (!pw.contains("breakpoints") || !pw.contains("values"))
    fail(pw_path, "needs \"breakpoints\" and \"values\"");
  try {
    return ScalarFunction::piecewise(num_list(pw.at("breakpoints"), join(pw_path, "breakpoints")),
                                     num_list(pw.at("values"), join(pw_path, "values")));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::schema) throw;
    fail(pw_path, e.what());
  }
}

KFunction parse_eta(const json& j, const std::string& path) {
  if (j.is_string()) {
    if (j.get<std::string>() == "identity") return KFunction::identity();
    fail(path, "unknown comparison function \"" + j.get<std::string>() + "\"");
  }
  require_object(j, path);
  require_keys(j, path, {"power", "scaled", "saturating", "tabulated"});
  if (j.size() != 1) fail(path, "give exactly one comparison-function kind");
  try {
    if (j.contains("power")) return KFunction::power(num_at(j, path, "power"));
    if (j.contains("scaled")) return KFunction::scaled(num_at(j, path, "scaled"));
    if (j.contains("saturating")) return KFunction::saturating(num_at(j, path, "saturating"));
    const json& tab = j.at("tabulated");
    const std::string tab_path = join(path, "tabulated");
    require_object(tab, tab_path);
    require_keys(tab, tab_path, {"r", "v"});
    if (!tab.contains("r") || !tab.contains("v")) fail(tab_path, "needs \"r\" and \"v\"");
    return KFunction::tabulated(num_list(tab.at("r"), join(tab_path, "r")),
                                num_list(tab.at("v"), join(tab_path, "v")));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::schema) throw;
    fail(path, e.what());
  }
}

ImpulseSequence parse_impulses(const json& j, const std::string& path) {
  require_object(j, path);
  require_keys(j, path, {"times", "horizon", "periodic", "harmonic"});
  const int kinds = (j.contains("times") ? 1 : 0) + (j.contains("periodic") ? 1 : 0) +
                    (j.contains("harmonic") ? 1 : 0);
  if (kinds != 1) fail(path, "give exactly one of \"times\", \"periodic\", \"harmonic\"");
  try {
    if (j.contains("times")) {
      std::vector<double> times = num_list(j.at("times"), join(path, "times"));
      double horizon;
      if (j.contains("horizon")) {
        horizon = num_at(j, path, "horizon");
      } else if (!times.empty()) {
        horizon = times.back();
      } else {
        fail(path, "an empty time list needs an explicit \"horizon\"");
      }
      return ImpulseSequence(std::move(times), horizon);
    }
    if (j.contains("periodic")) {
      const json& p = j.at("periodic");
      const std::string p_path = join(path, "periodic");
      require_object(p, p_path);
      require_keys(p, p_path, {"period", "offset", "horizon"});
      return ImpulseSequence::periodic(num_at(p, p_path, "period"), num_at(p, p_path, "offset"),
                                       num_at(p, p_path, "horizon"));
    }
    const json& h = j.at("harmonic");
    const std::string h_path = join(path, "harmonic");
    require_object(h, h_path);
    require_keys(h, h_path, {"k_max", "horizon"});
    std::optional<double> horizon;
    if (h.contains("horizon")) horizon = num_at(h, h_path, "horizon");
    return harmonic_sequence(int_at(h, h_path, "k_max"), horizon);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::schema) throw;
    fail(path, e.what());
  }
}

InputSignal parse_input(const json& j, const std::string& path, int m) {
  if (j.is_string()) {
    if (j.get<std::string>() == "zero") return InputSignal::zero(m);
    fail(path, "unknown input \"" + j.get<std::string>() + "\"");
  }
  require_object(j, path);
  require_keys(j, path, {"constant", "piecewise"});
  if (j.size() != 1) fail(path, "give exactly one of \"constant\" and \"piecewise\"");
  try {
    if (j.contains("constant"))
      return InputSignal::piecewise({0.0}, {vec_at(j.at("constant"), join(path, "constant"), m)});
    const json& pw = j.at("piecewise");
    const std::string pw_path = join(path, "piecewise");
    require_object(pw, pw_path);
    require_keys(pw, pw_path, {"breakpoints", "values"});
    if (!pw.contains("breakpoints") || !pw.contains("values"))
      fail(pw_path, "needs \"breakpoints\" and \"values\"");
    std::vector<double> breaks = num_list(pw.at("breakpoints"), join(pw_path, "breakpoints"));
    const json& vals = pw.at("values");
    const std::string vals_path = join(pw_path, "values");
    if (!vals.is_array()) fail(vals_path, "expected an array of vectors");
    std::vector<Vec> values;
    for (std::size_t i = 0; i < vals.size(); ++i)
      values.push_back(vec_at(vals[i], vals_path + "[" + std::to_string(i) + "]", m));
    return InputSignal::piecewise(std::move(breaks), std::move(values));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::schema) throw;
    fail(path, e.what());
  }
}

Certificate parse_certificate(const json& j, const std::string& path) {
  require_object(j, path);
  require_keys(j, path, {"K", "lambda", "flavor"});
  const double k = num_at(j, path, "K");
  const double lambda = num_at(j, path, "lambda");
  if (!j.contains("flavor")) fail(path, "missing required string \"flavor\"");
  const json& fl = j.at("flavor");
  if (!fl.is_string()) fail(join(path, "flavor"), "expected \"strong\" or \"weak\"");
  Flavor flavor;
  if (fl.get<std::string>() == "strong")
    flavor = Flavor::strong;
  else if (fl.get<std::string>() == "weak")
    flavor = Flavor::weak;
  else
    fail(join(path, "flavor"), "expected \"strong\" or \"weak\"");
  try {
    return Certificate(k, lambda, flavor);
  } catch (const Error& e) {
    fail(path, e.what());
  }
}

DwellClass parse_dwell(const json& j, const std::string& path) {
  require_object(j, path);
  require_keys(j, path, {"chatter_bound", "avg_dwell"});
  try {
    return DwellClass(int_at(j, path, "chatter_bound"), num_at(j, path, "avg_dwell"));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::schema) throw;
    fail(path, e.what());
  }
}

SwitchingSignal parse_signal(const json& j, const std::string& path) {
  require_object(j, path);
  require_keys(j, path, {"initial", "switches", "horizon"});
  const int initial = int_at(j, path, "initial");
  std::vector<std::pair<double, int>> switches;
  if (j.contains("switches")) {
    const json& sws = j.at("switches");
    const std::string sws_path = join(path, "switches");
    if (!sws.is_array()) fail(sws_path, "expected an array of [time, mode] pairs");
    for (std::size_t i = 0; i < sws.size(); ++i) {
      const json& s = sws[i];
      const std::string s_path = sws_path + "[" + std::to_string(i) + "]";
      if (!s.is_array() || s.size() != 2 || !s[0].is_number() || !s[1].is_number_integer())
        fail(s_path, "expected a [time, mode] pair");
      switches.emplace_back(s[0].get<double>(), s[1].get<int>());
    }
  }
  try {
    return SwitchingSignal(initial, std::move(switches), num_at(j, path, "horizon"));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::schema) throw;
    fail(path, e.what());
  }
}

std::pair<int, int> parse_reset_key(const std::string& key, const std::string& path) {
  const auto arrow = key.find("->");
  if (arrow != std::string::npos) {
    try {
      std::size_t used_i = 0, used_j = 0;
      const int i = std::stoi(key.substr(0, arrow), &used_i);
      const std::string rest = key.substr(arrow + 2);
      const int j = std::stoi(rest, &used_j);
      if (used_i == arrow && used_j == rest.size() && i >= 0 && j >= 0) return {i, j};
    } catch (...) {
    }
  }
  fail(path, "reset keys look like \"0->1\"; got \"" + key + "\"");
}

void parse_switched(const json& j, const std::string& path, SystemDocument& doc, double m_const,
                    double c_const, const KFunction& eta) {
  require_object(j, path);
  require_keys(j, path, {"modes", "resets", "signals", "dwell_class"});
  if (!j.contains("modes")) fail(path, "missing \"modes\"");

  SwitchedSystem sw;
  sw.n = doc.n;
  sw.m = doc.m;
  sw.M = m_const;
  sw.c = c_const;
  sw.eta = eta;

  const json& modes = j.at("modes");
  const std::string modes_path = join(path, "modes");
  if (!modes.is_array() || modes.empty()) fail(modes_path, "expected a nonempty array of modes");
  for (std::size_t i = 0; i < modes.size(); ++i) {
    const json& mj = modes[i];
    const std::string m_path = modes_path + "[" + std::to_string(i) + "]";
    require_object(mj, m_path);
    require_keys(mj, m_path, {"flow", "N"});
    if (!mj.contains("flow")) fail(m_path, "missing \"flow\"");
    SwitchedMode mode;
    parse_dynamics(mj.at("flow"), join(m_path, "flow"), doc.n, doc.m, "A", "phi", &mode.f,
                   &mode.A, &mode.phi);
    if (mj.contains("N")) mode.N = parse_scalar_fn(mj.at("N"), join(m_path, "N"));
    sw.modes.push_back(std::move(mode));
  }

  if (j.contains("resets")) {
    const json& resets = j.at("resets");
    const std::string resets_path = join(path, "resets");
    require_object(resets, resets_path);
    for (auto it = resets.begin(); it != resets.end(); ++it) {
      const std::string r_path = join(resets_path, it.key());
      const auto key = parse_reset_key(it.key(), r_path);
      if (key.first >= static_cast<int>(sw.modes.size()) ||
          key.second >= static_cast<int>(sw.modes.size()))
        fail(r_path, "names a mode outside the family");
      const json& rj = it.value();
      require_object(rj, r_path);
      require_keys(rj, r_path, {"jump", "N"});
      if (!rj.contains("jump")) fail(r_path, "missing \"jump\"");
      SwitchedReset reset;
      parse_dynamics(rj.at("jump"), join(r_path, "jump"), doc.n, doc.m, "R", "psi", &reset.g,
                     &reset.R, &reset.psi);
      if (rj.contains("N")) reset.N = parse_scalar_fn(rj.at("N"), join(r_path, "N"));
      sw.resets[key] = std::move(reset);
    }
  }

  if (j.contains("signals") && j.contains("dwell_class"))
    fail(path, "give either \"signals\" or \"dwell_class\", not both");
  if (j.contains("signals")) {
    const json& sigs = j.at("signals");
    const std::string sigs_path = join(path, "signals");
    if (!sigs.is_array() || sigs.empty())
      fail(sigs_path, "expected a nonempty array of signals");
    for (std::size_t i = 0; i < sigs.size(); ++i) {
      SwitchingSignal nu = parse_signal(sigs[i], sigs_path + "[" + std::to_string(i) + "]");
      const int count = static_cast<int>(sw.modes.size());
      if (nu.initial_mode >= count)
        fail(sigs_path + "[" + std::to_string(i) + "].initial", "mode outside the family");
      for (const auto& [t, mode] : nu.switches)
        if (mode >= count)
          fail(sigs_path + "[" + std::to_string(i) + "].switches", "mode outside the family");
      doc.signals.push_back(std::move(nu));
    }
  } else if (j.contains("dwell_class")) {
    doc.switched_dwell = parse_dwell(j.at("dwell_class"), join(path, "dwell_class"));
  }

  doc.switched = std::move(sw);
}

}  // namespace

std::string content_digest(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ull;  // FNV offset basis
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ull;  // FNV prime
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

SystemDocument load_document(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::schema, std::string("document is not valid JSON: ") + e.what());
  }
  require_object(j, "document");
  require_keys(j, "document",
               {"dim", "input_dim", "flow", "jump", "impulses", "bound", "certificate",
                "dwell_class", "simulation", "input", "seed", "verify", "switched"});

  SystemDocument doc;
  doc.digest = content_digest(text);
  doc.n = int_at(j, "document", "dim");
  doc.m = int_at(j, "document", "input_dim");
  if (doc.n < 1) fail("document.dim", "state dimension must be positive");
  if (doc.m < 1) fail("document.input_dim", "input dimension must be positive");

  // Shared input-gain block; slope fields are meaningless for switched
  // documents, which carry slope bounds per mode/reset.
  double nbar = 0.0, m_const = 0.0, c_const = 0.0;
  ScalarFunction theta;
  KFunction eta;
  const bool switched = j.contains("switched");
  if (j.contains("bound")) {
    const json& b = j.at("bound");
    require_object(b, "bound");
    require_keys(b, "bound", {"Nbar", "theta", "M", "c", "eta"});
    if (switched && (b.contains("Nbar") || b.contains("theta")))
      fail("bound", "switched documents take slope bounds per mode and reset, not here");
    nbar = num_or(b, "bound", "Nbar", 0.0);
    if (b.contains("theta")) theta = parse_scalar_fn(b.at("theta"), "bound.theta");
    m_const = num_or(b, "bound", "M", 0.0);
    c_const = num_or(b, "bound", "c", 0.0);
    if (b.contains("eta")) eta = parse_eta(b.at("eta"), "bound.eta");
  }

  if (switched) {
    for (const char* key : {"flow", "jump", "impulses"})
      if (j.contains(key))
        fail(std::string("document.") + key,
             "switched documents define dynamics per mode, under \"switched\"");
    parse_switched(j.at("switched"), "switched", doc, m_const, c_const, eta);
  } else {
    for (const char* key : {"flow", "jump", "impulses"})
      if (!j.contains(key)) fail("document", std::string("missing required block \"") + key + "\"");
    ImpulsiveSystem sys;
    sys.n = doc.n;
    sys.m = doc.m;
    parse_dynamics(j.at("flow"), "flow", doc.n, doc.m, "A", "phi", &sys.f, &sys.A, &sys.phi);
    std::optional<MatrixFunction> r_mat;
    parse_dynamics(j.at("jump"), "jump", doc.n, doc.m, "R", "psi", &sys.g, &r_mat, &sys.psi);
    if (r_mat) sys.R = JumpMatrixMap::constant((*r_mat)(0.0));
    sys.seq = parse_impulses(j.at("impulses"), "impulses");
    if (j.contains("bound")) sys.bound = PerturbationBound(nbar, theta, m_const, c_const, eta);
    doc.system = std::move(sys).finalize();
  }

  if (j.contains("certificate"))
    doc.certificate = parse_certificate(j.at("certificate"), "certificate");
  if (j.contains("dwell_class")) doc.dwell = parse_dwell(j.at("dwell_class"), "dwell_class");

  if (j.contains("simulation")) {
    const json& s = j.at("simulation");
    require_object(s, "simulation");
    require_keys(s, "simulation", {"step", "blowup_cap", "t0", "x0", "horizon"});
    doc.sim.step = num_or(s, "simulation", "step", doc.sim.step);
    doc.sim.blowup_cap = num_or(s, "simulation", "blowup_cap", doc.sim.blowup_cap);
    doc.t0 = num_or(s, "simulation", "t0", 0.0);
    if (s.contains("x0")) doc.x0 = vec_at(s.at("x0"), "simulation.x0", doc.n);
    if (s.contains("horizon")) doc.horizon = num_at(s, "simulation", "horizon");
  }

  doc.input = InputSignal::zero(doc.m);
  if (j.contains("input")) doc.input = parse_input(j.at("input"), "input", doc.m);

  if (j.contains("seed")) {
    const json& s = j.at("seed");
    if (!s.is_number_unsigned()) fail("document.seed", "expected a nonnegative integer");
    doc.seed = s.get<unsigned>();
  }

  if (j.contains("verify")) {
    const json& v = j.at("verify");
    require_object(v, "verify");
    require_keys(v, "verify", {"trials", "input_radius", "state_radius"});
    doc.verify.trials = int_or(v, "verify", "trials", doc.verify.trials);
    if (doc.verify.trials < 0) fail("verify.trials", "must be nonnegative");
    if (v.contains("input_radius"))
      doc.verify.input_radius = num_at(v, "verify", "input_radius");
    doc.verify.state_radius = num_or(v, "verify", "state_radius", doc.verify.state_radius);
  }

  return doc;
}

SystemDocument load_document_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot open document file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw Error(ErrorKind::io, "failed reading document file: " + path);
  return load_document(buf.str());
}

ImpulsiveSystem cast_signal(const SystemDocument& doc, std::size_t signal_index) {
  if (!doc.is_switched()) {
    if (signal_index != 0)
      throw Error(ErrorKind::argument, "plain documents have a single system (index 0)");
    return *doc.system;
  }
  if (doc.signals.empty())
    throw Error(ErrorKind::config,
                "the switched document admits a dwell-time class, not concrete signals; nothing "
                "to simulate");
  if (signal_index >= doc.signals.size())
    throw Error(ErrorKind::argument,
                "signal index " + std::to_string(signal_index) + " out of range (document has " +
                    std::to_string(doc.signals.size()) + ")");
  return cast_to_gswl(*doc.switched, doc.signals[signal_index]);
}

}  // namespace impulsive
