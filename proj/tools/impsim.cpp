// SPDX-License-Identifier: Apache-2.0
//
// impsim: command-line front end over the shared C API. Builds an options
// JSON object from the flags the user actually passed, so library defaults
// apply everywhere else, and prints the rendered "text" field of the result.
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "impulsive.h"

namespace {

using json = nlohmann::json;

// Relative paths that do not exist locally are retried under the directory
// named by IMPSIM_CONFIG_DIR before the loader reports the io error.
std::string resolve_document(const std::string& path) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (fs::exists(path, ec)) return path;
  if (!fs::path(path).is_absolute()) {
    if (const char* dir = std::getenv("IMPSIM_CONFIG_DIR")) {
      fs::path candidate = fs::path(dir) / path;
      if (fs::exists(candidate, ec)) return candidate.string();
    }
  }
  return path;
}

int report_result(imp_status status, char* result) {
  if (result == nullptr) {
    std::cerr << "error: " << imp_last_error() << "\n";
    return static_cast<int>(status);
  }
  try {
    json parsed = json::parse(result);
    std::cout << parsed.at("text").get<std::string>();
  } catch (const std::exception& err) {
    imp_string_free(result);
    std::cerr << "error: unreadable result: " << err.what() << "\n";
    return static_cast<int>(IMP_E_CONFIG);
  }
  imp_string_free(result);
  return static_cast<int>(status);
}

template <typename Command>
int run_command(const std::string& doc_path, const json& options, Command&& command) {
  imp_system* sys = imp_load_file(resolve_document(doc_path).c_str());
  if (sys == nullptr) {
    std::cerr << "error: " << imp_last_error() << "\n";
    return static_cast<int>(imp_last_status());
  }
  char* result = nullptr;
  const std::string dumped = options.dump();
  imp_status status = command(sys, dumped.c_str(), &result);
  imp_system_free(sys);
  return report_result(status, result);
}

struct CertifyFlags {
  bool fit = false;
  std::string flavor;
  double fit_step = 0.0;
  double k_cap = 0.0;
  double lambda_lo = 0.0;
  double lambda_hi = 0.0;
  int lambda_points = 0;
  double chosenR = 0.0;
  bool iiss = false;
  double budget_step = 0.0;

  void attach(CLI::App* cmd) {
    cmd->add_flag("--fit", fit, "estimate the envelope from sampled transition pairs");
    cmd->add_option("--flavor", flavor, "fitted envelope flavor: strong or weak")
        ->check(CLI::IsMember({"strong", "weak"}));
    cmd->add_option("--fit-step", fit_step, "integration step for envelope sampling");
    cmd->add_option("--k-cap", k_cap, "upper bound accepted for the fitted K");
    cmd->add_option("--lambda-lo", lambda_lo, "lower end of the fitted decay-rate grid");
    cmd->add_option("--lambda-hi", lambda_hi, "upper end of the fitted decay-rate grid");
    cmd->add_option("--lambda-points", lambda_points, "grid resolution for the fitted decay rate");
    cmd->add_option("--chosenR", chosenR, "operating radius for the small-input certificate");
    cmd->add_flag("--iiss", iiss, "force the integral-form certificate");
    cmd->add_option("--budget-step", budget_step, "quadrature step for perturbation budgets");
  }

  json collect(const CLI::App* cmd) const {
    json out = json::object();
    if (cmd->count("--fit") > 0) out["fit"] = fit;
    if (cmd->count("--flavor") > 0) out["flavor"] = flavor;
    if (cmd->count("--fit-step") > 0) out["fit_step"] = fit_step;
    if (cmd->count("--k-cap") > 0) out["k_cap"] = k_cap;
    if (cmd->count("--lambda-lo") > 0) out["lambda_lo"] = lambda_lo;
    if (cmd->count("--lambda-hi") > 0) out["lambda_hi"] = lambda_hi;
    if (cmd->count("--lambda-points") > 0) out["lambda_points"] = lambda_points;
    if (cmd->count("--chosenR") > 0) out["chosenR"] = chosenR;
    if (cmd->count("--iiss") > 0) out["iiss"] = iiss;
    if (cmd->count("--budget-step") > 0) out["budget_step"] = budget_step;
    return out;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"impulsive-system simulator and certificate checker"};
  app.set_version_flag("--version", imp_version());
  app.require_subcommand(1);
  int rc = 0;

  auto* sim = app.add_subcommand("simulate", "integrate the system and write a trajectory CSV");
  std::string sim_doc;
  double sim_t0 = 0.0, sim_horizon = 0.0, sim_step = 0.0;
  std::vector<double> sim_x0;
  std::size_t sim_signal = 0;
  std::string sim_out;
  sim->add_option("doc", sim_doc, "system document (JSON)")->required();
  sim->add_option("--t0", sim_t0, "override the start time");
  sim->add_option("--horizon", sim_horizon, "override the end time");
  sim->add_option("--step", sim_step, "override the integration step");
  sim->add_option("--x0", sim_x0, "override the initial state (comma-separated)")
      ->delimiter(',');
  sim->add_option("--signal", sim_signal, "switching-signal index (switched documents)");
  sim->add_option("--out", sim_out, "trajectory CSV path");
  sim->callback([&] {
    json opts = json::object();
    if (sim->count("--t0") > 0) opts["t0"] = sim_t0;
    if (sim->count("--horizon") > 0) opts["t_end"] = sim_horizon;
    if (sim->count("--step") > 0) opts["step"] = sim_step;
    if (sim->count("--x0") > 0) opts["x0"] = sim_x0;
    if (sim->count("--signal") > 0) opts["signal"] = sim_signal;
    if (sim->count("--out") > 0) opts["out"] = sim_out;
    rc = run_command(sim_doc, opts, imp_simulate);
  });

  auto* cert = app.add_subcommand("certify", "compute stability certificates for the document");
  std::string cert_doc;
  std::string cert_out;
  CertifyFlags cert_flags;
  cert->add_option("doc", cert_doc, "system document (JSON)")->required();
  cert_flags.attach(cert);
  cert->add_option("--out", cert_out, "certificate JSON path");
  cert->callback([&] {
    json opts = cert_flags.collect(cert);
    if (cert->count("--out") > 0) opts["out"] = cert_out;
    rc = run_command(cert_doc, opts, imp_certify);
  });

  auto* ver = app.add_subcommand("verify", "check certified bounds against sampled trajectories");
  std::string ver_doc;
  int ver_trials = 0;
  std::uint64_t ver_seed = 0;
  double ver_input_radius = 0.0, ver_state_radius = 0.0;
  std::size_t ver_signal = 0;
  std::string ver_out, ver_cert_out;
  CertifyFlags ver_flags;
  ver->add_option("doc", ver_doc, "system document (JSON)")->required();
  ver->add_option("--trials", ver_trials, "number of Monte-Carlo trials");
  ver->add_option("--seed", ver_seed, "master seed for trial generation");
  ver->add_option("--input-radius", ver_input_radius, "sup-norm radius of sampled inputs");
  ver->add_option("--state-radius", ver_state_radius, "radius of sampled initial states");
  ver->add_option("--signal", ver_signal, "switching-signal index (switched documents)");
  ver_flags.attach(ver);
  ver->add_option("--out", ver_out, "violations CSV path");
  ver->add_option("--cert-out", ver_cert_out, "also write the certificate JSON here");
  ver->callback([&] {
    json opts = json::object();
    if (ver->count("--trials") > 0) opts["trials"] = ver_trials;
    if (ver->count("--seed") > 0) opts["seed"] = ver_seed;
    if (ver->count("--input-radius") > 0) opts["input_radius"] = ver_input_radius;
    if (ver->count("--state-radius") > 0) opts["state_radius"] = ver_state_radius;
    if (ver->count("--signal") > 0) opts["signal"] = ver_signal;
    if (ver->count("--out") > 0) opts["out"] = ver_out;
    json nested = ver_flags.collect(ver);
    if (ver->count("--cert-out") > 0) nested["out"] = ver_cert_out;
    if (!nested.empty()) opts["certify"] = nested;
    rc = run_command(ver_doc, opts, imp_verify);
  });

  auto* phi = app.add_subcommand("phi", "print the transition matrix over (s, t]");
  std::string phi_doc;
  double phi_s = 0.0, phi_t = 0.0, phi_step = 0.0;
  std::size_t phi_signal = 0;
  phi->add_option("doc", phi_doc, "system document (JSON)")->required();
  phi->add_option("s", phi_s, "interval start")->required();
  phi->add_option("t", phi_t, "interval end")->required();
  phi->add_option("--step", phi_step, "override the integration step");
  phi->add_option("--signal", phi_signal, "switching-signal index (switched documents)");
  phi->callback([&] {
    json opts = json::object();
    if (phi->count("--step") > 0) opts["step"] = phi_step;
    if (phi->count("--signal") > 0) opts["signal"] = phi_signal;
    rc = run_command(phi_doc, opts,
                     [&](const imp_system* sys, const char* options, char** result) {
                       return imp_phi(sys, phi_s, phi_t, options, result);
                     });
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : 2;
  }
  return rc;
}
