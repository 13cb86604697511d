// SPDX-License-Identifier: Apache-2.0
#include "impulsive.h"

#include <cstdlib>
#include <cstring>
#include <initializer_list>
#include <optional>
#include <sstream>
#include <string>

#include <json.hpp>

#include "impulsive/commands.hpp"
#include "impulsive/sysdoc.hpp"
#include "impulsive/types.hpp"

namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;
using impulsive::Error;
using impulsive::ErrorKind;

thread_local std::string g_error;
thread_local imp_status g_status = IMP_OK;

void set_ok() {
  g_error.clear();
  g_status = IMP_OK;
}

imp_status set_failure(imp_status status, const std::string& message) {
  g_error = message;
  g_status = status;
  return status;
}

imp_status status_of(const Error& err) {
  return static_cast<imp_status>(impulsive::exit_code_for(err));
}

// Result strings cross the C boundary, so they are malloc'd for imp_string_free.
char* dup_string(const std::string& text) {
  char* out = static_cast<char*>(std::malloc(text.size() + 1));
  if (out != nullptr) std::memcpy(out, text.c_str(), text.size() + 1);
  return out;
}

json parse_options(const char* options_json) {
  if (options_json == nullptr || *options_json == '\0') return json::object();
  json opts;
  try {
    opts = json::parse(options_json);
  } catch (const json::parse_error& err) {
    throw Error(ErrorKind::argument, std::string("options are not valid JSON: ") + err.what());
  }
  if (!opts.is_object()) throw Error(ErrorKind::argument, "options must be a JSON object");
  return opts;
}

void reject_unknown_keys(const json& opts, const std::string& command,
                         std::initializer_list<const char*> allowed) {
  for (const auto& item : opts.items()) {
    bool known = false;
    for (const char* key : allowed) {
      if (item.key() == key) {
        known = true;
        break;
      }
    }
    if (!known) {
      throw Error(ErrorKind::argument,
                  "unknown key \"" + item.key() + "\" in " + command + " options");
    }
  }
}

std::optional<double> number_option(const json& opts, const char* key) {
  if (!opts.contains(key)) return std::nullopt;
  const json& value = opts.at(key);
  if (!value.is_number()) {
    throw Error(ErrorKind::argument, std::string("option \"") + key + "\" must be a number");
  }
  return value.get<double>();
}

std::optional<bool> bool_option(const json& opts, const char* key) {
  if (!opts.contains(key)) return std::nullopt;
  const json& value = opts.at(key);
  if (!value.is_boolean()) {
    throw Error(ErrorKind::argument, std::string("option \"") + key + "\" must be a boolean");
  }
  return value.get<bool>();
}

std::optional<std::string> string_option(const json& opts, const char* key) {
  if (!opts.contains(key)) return std::nullopt;
  const json& value = opts.at(key);
  if (!value.is_string()) {
    throw Error(ErrorKind::argument, std::string("option \"") + key + "\" must be a string");
  }
  return value.get<std::string>();
}

std::optional<std::size_t> index_option(const json& opts, const char* key) {
  if (!opts.contains(key)) return std::nullopt;
  const json& value = opts.at(key);
  if (!value.is_number_unsigned()) {
    throw Error(ErrorKind::argument,
                std::string("option \"") + key + "\" must be a nonnegative integer");
  }
  return value.get<std::size_t>();
}

std::optional<int> int_option(const json& opts, const char* key) {
  if (!opts.contains(key)) return std::nullopt;
  const json& value = opts.at(key);
  if (!value.is_number_integer()) {
    throw Error(ErrorKind::argument, std::string("option \"") + key + "\" must be an integer");
  }
  return value.get<int>();
}

std::optional<std::uint64_t> seed_option(const json& opts, const char* key) {
  if (!opts.contains(key)) return std::nullopt;
  const json& value = opts.at(key);
  if (!value.is_number_unsigned()) {
    throw Error(ErrorKind::argument,
                std::string("option \"") + key + "\" must be a nonnegative integer");
  }
  return value.get<std::uint64_t>();
}

std::optional<impulsive::Vec> vector_option(const json& opts, const char* key) {
  if (!opts.contains(key)) return std::nullopt;
  const json& value = opts.at(key);
  if (!value.is_array() || value.empty()) {
    throw Error(ErrorKind::argument,
                std::string("option \"") + key + "\" must be a nonempty number array");
  }
  impulsive::Vec out(static_cast<Eigen::Index>(value.size()));
  for (std::size_t i = 0; i < value.size(); ++i) {
    if (!value[i].is_number()) {
      throw Error(ErrorKind::argument,
                  std::string("option \"") + key + "\" must be a nonempty number array");
    }
    out[static_cast<Eigen::Index>(i)] = value[i].get<double>();
  }
  return out;
}

impulsive::CertifyArgs parse_certify_options(const json& opts, const std::string& command) {
  reject_unknown_keys(opts, command,
                      {"fit", "flavor", "fit_step", "k_cap", "lambda_lo", "lambda_hi",
                       "lambda_points", "chosenR", "iiss", "budget_step", "out"});
  impulsive::CertifyArgs args;
  args.fit = bool_option(opts, "fit").value_or(false);
  if (auto flavor = string_option(opts, "flavor")) {
    if (*flavor == "strong") {
      args.fit_flavor = impulsive::Flavor::strong;
    } else if (*flavor == "weak") {
      args.fit_flavor = impulsive::Flavor::weak;
    } else {
      throw Error(ErrorKind::argument, "option \"flavor\" must be \"strong\" or \"weak\"");
    }
  }
  args.fit_step = number_option(opts, "fit_step");
  if (auto value = number_option(opts, "k_cap")) args.fit_options.k_cap = *value;
  if (auto value = number_option(opts, "lambda_lo")) args.fit_options.lambda_lo = *value;
  if (auto value = number_option(opts, "lambda_hi")) args.fit_options.lambda_hi = *value;
  if (auto value = int_option(opts, "lambda_points")) {
    if (*value < 2) throw Error(ErrorKind::argument, "option \"lambda_points\" must be at least 2");
    args.fit_options.lambda_points = static_cast<std::size_t>(*value);
  }
  args.chosenR = number_option(opts, "chosenR");
  args.iiss_only = bool_option(opts, "iiss").value_or(false);
  if (auto value = number_option(opts, "budget_step")) args.budget_step = *value;
  args.out_path = string_option(opts, "out").value_or("");
  return args;
}

ordered_json result_json_of(const impulsive::RunReport& report, const std::string& text) {
  ordered_json out;
  out["command"] = report.command;
  out["digest"] = report.digest;
  out["exit_code"] = report.exit_code;
  out["message"] = report.message;
  out["wall_seconds"] = report.wall_seconds;
  out["outputs"] = report.outputs;
  ordered_json constants = ordered_json::array();
  for (const auto& constant : report.constants) {
    constants.push_back(ordered_json{
        {"name", constant.name}, {"value", constant.value}, {"formula", constant.formula}});
  }
  out["constants"] = constants;
  out["text"] = text;
  return out;
}

template <typename Command>
imp_status run_guarded(const imp_system* sys, const char* options_json, char** result_json,
                       Command&& command) {
  if (result_json != nullptr) *result_json = nullptr;
  if (sys == nullptr) return set_failure(IMP_E_CONFIG, "null system handle");
  if (result_json == nullptr) return set_failure(IMP_E_CONFIG, "null result pointer");
  try {
    json opts = parse_options(options_json);
    std::ostringstream text;
    impulsive::RunReport report = command(opts, text);
    std::string payload = result_json_of(report, text.str()).dump(2) + "\n";
    *result_json = dup_string(payload);
    if (*result_json == nullptr) return set_failure(IMP_E_CONFIG, "out of memory");
    if (report.exit_code == 0) {
      set_ok();
    } else {
      set_failure(static_cast<imp_status>(report.exit_code), report.message);
    }
    return static_cast<imp_status>(report.exit_code);
  } catch (const Error& err) {
    return set_failure(status_of(err), err.what());
  } catch (const std::exception& err) {
    return set_failure(IMP_E_CONFIG, std::string("internal error: ") + err.what());
  }
}

}  // namespace

struct imp_system {
  impulsive::SystemDocument doc;
};

extern "C" {

imp_system* imp_load_string(const char* text) {
  if (text == nullptr) {
    set_failure(IMP_E_CONFIG, "null document text");
    return nullptr;
  }
  try {
    auto* sys = new imp_system{impulsive::load_document(text)};
    set_ok();
    return sys;
  } catch (const Error& err) {
    set_failure(status_of(err), err.what());
  } catch (const std::exception& err) {
    set_failure(IMP_E_CONFIG, err.what());
  }
  return nullptr;
}

imp_system* imp_load_file(const char* path) {
  if (path == nullptr) {
    set_failure(IMP_E_CONFIG, "null document path");
    return nullptr;
  }
  try {
    auto* sys = new imp_system{impulsive::load_document_file(path)};
    set_ok();
    return sys;
  } catch (const Error& err) {
    set_failure(status_of(err), err.what());
  } catch (const std::exception& err) {
    set_failure(IMP_E_CONFIG, err.what());
  }
  return nullptr;
}

void imp_system_free(imp_system* sys) { delete sys; }

const char* imp_last_error(void) { return g_error.c_str(); }

imp_status imp_last_status(void) { return g_status; }

const char* imp_version(void) { return "0.1.0"; }

void imp_string_free(char* s) { std::free(s); }

imp_status imp_simulate(const imp_system* sys, const char* options_json, char** result_json) {
  return run_guarded(sys, options_json, result_json, [&](const json& opts, std::ostream& text) {
    reject_unknown_keys(opts, "simulate", {"t0", "t_end", "step", "x0", "signal", "out"});
    impulsive::SimulateArgs args;
    args.t0 = number_option(opts, "t0");
    args.t_end = number_option(opts, "t_end");
    args.step = number_option(opts, "step");
    args.x0 = vector_option(opts, "x0");
    if (auto signal = index_option(opts, "signal")) args.signal = *signal;
    args.out_path = string_option(opts, "out").value_or("");
    return impulsive::cmd_simulate(sys->doc, args, text);
  });
}

imp_status imp_certify(const imp_system* sys, const char* options_json, char** result_json) {
  return run_guarded(sys, options_json, result_json, [&](const json& opts, std::ostream& text) {
    impulsive::CertifyArgs args = parse_certify_options(opts, "certify");
    return impulsive::cmd_certify(sys->doc, args, text);
  });
}

imp_status imp_verify(const imp_system* sys, const char* options_json, char** result_json) {
  return run_guarded(sys, options_json, result_json, [&](const json& opts, std::ostream& text) {
    reject_unknown_keys(opts, "verify",
                        {"trials", "seed", "input_radius", "state_radius", "signal", "out",
                         "certify"});
    impulsive::VerifyArgs args;
    args.trials = int_option(opts, "trials");
    args.seed = seed_option(opts, "seed");
    args.input_radius = number_option(opts, "input_radius");
    args.state_radius = number_option(opts, "state_radius");
    if (auto signal = index_option(opts, "signal")) args.signal = *signal;
    args.out_path = string_option(opts, "out").value_or("");
    if (opts.contains("certify")) {
      const json& nested = opts.at("certify");
      if (!nested.is_object()) {
        throw Error(ErrorKind::argument, "option \"certify\" must be a JSON object");
      }
      args.certify = parse_certify_options(nested, "verify.certify");
    }
    return impulsive::cmd_verify(sys->doc, args, text);
  });
}

imp_status imp_phi(const imp_system* sys, double s, double t, const char* options_json,
                   char** result_json) {
  return run_guarded(sys, options_json, result_json, [&](const json& opts, std::ostream& text) {
    reject_unknown_keys(opts, "phi", {"step", "signal"});
    impulsive::PhiArgs args;
    args.step = number_option(opts, "step");
    if (auto signal = index_option(opts, "signal")) args.signal = *signal;
    return impulsive::cmd_phi(sys->doc, s, t, args, text);
  });
}

}  // extern "C"
