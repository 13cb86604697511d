// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "impulsive.h"

using json = nlohmann::json;

namespace {

const char* kCertDoc = R"({
  "dim": 1,
  "input_dim": 1,
  "flow": { "linear_plus": { "A": [[-1.0]] } },
  "jump": { "linear_plus": { "R": [[0.5]] } },
  "impulses": { "periodic": { "period": 1.0, "offset": 1.0, "horizon": 10.0 } },
  "bound": { "Nbar": 0.1, "M": 1.0, "c": 1.0, "eta": "identity" },
  "certificate": { "K": 1.0, "lambda": 1.0, "flavor": "strong" }
})";

const char* kCertDocBad = R"({
  "dim": 1,
  "input_dim": 1,
  "flow": { "linear_plus": { "A": [[-1.0]] } },
  "jump": { "linear_plus": { "R": [[0.5]] } },
  "impulses": { "periodic": { "period": 1.0, "offset": 1.0, "horizon": 10.0 } },
  "bound": { "Nbar": 0.4, "M": 1.0, "c": 1.0, "eta": "identity" },
  "certificate": { "K": 1.0, "lambda": 1.0, "flavor": "strong" }
})";

const char* kNominalDoc = R"({
  "dim": 1,
  "input_dim": 1,
  "flow": { "expr": ["-x[0]"] },
  "jump": { "expr": ["x[0]"] },
  "impulses": { "harmonic": { "k_max": 20 } },
  "simulation": { "t0": 1.0, "x0": [1.0] }
})";

// Bound block understates the true input gain, so trajectories escape the
// certified envelope and verification must fail.
const char* kLyingDoc = R"({
  "dim": 1,
  "input_dim": 1,
  "flow": { "linear_plus": { "A": [[-1.0]], "phi": ["0.5*u[0]*x[0] + u[0]"] } },
  "jump": { "linear_plus": { "R": [[0.5]], "psi": ["u[0]"] } },
  "impulses": { "periodic": { "period": 1.0, "offset": 1.0, "horizon": 10.0 } },
  "bound": { "Nbar": 0.0, "M": 0.01, "c": 0.01, "eta": "identity" },
  "certificate": { "K": 1.0, "lambda": 0.9, "flavor": "strong" },
  "simulation": { "x0": [1.0] },
  "seed": 20260817
})";

const char* kScalarDeskCert = R"({
  "dim": 1,
  "input_dim": 1,
  "flow": { "linear_plus": { "A": [[-1.0]] } },
  "jump": { "linear_plus": { "R": [[0.5]] } },
  "impulses": { "times": [1.0, 2.0], "horizon": 3.0 },
  "certificate": { "K": 1.05, "lambda": 0.5, "flavor": "strong" },
  "simulation": { "x0": [1.0], "horizon": 2.5 }
})";

struct SystemGuard {
  imp_system* sys = nullptr;
  explicit SystemGuard(const char* text) : sys(imp_load_string(text)) {}
  ~SystemGuard() { imp_system_free(sys); }
  SystemGuard(const SystemGuard&) = delete;
  SystemGuard& operator=(const SystemGuard&) = delete;
};

struct ResultGuard {
  char* text = nullptr;
  ~ResultGuard() { imp_string_free(text); }
};

json parse_result(const char* text) {
  REQUIRE(text != nullptr);
  return json::parse(text);
}

double constant_value(const json& result, const std::string& name) {
  for (const auto& entry : result.at("constants")) {
    if (entry.at("name").get<std::string>() == name) {
      CHECK(entry.at("formula").is_string());
      return entry.at("value").get<double>();
    }
  }
  FAIL("constant not found: ", name);
  return 0.0;
}

}  // namespace

TEST_SUITE("capi") {

TEST_CASE("version string is present") {
  const char* version = imp_version();
  REQUIRE(version != nullptr);
  CHECK(std::string(version).find('.') != std::string::npos);
}

TEST_CASE("certify over the C boundary reproduces the worked constants") {
  SystemGuard doc(kCertDoc);
  REQUIRE(doc.sys != nullptr);
  CHECK(imp_last_status() == IMP_OK);
  CHECK(std::string(imp_last_error()).empty());

  ResultGuard out;
  REQUIRE(imp_certify(doc.sys, "{}", &out.text) == IMP_OK);
  json result = parse_result(out.text);

  CHECK(result.at("command").get<std::string>() == "certify");
  CHECK(result.at("exit_code").get<int>() == 0);
  CHECK(result.at("wall_seconds").get<double>() >= 0.0);
  const std::string digest = result.at("digest").get<std::string>();
  REQUIRE(digest.size() == 16);
  for (char c : digest) CHECK(std::isxdigit(static_cast<unsigned char>(c)));

  const double e = std::exp(1.0);
  CHECK(constant_value(result, "hatLambda") ==
        doctest::Approx(1.0 - 0.1 * e).epsilon(1e-12));
  CHECK(constant_value(result, "Rmax") ==
        doctest::Approx(1.0 / e - 0.1).epsilon(1e-12));
  CHECK(constant_value(result, "chosenR") ==
        doctest::Approx(0.9 * (1.0 / e - 0.1)).epsilon(1e-12));

  const std::string text = result.at("text").get<std::string>();
  CHECK(text.find("small-input") != std::string::npos);
  CHECK(text.find("Rmax") != std::string::npos);
}

TEST_CASE("null handles, bad documents, and bad options report config status") {
  CHECK(imp_load_string("{ not json") == nullptr);
  CHECK(imp_last_status() == IMP_E_CONFIG);
  CHECK(!std::string(imp_last_error()).empty());

  CHECK(imp_load_string(nullptr) == nullptr);
  CHECK(imp_last_status() == IMP_E_CONFIG);

  CHECK(imp_load_file("/nonexistent/impsim/doc.json") == nullptr);
  CHECK(imp_last_status() == IMP_E_CONFIG);

  ResultGuard out;
  CHECK(imp_certify(nullptr, "{}", &out.text) == IMP_E_CONFIG);
  CHECK(out.text == nullptr);
  CHECK(std::string(imp_last_error()) == "null system handle");

  SystemGuard doc(kCertDoc);
  REQUIRE(doc.sys != nullptr);
  CHECK(imp_certify(doc.sys, "{}", nullptr) == IMP_E_CONFIG);

  CHECK(imp_certify(doc.sys, R"({"bogus": 1})", &out.text) == IMP_E_CONFIG);
  CHECK(out.text == nullptr);
  CHECK(std::string(imp_last_error()).find("unknown key \"bogus\"") != std::string::npos);

  CHECK(imp_certify(doc.sys, "not json", &out.text) == IMP_E_CONFIG);
  CHECK(std::string(imp_last_error()).find("not valid JSON") != std::string::npos);

  CHECK(imp_certify(doc.sys, "[1, 2]", &out.text) == IMP_E_CONFIG);
  CHECK(std::string(imp_last_error()).find("JSON object") != std::string::npos);

  CHECK(imp_simulate(doc.sys, R"({"x0": "one"})", &out.text) == IMP_E_CONFIG);
  CHECK(std::string(imp_last_error()).find("x0") != std::string::npos);

  CHECK(imp_verify(doc.sys, R"({"certify": {"flavor": "mild"}})", &out.text) == IMP_E_CONFIG);
  CHECK(std::string(imp_last_error()).find("flavor") != std::string::npos);

  imp_string_free(nullptr);
  imp_system_free(nullptr);
}

TEST_CASE("threshold violations surface as status 3 with the admissible slope") {
  SystemGuard doc(kCertDocBad);
  REQUIRE(doc.sys != nullptr);
  ResultGuard out;
  CHECK(imp_certify(doc.sys, "{}", &out.text) == IMP_E_THRESHOLD);
  CHECK(out.text == nullptr);
  CHECK(imp_last_status() == IMP_E_THRESHOLD);
  CHECK(std::string(imp_last_error()).find("0.367879") != std::string::npos);
}

TEST_CASE("simulate writes the trajectory file named in the options") {
  SystemGuard doc(kNominalDoc);
  REQUIRE(doc.sys != nullptr);
  const std::string path = "/tmp/impsim_capi_traj.csv";
  std::remove(path.c_str());

  ResultGuard out;
  const std::string opts = std::string(R"({"out": ")") + path + "\"}";
  REQUIRE(imp_simulate(doc.sys, opts.c_str(), &out.text) == IMP_OK);
  json result = parse_result(out.text);

  REQUIRE(result.at("outputs").size() == 1);
  CHECK(result.at("outputs")[0].get<std::string>() == path);
  CHECK(result.at("text").get<std::string>().find("simulate:") != std::string::npos);
  CHECK(constant_value(result, "final_norm") > 0.0);

  std::ifstream in(path);
  REQUIRE(in.good());
  std::string header;
  std::getline(in, header);
  CHECK(header == "t,x_1,is_jump,pre_post");
}

TEST_CASE("a failed verification returns status 1 together with the result") {
  SystemGuard doc(kLyingDoc);
  REQUIRE(doc.sys != nullptr);
  ResultGuard out;
  CHECK(imp_verify(doc.sys, R"({"trials": 20})", &out.text) == IMP_E_VERIFICATION);
  CHECK(imp_last_status() == IMP_E_VERIFICATION);
  json result = parse_result(out.text);
  CHECK(result.at("exit_code").get<int>() == 1);
  CHECK(constant_value(result, "pass_rate") < 1.0);
  CHECK(result.at("text").get<std::string>().find("violation") != std::string::npos);
}

TEST_CASE("phi accepts NULL options and reports the transition norm") {
  SystemGuard doc(kScalarDeskCert);
  REQUIRE(doc.sys != nullptr);
  ResultGuard out;
  REQUIRE(imp_phi(doc.sys, 0.0, 2.5, nullptr, &out.text) == IMP_OK);
  json result = parse_result(out.text);
  CHECK(constant_value(result, "phi_norm") ==
        doctest::Approx(0.25 * std::exp(-2.5)).epsilon(1e-7));
  CHECK(result.at("text").get<std::string>().find("envelope margin") != std::string::npos);
}

}
