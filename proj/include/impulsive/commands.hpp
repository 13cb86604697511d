// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "impulsive/certificates.hpp"
#include "impulsive/linear.hpp"
#include "impulsive/sysdoc.hpp"

namespace impulsive {

/// One derived value in a command's output, with the closed-form expression
/// (or sampling recipe) it came from. Names are unique within a report.
struct NamedConstant {
  std::string name;
  double value = 0.0;
  std::string formula;
};

/// Outcome of one command: the digest of the document it ran against, every
/// derived constant with its formula, the files written, and the exit code
/// the process should return.
struct RunReport {
  std::string command;
  std::string digest;
  std::vector<NamedConstant> constants;
  std::vector<std::string> outputs;  // file paths written
  double wall_seconds = 0.0;
  int exit_code = 0;
  std::string message;  // one-line outcome summary
};

/// Process exit code for a thrown Error: threshold violations and failed
/// envelope fits are 3, finite escapes 1, everything else (schema, config,
/// argument, io, ...) 2. Exit 0 is reserved for a clean pass.
int exit_code_for(const Error& err);

struct SimulateArgs {
  std::optional<double> t0;     // default: the document's start time
  std::optional<double> t_end;  // default: document horizon, else sequence horizon
  std::optional<double> step;   // default: the document's step
  std::optional<Vec> x0;        // default: the document's x0
  std::size_t signal = 0;       // switched documents: index into the signal list
  std::string out_path;         // trajectory CSV; empty writes no file
};

/// Simulates the document's system and writes the trajectory CSV with header
/// `t,x_1..x_n,is_jump,pre_post`; impulse times emit a pre and a post row.
/// Identical (document, args) produce byte-identical files.
RunReport cmd_simulate(const SystemDocument& doc, const SimulateArgs& args, std::ostream& os);

struct CertifyArgs {
  bool fit = false;  // fit the envelope instead of reading the certificate block
  Flavor fit_flavor = Flavor::strong;
  std::optional<double> fit_step;  // transition-matrix step; default: document step
  EnvelopeOptions fit_options;
  std::optional<double> chosenR;
  bool iiss_only = false;     // force the integral variant
  double budget_step = 1e-3;  // slope-budget integration step
  std::string out_path;       // certificate JSON; empty writes no file
};

/// Computes the stability certificate for the document's system or switched
/// family, renders it as text, and optionally writes a machine-readable JSON
/// document. Every derived constant carries exactly one formula string.
RunReport cmd_certify(const SystemDocument& doc, const CertifyArgs& args, std::ostream& os);

struct VerifyArgs {
  std::optional<int> trials;          // default: the document's verify.trials
  std::optional<std::uint64_t> seed;  // default: the document's seed
  std::optional<double> input_radius;  // default: verify.input_radius, else chosenR, else 1
  std::optional<double> state_radius;  // default: the document's verify.state_radius
  std::size_t signal = 0;              // switched documents: which signal to drive
  CertifyArgs certify;                 // how to obtain the certificate
  std::string out_path;                // violations CSV; empty writes no file
};

/// Monte-Carlo check of the certified bound on seeded random trajectories;
/// writes the violations CSV `trial,seed,t,lhs,rhs,margin`. Exit code 1 iff
/// any trial fails; trials = 0 passes with a header-only file.
RunReport cmd_verify(const SystemDocument& doc, const VerifyArgs& args, std::ostream& os);

struct PhiArgs {
  std::optional<double> step;  // default: the document's step
  std::size_t signal = 0;
};

/// Prints the state-transition matrix over (s, t] and its spectral norm;
/// when the document carries a certificate, also the envelope margin
/// K e^{-lambda d} - ||Phi|| with d counted by the certificate's flavor.
RunReport cmd_phi(const SystemDocument& doc, double s, double t, const PhiArgs& args,
                  std::ostream& os);

}  // namespace impulsive
