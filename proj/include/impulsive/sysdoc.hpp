// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "impulsive/switched.hpp"
#include "impulsive/system.hpp"
#include "impulsive/timebase.hpp"
#include "impulsive/types.hpp"

namespace impulsive {

/// Verification defaults carried by a document's "verify" block.
struct VerifyDefaults {
  int trials = 50;
  std::optional<double> input_radius;  // defaults to the certified radius
  double state_radius = 1.0;
};

/// A parsed and validated system document (JSON on disk). Plain documents
/// carry a finalized ImpulsiveSystem; switched documents carry the family
/// plus either an explicit signal list or a dwell-time class. Every block is
/// schema-checked with unknown keys rejected; schema errors name the field
/// path. The full grammar is documented in the README.
struct SystemDocument {
  int n = 0;
  int m = 0;
  std::optional<ImpulsiveSystem> system;  // absent iff the document is switched
  std::optional<SwitchedSystem> switched;
  std::vector<SwitchingSignal> signals;
  std::optional<DwellClass> switched_dwell;
  std::optional<Certificate> certificate;
  std::optional<DwellClass> dwell;
  double t0 = 0.0;
  std::optional<Vec> x0;
  InputSignal input;  // zero when the document gives none
  SimulateOptions sim;
  std::optional<double> horizon;  // default end time for simulation commands
  unsigned seed = 0;
  VerifyDefaults verify;
  std::string digest;  // content hash of the source text

  bool is_switched() const noexcept { return switched.has_value(); }
};

/// Parse a document from JSON text. Throws schema errors naming the offending
/// field; configuration errors from system assembly pass through.
SystemDocument load_document(const std::string& text);

/// Read and parse a document file; IO failures raise io errors.
SystemDocument load_document_file(const std::string& path);

/// FNV-1a 64-bit hash of the text, as 16 lowercase hex digits.
std::string content_digest(const std::string& text);

/// The impulsive system carved out of a switched document by one of its
/// signals. Plain documents return their system for index 0.
ImpulsiveSystem cast_signal(const SystemDocument& doc, std::size_t signal_index);

}  // namespace impulsive
