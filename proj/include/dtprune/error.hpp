// Copyright (c) 2026 the dtprune authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace dtprune {

/// Base class for all toolkit failures.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Filesystem-level failures: missing files, short reads, failed writes.
struct IoError : Error {
  using Error::Error;
};

/// Malformed or unsupported input bytes: bad magic, corrupt PNG, bad JSON,
/// schema/geometry mismatches in trace files.
struct FormatError : Error {
  using Error::Error;
};

/// Contract violations on in-memory arguments (dimension mismatches,
/// out-of-range thresholds, empty inputs).
struct ArgError : Error {
  using Error::Error;
};

}  // namespace dtprune
