// Copyright (c) 2026, the Marsit authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace marsit {

// Invalid argument supplied by the caller (bad dimension, zero stepsize, ...).
class parameter_error : public std::invalid_argument {
public:
    explicit parameter_error(const std::string& what) : std::invalid_argument(what) {}
};

// A value that must be finite is NaN or infinite.  Kept separate from
// parameter_error so a training loop can treat it as divergence rather than
// as a programming mistake.
class non_finite_error : public parameter_error {
public:
    explicit non_finite_error(const std::string& what) : parameter_error(what) {}
};

// Two communicating endpoints disagree about the wire contract
// (mismatched lengths, malformed schedule, broken consensus).
class protocol_error : public std::runtime_error {
public:
    explicit protocol_error(const std::string& what) : std::runtime_error(what) {}
};

// The requested combination is valid in principle but not implemented
// (e.g. a cascading chain over a non-ring schedule).
class unsupported_error : public std::runtime_error {
public:
    explicit unsupported_error(const std::string& what) : std::runtime_error(what) {}
};

// Malformed external input (CSV rows, JSON config files).
class parse_error : public std::runtime_error {
public:
    explicit parse_error(const std::string& what) : std::runtime_error(what) {}
};

} // namespace marsit
