// Copyright Contributors to the splatstyle Project
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include <stdexcept>
#include <string>

namespace splatstyle {

/// Root of every error the library throws on bad input or failed I/O.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Array shapes that cannot be combined by the requested operation.
class ShapeError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

/// A file was readable but its contents do not follow the expected layout.
class FormatError : public Error {
public:
    using Error::Error;
};

/// Well-formed data that violates a domain invariant (non-rigid pose, bad weight shape, ...).
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Unusable run configuration: missing inputs, empty datasets, out-of-range knobs.
class ConfigError : public Error {
public:
    using Error::Error;
};

} // namespace splatstyle
