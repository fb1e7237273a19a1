// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace relaylab {

/// Input outside the model's domain (bad parameter, invalid scheme, ...).
class ParameterError : public std::invalid_argument
{
  public:
    using std::invalid_argument::invalid_argument;
};

/// UE and relay coincide, so the access-link SNR is undefined.
class DegenerateGeometry : public ParameterError
{
  public:
    using ParameterError::ParameterError;
};

/// A numerical routine could not deliver the requested accuracy.
class NumericError : public std::runtime_error
{
  public:
    enum class Kind
    {
        BudgetExhausted,
        NonFinite,
        NonConvergence,
    };

    NumericError(Kind kind, const std::string &what) : std::runtime_error(what), kind_(kind) {}

    Kind kind() const noexcept { return kind_; }

  private:
    Kind kind_;
};

/// Malformed or inconsistent experiment configuration.
class ConfigError : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

} // namespace relaylab
