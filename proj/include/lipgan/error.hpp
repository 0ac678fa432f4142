// Copyright 2026 The LipGAN Lab Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef LIPGAN_ERROR_HPP
#define LIPGAN_ERROR_HPP

#include <stdexcept>
#include <string>

namespace lipgan {

// Root of every error thrown by the library. The subclasses map one-to-one
// onto the failure categories the CLI turns into exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Violated precondition of an operation (empty batch, non-scalar output...).
class ContractError : public Error {
 public:
  using Error::Error;
};

// Incompatible operand shapes. The message names the offending node.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Argument outside the mathematical domain (log of a negative, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

// An operation produced NaN or infinity.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Differentiation requested through an operation without a derivative rule.
class UnsupportedOpError : public Error {
 public:
  using Error::Error;
};

// Invalid or inconsistent configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Problem larger than the exact solvers accept.
class CapacityError : public Error {
 public:
  using Error::Error;
};

// A minimization problem has no attained minimum.
class UnboundedError : public Error {
 public:
  using Error::Error;
};

}  // namespace lipgan

#endif  // LIPGAN_ERROR_HPP
