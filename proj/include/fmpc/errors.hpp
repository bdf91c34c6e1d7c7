/*
 Copyright 2026 The fmpc Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/
#ifndef FMPC_ERRORS_HPP
#define FMPC_ERRORS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fmpc {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A funnel design inequality does not hold. `index` is zero-based.
class ParamViolation : public Error {
public:
    ParamViolation(std::size_t index, std::string rule)
        : Error("funnel parameter violation at index " + std::to_string(index) + ": " + rule),
          index_(index), rule_(std::move(rule)) {}

    std::size_t index() const noexcept { return index_; }
    const std::string& rule() const noexcept { return rule_; }

private:
    std::size_t index_;
    std::string rule_;
};

class IntegrationFailure : public Error {
public:
    using Error::Error;
};

/// Step size collapsed, usually because the solution blew up.
class StepSizeUnderflow : public IntegrationFailure {
public:
    using IntegrationFailure::IntegrationFailure;
};

class OutOfHorizon : public Error {
public:
    using Error::Error;
};

class CoverageError : public Error {
public:
    using Error::Error;
};

class DimensionMismatch : public Error {
public:
    using Error::Error;
};

class SingularMassMatrix : public Error {
public:
    using Error::Error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// The measured state is outside the epsilon-shrunk funnel set.
class InfeasibleStart : public Error {
public:
    InfeasibleStart(double t, const std::string& what) : Error(what), t_(t) {}
    double time() const noexcept { return t_; }

private:
    double t_;
};

/// No finite-cost, terminal-feasible control was found after all restarts.
class NoFeasiblePoint : public Error {
public:
    NoFeasiblePoint(double t_hat, const std::string& what) : Error(what), t_hat_(t_hat) {}
    double t_hat() const noexcept { return t_hat_; }

private:
    double t_hat_;
};

/// The error chain left its funnel; the funnel feedback is undefined there.
class SaturatedChain : public Error {
public:
    SaturatedChain(double t, std::size_t index)
        : Error("error chain saturated at t=" + std::to_string(t) + ", index " + std::to_string(index)),
          t_(t), index_(index) {}
    double time() const noexcept { return t_; }
    std::size_t index() const noexcept { return index_; }

private:
    double t_;
    std::size_t index_;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace fmpc

#endif  // FMPC_ERRORS_HPP
