/*
 * Prior-Knowledge Brain Tumor Segmentation Toolkit (pbts)
 *
 * Copyright 2026 The pbts Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef PBTS_ERRORS_HPP
#define PBTS_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace pbts {

/// Base class for all toolkit errors.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Bad user input: missing modalities, grid mismatches, malformed files,
/// invalid parameter values. Maps to exit code 2 in the CLI.
class InputError : public Error {
public:
  explicit InputError(const std::string& msg) : Error(msg) {}
};

/// A pipeline stage failed on otherwise valid input (e.g. no tumor core
/// found). Carries the stage name. Maps to exit code 3 in the CLI.
class StageError : public Error {
public:
  StageError(std::string stage, const std::string& msg)
      : Error("[" + stage + "] " + msg), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

private:
  std::string stage_;
};

} // namespace pbts

#endif
