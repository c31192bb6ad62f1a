// Copyright 2026 The camnorm Authors.
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

#ifndef CAMNORM_ERROR_HPP_
#define CAMNORM_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace camnorm {

// Root of every error thrown by the library. The CLI maps the category onto
// its exit code.
class Error : public std::runtime_error {
 public:
  enum class Category { kConfig, kContract, kIo };

  Error(Category category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  Category category() const { return category_; }

 private:
  Category category_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what)
      : Error(Category::kConfig, "config error: " + what) {}
};

class ContractViolation : public Error {
 public:
  explicit ContractViolation(const std::string& what)
      : Error(Category::kContract, what) {}
};

class DimensionError : public ContractViolation {
 public:
  explicit DimensionError(const std::string& what)
      : ContractViolation("dimension error: " + what) {}
};

class EmptyGroupError : public ContractViolation {
 public:
  explicit EmptyGroupError(const std::string& what)
      : ContractViolation("empty group: " + what) {}
};

class StatsMissingError : public ContractViolation {
 public:
  explicit StatsMissingError(const std::string& what)
      : ContractViolation("stats missing: " + what) {}
};

class LabelError : public ContractViolation {
 public:
  explicit LabelError(const std::string& what)
      : ContractViolation("label error: " + what) {}
};

class SamplingError : public ContractViolation {
 public:
  explicit SamplingError(const std::string& what)
      : ContractViolation("sampling error: " + what) {}
};

class DataIntegrityError : public ContractViolation {
 public:
  explicit DataIntegrityError(const std::string& what)
      : ContractViolation("data integrity: " + what) {}
};

class NumericError : public ContractViolation {
 public:
  explicit NumericError(const std::string& what)
      : ContractViolation("non-finite value: " + what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what)
      : Error(Category::kIo, "i/o error: " + what) {}
};

class SchemaError : public Error {
 public:
  explicit SchemaError(const std::string& what)
      : Error(Category::kIo, "schema error: " + what) {}
};

class ParseError : public Error {
 public:
  ParseError(const std::string& file, std::size_t line, const std::string& what)
      : Error(Category::kIo, "parse error: " + file + ":" +
                                 std::to_string(line) + ": " + what),
        line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

}  // namespace camnorm

#endif  // CAMNORM_ERROR_HPP_
