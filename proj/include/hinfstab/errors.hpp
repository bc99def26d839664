#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hinfstab {

// Root of the library's exception hierarchy.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

// I - D_K * D22 is numerically singular, so the algebraic loop has no
// unique solution.
class WellPosednessError : public Error {
 public:
  using Error::Error;
};

class EigenFailure : public Error {
 public:
  using Error::Error;
};

class HamiltonianEigenFailure : public EigenFailure {
 public:
  using EigenFailure::EigenFailure;
};

// i*omega is (numerically) an eigenvalue of A.
class SingularFrequency : public Error {
 public:
  using Error::Error;
};

class UnstableSystem : public Error {
 public:
  using Error::Error;
};

class DefectiveEigenvalue : public Error {
 public:
  using Error::Error;
};

class MultiplePeaks : public Error {
 public:
  using Error::Error;
};

class InfiniteStart : public Error {
 public:
  using Error::Error;
};

class NotDescent : public Error {
 public:
  using Error::Error;
};

class AllRunsFailed : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line, std::size_t column)
      : Error("line " + std::to_string(line) + ", column " +
              std::to_string(column) + ": " + what),
        line_(line),
        column_(column) {}

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

class DimensionMismatch : public Error {
 public:
  DimensionMismatch(std::string block, const std::string& detail)
      : Error("dimension mismatch in block " + block + ": " + detail),
        block_(std::move(block)) {}

  const std::string& block() const noexcept { return block_; }

 private:
  std::string block_;
};

}  // namespace hinfstab
