// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace nids {

// Root of every error the library throws. The intermediate classes below are
// the categories the command line maps onto exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class DataError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class CheckpointError : public Error {
 public:
  using Error::Error;
};

class TrainingError : public Error {
 public:
  using Error::Error;
};

// configuration

class InvalidConfig : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

// data

class IoError : public DataError {
 public:
  using DataError::DataError;
};

class MissingColumn : public DataError {
 public:
  explicit MissingColumn(std::string column);
  const std::string& column() const noexcept { return column_; }

 private:
  std::string column_;
};

class MalformedRow : public DataError {
 public:
  MalformedRow(std::size_t line, const std::string& detail);
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class InvalidLabel : public DataError {
 public:
  InvalidLabel(std::size_t line, const std::string& value);
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class EmptyFile : public DataError {
 public:
  using DataError::DataError;
};

class EmptyDataset : public DataError {
 public:
  using DataError::DataError;
};

class EmptyInput : public DataError {
 public:
  using DataError::DataError;
};

class EmptySplit : public DataError {
 public:
  using DataError::DataError;
};

class NotFitted : public DataError {
 public:
  using DataError::DataError;
};

class ArityMismatch : public DataError {
 public:
  ArityMismatch(std::size_t expected, std::size_t found);
  std::size_t expected() const noexcept { return expected_; }
  std::size_t found() const noexcept { return found_; }

 private:
  std::size_t expected_;
  std::size_t found_;
};

class TooFewRecords : public DataError {
 public:
  TooFewRecords(std::size_t records, std::size_t window);
};

class BadRatios : public DataError {
 public:
  using DataError::DataError;
};

class LengthMismatch : public DataError {
 public:
  LengthMismatch(std::size_t a, std::size_t b);
};

// shapes

class ShapeMismatch : public ShapeError {
 public:
  using ShapeError::ShapeError;
};

class InputTooShort : public ShapeError {
 public:
  using ShapeError::ShapeError;
};

class EmptySequence : public ShapeError {
 public:
  using ShapeError::ShapeError;
};

class BadRate : public ShapeError {
 public:
  explicit BadRate(double rate);
};

// checkpoints

class VersionMismatch : public CheckpointError {
 public:
  VersionMismatch(long found, long supported);
};

class CorruptCheckpoint : public CheckpointError {
 public:
  using CheckpointError::CheckpointError;
};

// training

class NonFiniteLoss : public TrainingError {
 public:
  explicit NonFiniteLoss(int epoch);
};

}  // namespace nids
