// SPDX-License-Identifier: Apache-2.0
#include "nids/error.hpp"

#include <utility>

namespace nids {

MissingColumn::MissingColumn(std::string column)
    : DataError("missing column '" + column + "' in header"), column_(std::move(column)) {}

MalformedRow::MalformedRow(std::size_t line, const std::string& detail)
    : DataError("malformed row at line " + std::to_string(line) + ": " + detail), line_(line) {}

InvalidLabel::InvalidLabel(std::size_t line, const std::string& value)
    : DataError("invalid label '" + value + "' at line " + std::to_string(line) +
                " (expected 0 or 1)"),
      line_(line) {}

ArityMismatch::ArityMismatch(std::size_t expected, std::size_t found)
    : DataError("feature arity mismatch: expected " + std::to_string(expected) + ", found " +
                std::to_string(found)),
      expected_(expected),
      found_(found) {}

TooFewRecords::TooFewRecords(std::size_t records, std::size_t window)
    : DataError("too few records: " + std::to_string(records) + " rows for window length " +
                std::to_string(window)) {}

LengthMismatch::LengthMismatch(std::size_t a, std::size_t b)
    : DataError("length mismatch: " + std::to_string(a) + " vs " + std::to_string(b)) {}

BadRate::BadRate(double rate)
    : ShapeError("dropout rate must lie in [0, 1), got " + std::to_string(rate)) {}

VersionMismatch::VersionMismatch(long found, long supported)
    : CheckpointError("unsupported checkpoint format_version " + std::to_string(found) +
                      " (supported: " + std::to_string(supported) + ")") {}

NonFiniteLoss::NonFiniteLoss(int epoch)
    : TrainingError("non-finite training loss in epoch " + std::to_string(epoch)) {}

}  // namespace nids
