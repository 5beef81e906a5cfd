#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "uicq/error.hpp"

namespace uicq {

/// Sample correlation coefficient.
/// Throws LengthMismatch (sizes differ or fewer than 2) or DegenerateInput (zero variance).
double pearson(std::span<const double> x, std::span<const double> y);
/// Throws LengthMismatch or EmptyInput.
double mse(std::span<const double> x, std::span<const double> y);
double mae(std::span<const double> x, std::span<const double> y);

/// Paired model/human scores for one rating dimension.
struct DimensionScores {
  std::string name;
  std::vector<double> model;
  std::vector<double> human;
};

struct EvalRow {
  std::string dimension;
  std::size_t count = 0;
  double mean_human = 0.0;
  double mean_model = 0.0;
  double pearson = 0.0;
  double mse = 0.0;
  double mae = 0.0;
  std::optional<ErrorCode> error;
  std::string error_message;

  bool ok() const noexcept { return !error.has_value(); }
};

struct EvalReport {
  std::vector<EvalRow> rows;

  bool all_ok() const noexcept;
};

/// One row per dimension in input order. A dimension whose statistics fail
/// is kept as an errored row; the others are still computed.
EvalReport consistency_report(std::span<const DimensionScores> dimensions);

}  // namespace uicq
