#include "uicq/evalstats.hpp"

#include <algorithm>
#include <cmath>

namespace uicq {

namespace {

void require_paired(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw Error(ErrorCode::LengthMismatch, "inputs have " + std::to_string(x.size()) + " and " +
                                               std::to_string(y.size()) + " elements");
  }
  if (x.empty()) {
    throw Error(ErrorCode::EmptyInput, "no samples");
  }
}

double mean_of(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw Error(ErrorCode::LengthMismatch, "pearson needs two equal-length inputs of at least 2 samples");
  }
  const double mx = mean_of(x);
  const double my = mean_of(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx <= 0.0 || syy <= 0.0) {
    throw Error(ErrorCode::DegenerateInput, "pearson undefined for a constant input");
  }
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double mse(std::span<const double> x, std::span<const double> y) {
  require_paired(x, y);
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - y[i]) * (x[i] - y[i]);
  return s / static_cast<double>(x.size());
}

double mae(std::span<const double> x, std::span<const double> y) {
  require_paired(x, y);
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += std::abs(x[i] - y[i]);
  return s / static_cast<double>(x.size());
}

bool EvalReport::all_ok() const noexcept {
  return std::all_of(rows.begin(), rows.end(), [](const EvalRow& r) { return r.ok(); });
}

EvalReport consistency_report(std::span<const DimensionScores> dimensions) {
  EvalReport report;
  for (const auto& dim : dimensions) {
    EvalRow row;
    row.dimension = dim.name;
    row.count = dim.model.size();
    try {
      require_paired(dim.model, dim.human);
      row.mean_human = mean_of(dim.human);
      row.mean_model = mean_of(dim.model);
      row.mse = mse(dim.model, dim.human);
      row.mae = mae(dim.model, dim.human);
      row.pearson = pearson(dim.model, dim.human);
    } catch (const Error& e) {
      row.error = e.code();
      row.error_message = e.what();
    }
    report.rows.push_back(std::move(row));
  }
  return report;
}

}  // namespace uicq
