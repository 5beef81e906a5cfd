#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "uicq/metrics.hpp"

namespace uicq::cli {

/// Runs one command line (without the program name). Returns the process exit code:
/// 0 on success, 1 when any item failed, CLI11's code for usage errors.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// One `score` output line.
struct ScoreRecord {
  std::string path;
  QualityBreakdown breakdown;
  std::optional<double> cnn_score;
};

std::string format_score_record(const ScoreRecord& rec);
/// Throws MalformedFile if a field is missing or mistyped.
ScoreRecord parse_score_record(std::string_view line);

}  // namespace uicq::cli
