#pragma once

// Per-task score tables and data-scaling curves.

#include "vica/evalkit/scoring.hpp"

#include <array>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace vica::eval {

struct ScoreReport {
  std::array<std::optional<double>, kTaskCount> scores{};  // percent; nullopt = absent
  std::array<std::size_t, kTaskCount> counts{};
  std::optional<double> average;  // unweighted mean over present tasks
  std::vector<std::string> warnings;

  std::optional<double> score(Task t) const { return scores[static_cast<std::size_t>(t)]; }
  std::size_t count(Task t) const { return counts[static_cast<std::size_t>(t)]; }
};

// Scores every task with its scorer (MRA for numerical tasks, exact match for
// multiple choice). Tasks without records are absent: excluded from the
// average and reported in warnings.
ScoreReport emit_report(std::span<const PredictionRecord> records,
                        std::span<const double> mra_thresholds);
ScoreReport emit_report(std::span<const PredictionRecord> records);

// Builds a report from already-known task scores (e.g. a published row).
ScoreReport report_from_scores(const std::array<std::optional<double>, kTaskCount>& scores);

// Markdown table, columns Average then the eight tasks; one decimal place.
std::string render_markdown(const ScoreReport& r, const std::string& method = "model");
// Long-form CSV with full precision: column,score,records.
std::string render_csv(const ScoreReport& r);

struct CurvePoint {
  double fraction = 0.0;  // share of the training data, in (0, 1]
  ScoreReport report;
};

struct ScalingCurve {
  std::string csv;    // fraction,average,<task keys...>
  std::string chart;  // plain-text bar chart of the average
};

// Fractions must be strictly increasing within (0, 1]; duplicates and
// out-of-order points are rejected.
ScalingCurve emit_scaling_curve(std::span<const CurvePoint> points);

} // namespace vica::eval
