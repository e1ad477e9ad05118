#include "vica/evalkit/report.hpp"

#include "vica/error.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

namespace vica::eval {

namespace {

std::string fixed(double v, int precision) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(precision) << v;
  return os.str();
}

std::string full(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

void finish(ScoreReport& r) {
  double sum = 0.0;
  int present = 0;
  for (Task t : all_tasks()) {
    const auto& s = r.scores[static_cast<std::size_t>(t)];
    if (s) {
      sum += *s;
      ++present;
    } else {
      r.warnings.push_back("task " + std::string(task_key(t)) +
                           " has no records; excluded from the average");
    }
  }
  if (present > 0) r.average = sum / present;
}

} // namespace

ScoreReport emit_report(std::span<const PredictionRecord> records,
                        std::span<const double> mra_thresholds) {
  ScoreReport r;
  for (Task t : all_tasks()) {
    std::vector<PredictionRecord> subset;
    for (const auto& rec : records) {
      if (rec.task == t) subset.push_back(rec);
    }
    const auto i = static_cast<std::size_t>(t);
    r.counts[i] = subset.size();
    if (subset.empty()) continue;
    r.scores[i] = task_kind(t) == AnswerKind::kNumeric ? score_mra(subset, mra_thresholds)
                                                       : score_mcq(subset);
  }
  finish(r);
  return r;
}

ScoreReport emit_report(std::span<const PredictionRecord> records) {
  const auto th = default_mra_thresholds();
  return emit_report(records, th);
}

ScoreReport report_from_scores(const std::array<std::optional<double>, kTaskCount>& scores) {
  ScoreReport r;
  for (std::size_t i = 0; i < kTaskCount; ++i) {
    if (scores[i] && !(*scores[i] >= 0.0 && *scores[i] <= 100.0)) {
      throw Error(ErrorCode::kInput, "task score outside [0, 100]");
    }
  }
  r.scores = scores;
  finish(r);
  return r;
}

std::string render_markdown(const ScoreReport& r, const std::string& method) {
  auto cell = [](const std::optional<double>& v) { return v ? fixed(*v, 1) : std::string("-"); };
  std::ostringstream os;
  os << "| Method | Average |";
  for (Task t : all_tasks()) os << ' ' << task_header(t) << " |";
  os << "\n|---|---|";
  for (std::size_t i = 0; i < kTaskCount; ++i) os << "---|";
  os << "\n| " << method << " | " << cell(r.average) << " |";
  for (Task t : all_tasks()) os << ' ' << cell(r.score(t)) << " |";
  os << '\n';
  return os.str();
}

std::string render_csv(const ScoreReport& r) {
  std::ostringstream os;
  os << "column,score,records\n";
  std::size_t total = 0;
  for (std::size_t c : r.counts) total += c;
  os << "average," << (r.average ? full(*r.average) : "") << ',' << total << '\n';
  for (Task t : all_tasks()) {
    const auto s = r.score(t);
    os << task_key(t) << ',' << (s ? full(*s) : "") << ',' << r.count(t) << '\n';
  }
  return os.str();
}

ScalingCurve emit_scaling_curve(std::span<const CurvePoint> points) {
  if (points.empty()) throw Error(ErrorCode::kInput, "scaling curve needs at least one point");
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double f = points[i].fraction;
    if (!(f > 0.0 && f <= 1.0)) {
      throw Error(ErrorCode::kInput, "data fraction " + full(f) + " outside (0, 1]");
    }
    if (i > 0 && f == points[i - 1].fraction) {
      throw Error(ErrorCode::kInput, "duplicate data fraction " + full(f));
    }
    if (i > 0 && f < points[i - 1].fraction) {
      throw Error(ErrorCode::kInput, "data fractions must be strictly increasing");
    }
  }

  ScalingCurve out;
  std::ostringstream csv;
  csv << "fraction,average";
  for (Task t : all_tasks()) csv << ',' << task_key(t);
  csv << '\n';
  for (const auto& p : points) {
    csv << full(p.fraction) << ',' << (p.report.average ? full(*p.report.average) : "");
    for (Task t : all_tasks()) {
      const auto s = p.report.score(t);
      csv << ',' << (s ? full(*s) : "");
    }
    csv << '\n';
  }
  out.csv = csv.str();

  // Bars are scaled to the 0..100 score range, 50 characters wide.
  constexpr int kWidth = 50;
  std::ostringstream chart;
  chart << "average score vs. training data fraction\n";
  for (const auto& p : points) {
    chart << std::setw(6) << fixed(100.0 * p.fraction, 1) << "% |";
    if (p.report.average) {
      const double v = std::clamp(*p.report.average, 0.0, 100.0);
      const int n = static_cast<int>(std::lround(v / 100.0 * kWidth));
      chart << std::string(static_cast<std::size_t>(n), '#')
            << std::string(static_cast<std::size_t>(kWidth - n), ' ') << "| "
            << fixed(*p.report.average, 2);
    } else {
      chart << std::string(kWidth, ' ') << "| n/a";
    }
    chart << '\n';
  }
  out.chart = chart.str();
  return out;
}

} // namespace vica::eval
