#include "hydrocast/ensemble.hpp"

#include <algorithm>
#include <sstream>

#include "hydrocast/csv.hpp"
#include "hydrocast/error.hpp"
#include "hydrocast/training.hpp"

namespace hydrocast {

std::vector<Date> valid_issue_dates(const BasinRecord& record, const ModelConfig& config) {
  std::vector<Date> out;
  for (std::size_t t = config.hindcast_length; t + ModelConfig::kHorizon <= record.num_days; ++t) {
    out.push_back(record.date_at(t));
  }
  return out;
}

Matrix predict_medians(const TrainedModel& model, const BasinRecord& record, std::span<const Date> issue_dates) {
  const PreparedBasin prepared = impute(record, model.transform);
  std::vector<SampleRef> samples;
  samples.reserve(issue_dates.size());
  for (Date d : issue_dates) {
    const auto idx = prepared.index_of(d);
    if (!idx || *idx < model.config.hindcast_length || *idx + ModelConfig::kHorizon > prepared.num_days) {
      throw ValidationError("issue date " + d.iso() + " lacks a full input window for basin " + record.gauge_id);
    }
    samples.push_back(SampleRef{0, static_cast<std::uint32_t>(*idx)});
  }
  Matrix out(issue_dates.size(), ModelConfig::kHorizon);
  const std::span<const PreparedBasin> basins(&prepared, 1);
  auto& state = const_cast<ForecastModelState&>(model.state);
  const FeatureStats& q = model.transform.at(kTargetFeature);
  constexpr std::size_t kChunk = 256;
  for (std::size_t i = 0; i < samples.size(); i += kChunk) {
    const std::size_t n = std::min(kChunk, samples.size() - i);
    const Batch batch = assemble_batch(basins, std::span(samples).subspan(i, n), model.config);
    ad::Graph g;
    const auto p = graph::bind(g, state, false);
    const auto d = graph::forward(g, p, model.config, batch);
    const auto mu = d.location.value();
    const auto b = d.scale.value();
    const auto tau = d.asymmetry.value();
    for (std::size_t lead = 0; lead < ModelConfig::kHorizon; ++lead) {
      for (std::size_t k = 0; k < n; ++k) {
        const std::size_t r = lead * n + k;
        const double median = ald_median(DensityParams{mu[r], b[r], tau[r]});
        out(i + k, lead) = median * q.std + q.mean;
      }
    }
  }
  return out;
}

EnsembleForecast combine_members(std::string gauge_id, std::vector<Date> issue_dates, std::vector<Matrix> medians) {
  if (medians.empty()) throw ValidationError("ensemble has no members");
  EnsembleForecast f;
  f.gauge_id = std::move(gauge_id);
  f.issue_dates = std::move(issue_dates);
  const std::size_t rows = medians[0].rows, cols = medians[0].cols;
  f.mean = Matrix(rows, cols);
  for (const auto& m : medians) {
    if (m.rows != rows || m.cols != cols) throw ShapeError("ensemble members disagree in shape");
    for (std::size_t i = 0; i < m.data.size(); ++i) f.mean.data[i] += m.data[i];
  }
  for (double& v : f.mean.data) v /= static_cast<double>(medians.size());
  f.member_medians = std::move(medians);
  return f;
}

EnsembleForecast predict_ensemble(std::span<const TrainedModel> members, const BasinRecord& record,
                                  std::span<const Date> issue_dates, std::size_t expected_members) {
  if (members.size() != expected_members) {
    throw ValidationError("expected " + std::to_string(expected_members) + " ensemble members, got " +
                          std::to_string(members.size()));
  }
  std::vector<Matrix> medians;
  for (const auto& m : members) medians.push_back(predict_medians(m, record, issue_dates));
  return combine_members(record.gauge_id, {issue_dates.begin(), issue_dates.end()}, std::move(medians));
}

// ---------------------------------------------------------------- archive

void PredictionArchive::add(const std::string& gauge, Date issue, int lead, double q) {
  values[gauge][lead][issue] = q;
}

void PredictionArchive::add(const EnsembleForecast& f) {
  for (std::size_t i = 0; i < f.issue_dates.size(); ++i) {
    for (std::size_t lead = 0; lead < f.mean.cols; ++lead) {
      add(f.gauge_id, f.issue_dates[i], static_cast<int>(lead), f.mean(i, lead));
    }
  }
}

std::vector<std::string> PredictionArchive::gauges() const {
  std::vector<std::string> out;
  for (const auto& [g, _] : values) out.push_back(g);
  return out;
}

DailySeries PredictionArchive::lead_series(const std::string& gauge, int lead) const {
  DailySeries s;
  auto g = values.find(gauge);
  if (g == values.end()) return s;
  auto l = g->second.find(lead);
  if (l == g->second.end() || l->second.empty()) return s;
  const Date first = l->second.begin()->first + lead;
  const Date last = l->second.rbegin()->first + lead;
  s.start = first;
  s.values.assign(static_cast<std::size_t>(last - first) + 1, csv::kMissing);
  for (const auto& [issue, q] : l->second) s.values[static_cast<std::size_t>(issue + lead - first)] = q;
  return s;
}

std::string predictions_csv(const PredictionArchive& archive) {
  std::ostringstream out;
  out << "gauge_id,issue_date,lead_days,q_pred_mmday\n";
  for (const auto& [gauge, leads] : archive.values) {
    // Rows ordered by issue date, then lead.
    std::map<Date, std::map<int, double>> by_issue;
    for (const auto& [lead, series] : leads) {
      for (const auto& [issue, q] : series) by_issue[issue][lead] = q;
    }
    for (const auto& [issue, row] : by_issue) {
      for (const auto& [lead, q] : row) {
        out << gauge << ',' << issue.iso() << ',' << lead << ',' << csv::format_number(q) << '\n';
      }
    }
  }
  return out.str();
}

void write_predictions(const PredictionArchive& archive, const std::filesystem::path& path) {
  csv::write_text(path, predictions_csv(archive));
}

PredictionArchive read_predictions(const std::filesystem::path& path) {
  const csv::Table t = csv::read(path);
  const std::string file = path.string();
  const std::size_t cg = t.column("gauge_id"), ci = t.column("issue_date"), cl = t.column("lead_days"),
                    cq = t.column("q_pred_mmday");
  PredictionArchive a;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    const std::size_t line = t.line_numbers[r];
    Date issue;
    try {
      issue = Date::parse(row[ci]);
    } catch (const ValidationError& e) {
      throw ParseError(file, line, e.what());
    }
    const double lead = csv::parse_number(row[cl], file, line);
    if (std::isnan(lead) || lead < 0 || lead != static_cast<int>(lead)) {
      throw ParseError(file, line, "lead_days must be a non-negative integer");
    }
    a.add(row[cg], issue, static_cast<int>(lead), csv::parse_number(row[cq], file, line));
  }
  return a;
}

}  // namespace hydrocast
