#include "hydrocast/commands.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include "hydrocast/checkpoint.hpp"
#include "hydrocast/csv.hpp"
#include "hydrocast/ensemble.hpp"
#include "hydrocast/error.hpp"
#include "hydrocast/events.hpp"
#include "hydrocast/features.hpp"
#include "hydrocast/hydro_metrics.hpp"
#include "hydrocast/run_context.hpp"
#include "hydrocast/skill.hpp"
#include "hydrocast/svg.hpp"
#include "hydrocast/training.hpp"
#include "json.hpp"

namespace hydrocast::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Runs fn(i) for i in [0, n) on up to `jobs` threads; the first exception
// (by index) is rethrown after all workers finish.
template <typename F>
void parallel_for(std::size_t n, unsigned jobs, F&& fn) {
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(n);
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  const std::size_t threads = std::min<std::size_t>(std::max(1u, jobs), std::max<std::size_t>(n, 1));
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

const Fold& find_fold(const SplitPlan& plan, std::optional<std::size_t> fold) {
  if (!fold) throw ValidationError("--plan requires --fold");
  for (const auto& f : plan.folds) {
    if (f.fold_id == static_cast<int>(*fold)) return f;
  }
  throw ValidationError("fold " + std::to_string(*fold) + " is not in the split plan");
}

const BasinRecord* find_record(const Dataset& ds, const std::string& gauge) {
  const auto it = std::lower_bound(ds.basins.begin(), ds.basins.end(), gauge,
                                   [](const BasinRecord& r, const std::string& g) { return r.gauge_id < g; });
  return it != ds.basins.end() && it->gauge_id == gauge ? &*it : nullptr;
}

DailySeries observed_series(const BasinRecord& r) { return DailySeries{r.start, r.discharge}; }

std::vector<std::pair<std::string, PredictionArchive>> load_archives(const std::vector<std::string>& specs) {
  std::vector<std::pair<std::string, PredictionArchive>> out;
  std::set<std::string> names;
  for (const auto& spec : specs) {
    auto [name, path] = named_path(spec);
    if (name == "observed") throw ValidationError("'observed' is reserved for gauge observations");
    if (!names.insert(name).second) throw ValidationError("model name '" + name + "' given twice");
    out.emplace_back(name, read_predictions(path));
  }
  if (out.empty()) throw ValidationError("at least one --predictions archive is required");
  return out;
}

std::string fmt_t(double t) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", t);
  return buf;
}

// A score file row reduced to one metric.
struct ScoreRow {
  std::string gauge_id;
  std::string model;
  double return_period = 0.0;
  int lead = 0;
  std::optional<double> value;
};

bool is_event_metric(const std::string& m) { return m == "precision" || m == "recall" || m == "f1"; }

// Reads event_scores.csv or hydro_metrics.csv, keyed by its header.
std::vector<ScoreRow> load_scores(const fs::path& path, const std::string& metric) {
  const csv::Table t = csv::read(path);
  const bool events = std::find(t.header.begin(), t.header.end(), "TP") != t.header.end();
  std::vector<ScoreRow> out;
  if (events) {
    if (!is_event_metric(metric)) {
      throw ValidationError("metric '" + metric + "' is not in event scores (precision, recall, f1)");
    }
    for (const auto& s : read_event_scores(path)) {
      const auto& v = metric == "precision" ? s.scores.precision : metric == "recall" ? s.scores.recall : s.scores.f1;
      out.push_back({s.gauge_id, s.model, s.return_period, s.lead_days, v});
    }
    return out;
  }
  const std::size_t g = t.column("gauge_id"), m = t.column("model"), l = t.column("lead"), v = t.column(metric);
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    const double lead = csv::parse_number(row[l], t.source, t.line_numbers[r]);
    const double value = csv::parse_number(row[v], t.source, t.line_numbers[r]);
    out.push_back({row[g], row[m], 0.0, static_cast<int>(lead),
                   std::isnan(value) ? std::nullopt : std::optional<double>(value)});
  }
  return out;
}

std::vector<std::string> models_in(const std::vector<ScoreRow>& rows) {
  std::set<std::string> s;
  for (const auto& r : rows) s.insert(r.model);
  return {s.begin(), s.end()};
}

void require_model(const std::vector<ScoreRow>& rows, const std::string& model) {
  const auto models = models_in(rows);
  if (std::find(models.begin(), models.end(), model) != models.end()) return;
  std::string list;
  for (const auto& m : models) list += (list.empty() ? "" : ", ") + m;
  throw ValidationError("model '" + model + "' not found in scores (available: " + list + ")");
}

std::map<std::string, std::string> continent_labels(const RunConfig& cfg) {
  std::map<std::string, std::string> out;
  for (const auto& r : load_dataset(data_root(cfg)).basins) out[r.gauge_id] = r.continent;
  return out;
}

}  // namespace

RunConfig resolve_config(const CommonArgs& args) {
  RunConfig c = args.config.empty() ? RunConfig{} : load_run_config(args.config);
  if (args.seed) c.seed = *args.seed;
  if (args.jobs) {
    if (*args.jobs < 1) throw ValidationError("--jobs must be >= 1");
    c.jobs = *args.jobs;
  }
  return c;
}

// ------------------------------------------------------------------ synth

void run_synth(const SynthArgs& args) {
  if (args.common.out.empty()) throw ValidationError("synth needs --out");
  RunConfig cfg = resolve_config(args.common);
  SyntheticOptions o = args.options;
  if (args.common.seed) o.seed = *args.common.seed;
  const auto data = make_synthetic_dataset(o);
  write_dataset(data.dataset, args.common.out);
  RunContext ctx("synth", cfg, args.common.out, args.common.argv);
  json truth = json::array();
  for (const auto& t : data.truth) {
    truth.push_back({{"gauge_id", t.gauge_id}, {"recession", t.recession}, {"runoff_coefficient", t.runoff_coefficient}});
  }
  ctx.write("synthetic_truth.json", truth.dump(2) + "\n");
  ctx.finish();
}

// ------------------------------------------------------------------ train

void run_train(const TrainArgs& args) {
  const RunConfig cfg = resolve_config(args.common);
  RunContext ctx("train", cfg, args.common.out, args.common.argv);
  std::vector<SkipEntry> skips;
  const Dataset ds = load_filtered(cfg, &skips);

  std::vector<BasinRecord> records;
  std::vector<DateRange> ranges;
  if (!args.plan.empty()) {
    const SplitPlan plan = read_split_plan(args.plan);
    const Fold& fold = find_fold(plan, args.fold);
    for (const auto& g : fold.train_gauges) {
      if (const auto* r = find_record(ds, g)) {
        records.push_back(*r);
      } else {
        skips.push_back({g, "observed", "training gauge not in the dataset"});
      }
    }
    ranges = fold.train_ranges;
  } else {
    records = ds.basins;
    if (cfg.train_period) ranges.push_back(*cfg.train_period);
  }
  if (records.empty()) throw DataError("no training gauges");

  const auto schema = InputSchema::from_sources(ds.schema, cfg.inputs.hindcast_sources, cfg.inputs.forecast_sources,
                                                cfg.inputs.substitutions, cfg.inputs.statics);
  const FeatureTransform transform = fit_transform(records, schema, ranges);
  ModelConfig mc = cfg.model;
  size_inputs(mc, transform);
  mc.validate();

  std::vector<PreparedBasin> prepared;
  for (const auto& r : records) {
    try {
      prepared.push_back(impute(r, transform));
    } catch (const DataError& e) {
      skips.push_back({r.gauge_id, "observed", e.what()});
    }
  }
  const auto samples = enumerate_samples(prepared, mc, ranges);
  if (samples.empty()) throw DataError("no (gauge, issue date) sample fits inside the training period");

  std::vector<TrainResult> results(mc.ensemble_size);
  parallel_for(mc.ensemble_size, cfg.jobs,
               [&](std::size_t m) { results[m] = train(prepared, samples, mc, cfg.seed + m); });

  std::ostringstream trace;
  trace << "member,step,loss\n";
  json members = json::array();
  for (std::size_t m = 0; m < results.size(); ++m) {
    const TrainedModel model{mc, transform, results[m].state, cfg.seed + m};
    const std::string name = "member_" + std::to_string(m) + ".json";
    ctx.write(name, checkpoint_json(model));
    const auto& loss = results[m].trace.loss;
    for (std::size_t s = 0; s < loss.size(); ++s) trace << m << ',' << s << ',' << csv::format_number(loss[s]) << '\n';
    members.push_back({{"file", name},
                       {"seed", cfg.seed + m},
                       {"initial_nll", evaluate_nll(ForecastModelState::initialize(mc, cfg.seed + m), mc, prepared, samples)},
                       {"final_nll", evaluate_nll(results[m].state, mc, prepared, samples)}});
  }
  ctx.write("training_trace.csv", trace.str());
  const json summary = {{"gauges", prepared.size()},
                        {"samples", samples.size()},
                        {"members", members},
                        {"dropped_features", transform.dropped},
                        {"warnings", transform.warnings}};
  ctx.write("training_summary.json", summary.dump(2) + "\n");
  ctx.write_skips(skips);
  ctx.finish();
}

// ------------------------------------------------------------------ forecast

void run_forecast(const ForecastArgs& args) {
  const RunConfig cfg = resolve_config(args.common);
  if (args.models.empty()) throw ValidationError("forecast needs --models");
  RunContext ctx("forecast", cfg, args.common.out, args.common.argv);

  std::vector<fs::path> files;
  if (fs::is_directory(args.models)) {
    for (const auto& e : fs::directory_iterator(args.models)) {
      const auto name = e.path().filename().string();
      if (name.rfind("member_", 0) == 0 && e.path().extension() == ".json") files.push_back(e.path());
    }
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw DataError("no member_*.json checkpoints in " + args.models.string());
  std::vector<TrainedModel> members;
  for (const auto& f : files) members.push_back(load_checkpoint(f));
  const std::size_t expected = members.front().config.ensemble_size;

  std::vector<SkipEntry> skips;
  const Dataset ds = load_filtered(cfg, &skips);
  std::vector<std::string> gauges;
  std::vector<DateRange> windows;
  if (!args.plan.empty()) {
    const SplitPlan plan = read_split_plan(args.plan);
    const Fold& fold = find_fold(plan, args.fold);
    gauges = fold.test_gauges;
    windows = fold.test_ranges;
  } else {
    for (const auto& r : ds.basins) gauges.push_back(r.gauge_id);
    if (cfg.test_period) windows.push_back(*cfg.test_period);
  }

  std::vector<std::optional<EnsembleForecast>> forecasts(gauges.size());
  std::vector<std::optional<SkipEntry>> gauge_skips(gauges.size());
  parallel_for(gauges.size(), cfg.jobs, [&](std::size_t i) {
    const BasinRecord* rec = find_record(ds, gauges[i]);
    if (rec == nullptr) {
      gauge_skips[i] = SkipEntry{gauges[i], "forecast", "gauge not in the dataset"};
      return;
    }
    std::vector<Date> dates;
    for (Date d : valid_issue_dates(*rec, members.front().config)) {
      if (windows.empty() ||
          std::any_of(windows.begin(), windows.end(), [&](const DateRange& w) { return w.contains(d); })) {
        dates.push_back(d);
      }
    }
    if (dates.empty()) {
      gauge_skips[i] = SkipEntry{gauges[i], "forecast", "no issue date with a full input window in the test period"};
      return;
    }
    try {
      forecasts[i] = predict_ensemble(members, *rec, dates, expected);
    } catch (const DataError& e) {
      gauge_skips[i] = SkipEntry{gauges[i], "forecast", e.what()};
    }
  });

  PredictionArchive archive;
  for (std::size_t i = 0; i < gauges.size(); ++i) {
    if (forecasts[i]) archive.add(*forecasts[i]);
    if (gauge_skips[i]) skips.push_back(*gauge_skips[i]);
  }
  ctx.write("predictions.csv", predictions_csv(archive));
  ctx.write_skips(skips);
  ctx.finish();
}

// ------------------------------------------------------------------ return-periods

void run_return_periods(const ReturnPeriodArgs& args) {
  const RunConfig cfg = resolve_config(args.common);
  RunContext ctx("return-periods", cfg, args.common.out, args.common.argv);
  std::vector<SkipEntry> skips;
  const Dataset ds = load_filtered(cfg, &skips);

  std::vector<FrequencyInput> inputs;
  for (const auto& r : ds.basins) inputs.push_back({r.gauge_id, "observed", observed_series(r)});
  // Model thresholds come from each model's own nowcast (lead 0) hydrograph.
  for (const auto& [name, archive] : load_archives(args.predictions)) {
    for (const auto& g : archive.gauges()) inputs.push_back({g, name, archive.lead_series(g, 0)});
  }
  FrequencyOptions options;
  options.years = YearDefinition{cfg.frequency.year_start_month, cfg.frequency.min_coverage};
  options.min_years = cfg.frequency.min_years;
  options.method = cfg.frequency.method;
  const auto tables = build_tables(inputs, cfg.frequency.return_periods, options);
  skips.insert(skips.end(), tables.skipped.begin(), tables.skipped.end());
  ctx.write("return_periods.csv", return_periods_csv(tables));
  ctx.write_skips(skips);
  ctx.finish();
}

// ------------------------------------------------------------------ eval-events

void run_eval_events(const EventArgs& args) {
  const RunConfig cfg = resolve_config(args.common);
  if (args.thresholds.empty()) throw ValidationError("eval-events needs --thresholds");
  RunContext ctx("eval-events", cfg, args.common.out, args.common.argv);
  std::vector<SkipEntry> skips;
  const Dataset ds = load_filtered(cfg, &skips);
  const auto tables = read_return_periods(args.thresholds);

  std::vector<EventScore> scores;
  for (const auto& [name, archive] : load_archives(args.predictions)) {
    for (const auto& g : archive.gauges()) {
      const BasinRecord* rec = find_record(ds, g);
      if (rec == nullptr) {
        skips.push_back({g, name, "gauge not in the dataset"});
        continue;
      }
      const auto* obs_table = tables.find(g, "observed");
      const auto* sim_table = tables.find(g, name);
      if (obs_table == nullptr || sim_table == nullptr) {
        skips.push_back({g, name, obs_table == nullptr ? "no observed return-period table" : "no model return-period table"});
        continue;
      }
      const DailySeries obs = observed_series(*rec);
      for (double T : cfg.frequency.return_periods) {
        const auto ot = obs_table->thresholds.find(T);
        const auto st = sim_table->thresholds.find(T);
        if (ot == obs_table->thresholds.end() || st == sim_table->thresholds.end()) {
          skips.push_back({g, name, "return period " + fmt_t(T) + " missing from the threshold table"});
          continue;
        }
        for (int lead = 0; lead < static_cast<int>(ModelConfig::kHorizon); ++lead) {
          EventScore s = score_events(obs, archive.lead_series(g, lead), ot->second, st->second);
          s.gauge_id = g;
          s.model = name;
          s.return_period = T;
          s.lead_days = lead;
          scores.push_back(std::move(s));
        }
      }
    }
  }
  ctx.write("event_scores.csv", event_scores_csv(scores));
  ctx.write_skips(skips);
  ctx.finish();
}

// ------------------------------------------------------------------ eval-hydro

void run_eval_hydro(const HydroArgs& args) {
  const RunConfig cfg = resolve_config(args.common);
  RunContext ctx("eval-hydro", cfg, args.common.out, args.common.argv);
  std::vector<SkipEntry> skips;
  const Dataset ds = load_filtered(cfg, &skips);
  std::vector<HydroMetricsRow> rows;
  for (const auto& [name, archive] : load_archives(args.predictions)) {
    for (const auto& g : archive.gauges()) {
      const BasinRecord* rec = find_record(ds, g);
      if (rec == nullptr) {
        skips.push_back({g, name, "gauge not in the dataset"});
        continue;
      }
      for (int lead = 0; lead < static_cast<int>(ModelConfig::kHorizon); ++lead) {
        const DailySeries sim = archive.lead_series(g, lead);
        std::vector<double> obs(sim.size());
        for (std::size_t i = 0; i < sim.size(); ++i) obs[i] = rec->index_of(sim.date_at(i)) ? rec->discharge[*rec->index_of(sim.date_at(i))] : std::nan("");
        rows.push_back({g, name, lead, hydrograph_metrics(sim.values, obs)});
      }
    }
  }
  ctx.write("hydro_metrics.csv", hydro_metrics_csv(rows));
  ctx.write_skips(skips);
  ctx.finish();
}

// ------------------------------------------------------------------ compare

void run_compare(const CompareArgs& args) {
  RunConfig cfg = resolve_config(args.common);
  if (args.scores.empty() || args.a.empty() || args.b.empty()) throw ValidationError("compare needs --scores, --a and --b");
  if (args.metric) cfg.metric = *args.metric;
  if (args.grouping) cfg.grouping = parse_grouping(*args.grouping);
  const int lead_a = args.lead_a.value_or(args.lead.value_or(-1));
  const int lead_b = args.lead_b.value_or(args.lead.value_or(-1));
  if ((lead_a < 0) != (lead_b < 0)) throw ValidationError("--lead-a and --lead-b must be given together");
  if (lead_a != lead_b && cfg.grouping == Grouping::lead) {
    throw ValidationError("cross-lead comparisons cannot be grouped by lead");
  }
  RunContext ctx("compare", cfg, args.common.out, args.common.argv);

  const auto rows = load_scores(args.scores, cfg.metric);
  require_model(rows, args.a);
  require_model(rows, args.b);
  std::map<std::string, std::string> continents;
  if (cfg.grouping == Grouping::continent) continents = continent_labels(cfg);

  std::vector<GaugeScore> a, b;
  for (const auto& r : rows) {
    if (args.return_period && std::abs(r.return_period - *args.return_period) > 1e-9) continue;
    const bool is_a = r.model == args.a, is_b = r.model == args.b;
    if (is_a && (lead_a < 0 || r.lead == lead_a)) {
      a.push_back({r.gauge_id, continents[r.gauge_id], r.return_period, r.lead, r.value});
    }
    // B's lead is relabelled to A's so cross-lead pairs share a key.
    if (is_b && (lead_b < 0 || r.lead == lead_b)) {
      b.push_back({r.gauge_id, continents[r.gauge_id], r.return_period, lead_a < 0 ? r.lead : lead_a, r.value});
    }
  }
  const std::vector<ComparisonSet> sets{compare_models(a, b, cfg.metric, cfg.grouping)};
  ctx.write("comparison.json", comparison_json(sets));

  std::ostringstream out;
  out << "metric,group,n,fraction_better,fraction_at_least,p_value,exact,cohens_d\n";
  for (const auto& g : sets.front().groups) {
    out << g.metric << ',' << g.group << ',' << g.n << ',' << csv::format_number(g.fraction_better) << ','
        << csv::format_number(g.fraction_at_least) << ',' << csv::format_number(g.wilcoxon.p_value) << ','
        << (g.wilcoxon.exact ? "true" : "false") << ','
        << (g.effect.d ? csv::format_number(*g.effect.d) : std::string()) << '\n';
  }
  ctx.write("comparison.csv", out.str());
  std::cout << out.str();
  ctx.finish();
}

// ------------------------------------------------------------------ cv-split

void run_cv_split(const SplitArgs& args) {
  RunConfig cfg = resolve_config(args.common);
  if (args.scheme) cfg.split.scheme = parse_scheme(*args.scheme);
  if (args.k) cfg.split.k = *args.k;
  if (args.temporal_folds) cfg.split.temporal_folds = *args.temporal_folds;
  if (args.buffer_days) cfg.split.buffer_days = *args.buffer_days;
  RunContext ctx("cv-split", cfg, args.common.out, args.common.argv);
  std::vector<SkipEntry> skips;
  const Dataset ds = load_filtered(cfg, &skips);

  std::vector<GaugeLabels> labels;
  for (const auto& r : ds.basins) labels.push_back(labels_of(r));
  DateRange period{ds.basins.front().start, ds.basins.front().end()};
  for (const auto& r : ds.basins) {
    period.first = std::min(period.first, r.start);
    period.last = std::max(period.last, r.end());
  }
  if (cfg.train_period || cfg.test_period) {
    const DateRange a = cfg.train_period.value_or(*cfg.test_period), b = cfg.test_period.value_or(*cfg.train_period);
    period = {std::min(a.first, b.first), std::max(a.last, b.last)};
  }
  SplitOptions o;
  o.scheme = cfg.split.scheme;
  o.k = cfg.split.k;
  o.expected_k = cfg.split.expected_k;
  o.seed = cfg.seed;
  o.period = period;
  o.temporal_folds = cfg.split.temporal_folds;
  o.buffer_days = cfg.split.buffer_days;
  ctx.write("split_plan.json", split_plan_json(make_split_plan(labels, o)));
  ctx.write_skips(skips);
  ctx.finish();
}

// ------------------------------------------------------------------ skill

namespace {

struct SkillData {
  std::vector<BasinRecord> records;
  std::vector<double> a;
  std::vector<double> b;
};

SkillData skill_data(const RunConfig& cfg, const SkillFitArgs& args, const std::string& metric, bool need_b) {
  const auto rows = load_scores(args.scores, metric);
  require_model(rows, args.a);
  if (need_b) require_model(rows, args.b);
  std::map<std::string, std::pair<std::optional<double>, std::optional<double>>> by_gauge;
  for (const auto& r : rows) {
    if (r.lead != args.lead || (is_event_metric(metric) && std::abs(r.return_period - args.return_period) > 1e-9)) {
      continue;
    }
    if (r.model == args.a) by_gauge[r.gauge_id].first = r.value;
    if (need_b && r.model == args.b) by_gauge[r.gauge_id].second = r.value;
  }
  const Dataset ds = load_dataset(data_root(cfg));
  SkillData out;
  for (const auto& [g, v] : by_gauge) {
    if (!v.first || (need_b && !v.second)) continue;
    const BasinRecord* rec = find_record(ds, g);
    if (rec == nullptr) continue;
    out.records.push_back(*rec);
    out.a.push_back(*v.first);
    if (need_b) out.b.push_back(*v.second);
  }
  if (out.records.size() < 2 * cfg.skill.folds) {
    throw DataError("skill-fit: only " + std::to_string(out.records.size()) + " gauges with defined " + metric +
                    " scores and attributes");
  }
  return out;
}

json evaluation_json(const ClassifierEvaluation& ev) {
  return {{"accuracy", ev.accuracy},
          {"micro_precision", ev.micro_precision},
          {"micro_recall", ev.micro_recall},
          {"gauges", ev.confusion.total()}};
}

}  // namespace

void run_skill_fit(const SkillFitArgs& args) {
  RunConfig cfg = resolve_config(args.common);
  if (args.scores.empty() || args.a.empty()) throw ValidationError("skill-fit needs --scores and --a");
  if (args.metric) cfg.metric = *args.metric;
  const bool which = args.task == "which-model";
  const bool regression = args.task == "regression";
  if (!which && !regression && args.task != "above-mean") {
    throw ValidationError("--task must be above-mean, which-model or regression");
  }
  if (which && args.b.empty()) throw ValidationError("--task which-model needs --b");
  RunContext ctx("skill-fit", cfg, args.common.out, args.common.argv);

  const SkillData data = skill_data(cfg, args, cfg.metric, which);
  const AttributeTable table = attribute_table(data.records);
  ForestConfig fc = cfg.skill.forest;
  fc.jobs = cfg.jobs;
  json evaluation = {{"task", args.task}, {"metric", cfg.metric}, {"model_a", args.a},
                     {"return_period", args.return_period}, {"lead", args.lead}};
  Forest forest;
  std::vector<double> predicted;

  if (regression) {
    fc.task = ForestTask::regression;
    // Out-of-fold R^2 over random gauge folds.
    const auto folds = random_spatial_folds(table.gauge_ids, cfg.skill.folds, cfg.seed);
    predicted.assign(data.a.size(), 0.0);
    for (std::size_t f = 0; f < folds.size(); ++f) {
      const std::set<std::string> test(folds[f].begin(), folds[f].end());
      std::vector<std::size_t> train_rows, test_rows;
      for (std::size_t i = 0; i < table.gauge_ids.size(); ++i) {
        (test.count(table.gauge_ids[i]) ? test_rows : train_rows).push_back(i);
      }
      Matrix xtr(train_rows.size(), table.features.size()), xte(test_rows.size(), table.features.size());
      std::vector<double> ytr;
      for (std::size_t r = 0; r < train_rows.size(); ++r) {
        std::copy_n(table.values.row(train_rows[r]).begin(), table.features.size(), xtr.row(r).begin());
        ytr.push_back(data.a[train_rows[r]]);
      }
      for (std::size_t r = 0; r < test_rows.size(); ++r) {
        std::copy_n(table.values.row(test_rows[r]).begin(), table.features.size(), xte.row(r).begin());
      }
      const Forest fold_forest = fit_skill_regressor(xtr, ytr, table.features, fc, cfg.seed + f + 1);
      const auto p = predict_values(fold_forest, xte);
      for (std::size_t r = 0; r < test_rows.size(); ++r) predicted[test_rows[r]] = p[r];
    }
    evaluation["r2_out_of_fold"] = r_squared(predicted, data.a);
    forest = fit_skill_regressor(table.values, data.a, table.features, fc, cfg.seed);
    ctx.write("predicted_f1.csv", predicted_csv(table.gauge_ids, predicted));
  } else {
    fc.task = ForestTask::classification;
    std::vector<double> labels;
    std::vector<std::string> class_names;
    ClassifierEvaluation ev;
    if (which) {
      labels = which_model_labels(data.a, data.b, cfg.skill.similarity_band);
      ev = which_model_where(table.values, table.features, data.a, data.b, cfg.skill.folds, fc, cfg.seed,
                             cfg.skill.similarity_band);
      class_names = {args.a + "_better", "similar", args.b + "_better"};
      evaluation["model_b"] = args.b;
      evaluation["similarity_band"] = cfg.skill.similarity_band;
    } else {
      labels = above_mean_labels(data.a);
      ev = evaluate_classifier(table.values, labels, table.features, cfg.skill.folds, fc, cfg.seed);
      class_names = {"below_mean", "above_mean"};
    }
    evaluation.update(evaluation_json(ev));
    evaluation["classes"] = class_names;
    forest = fit_forest(table.values, labels, table.features, fc, cfg.seed);
    ctx.write("confusion.csv", confusion_csv(ev.confusion, class_names));
  }
  evaluation["schema_hash"] = forest.schema_hash();
  ctx.write("skill_model.json", forest_json(forest));
  ctx.write("importances.csv", importances_csv(forest, attribute_correlations(table.values, data.a)));
  ctx.write("evaluation.json", evaluation.dump(2) + "\n");
  ctx.finish();
}

void run_skill_predict(const SkillPredictArgs& args) {
  const RunConfig cfg = resolve_config(args.common);
  if (args.model.empty()) throw ValidationError("skill-predict needs --model");
  RunContext ctx("skill-predict", cfg, args.common.out, args.common.argv);
  const Forest forest = parse_forest(read_file(args.model));
  const Dataset ds = load_dataset(data_root(cfg));
  for (const auto& f : forest.features) {
    if (std::find(ds.schema.attributes.begin(), ds.schema.attributes.end(), f) == ds.schema.attributes.end()) {
      throw ValidationError("schema mismatch: attribute '" + f + "' is missing");
    }
  }
  const AttributeTable table = attribute_table(ds.basins, forest.features);
  std::vector<double> values;
  if (forest.n_classes == 0) {
    values = predict_values(forest, table.values);
  } else {
    for (std::size_t i = 0; i < table.values.rows; ++i) {
      values.push_back(static_cast<double>(forest.predict_class(table.values.row(i))));
    }
  }
  ctx.write("predicted_f1.csv", predicted_csv(table.gauge_ids, values));
  ctx.finish();
}

// ------------------------------------------------------------------ report

void run_report(const ReportArgs& args) {
  const RunConfig cfg = resolve_config(args.common);
  if (args.scores.empty()) throw ValidationError("report needs --scores");
  RunContext ctx("report", cfg, args.common.out, args.common.argv);
  std::map<std::string, std::string> continents;
  std::vector<std::string> notes;
  try {
    continents = continent_labels(cfg);
  } catch (const Error& e) {
    notes.push_back(std::string("continent view skipped: ") + e.what());
  }

  std::ostringstream summary;
  summary << "view,metric,model,T,lead,continent,n,q1,median,q3,whisker_low,whisker_high,outliers\n";
  for (const auto& metric : args.metrics) {
    const auto rows = load_scores(args.scores, metric);
    const auto models = models_in(rows);
    std::set<double> periods;
    std::set<int> leads;
    std::set<std::string> conts;
    for (const auto& r : rows) {
      periods.insert(r.return_period);
      leads.insert(r.lead);
      if (continents.count(r.gauge_id)) conts.insert(continents.at(r.gauge_id));
    }

    auto collect = [&](const std::string& model, double T, int lead, const std::string* continent) {
      std::vector<double> v;
      for (const auto& r : rows) {
        if (r.model != model || r.lead != lead || std::abs(r.return_period - T) > 1e-9 || !r.value) continue;
        if (continent != nullptr && (!continents.count(r.gauge_id) || continents.at(r.gauge_id) != *continent)) {
          continue;
        }
        v.push_back(*r.value);
      }
      return v;
    };
    auto emit = [&](const std::string& view, const std::string& model, double T, int lead, const std::string& cont,
                    const std::vector<double>& v) -> std::optional<BoxStats> {
      if (v.empty()) return std::nullopt;
      const BoxStats b = box_stats(v);
      summary << view << ',' << metric << ',' << model << ',' << fmt_t(T) << ',' << lead << ',' << cont << ',' << b.n
              << ',' << csv::format_number(b.q1) << ',' << csv::format_number(b.median) << ','
              << csv::format_number(b.q3) << ',' << csv::format_number(b.whisker_low) << ','
              << csv::format_number(b.whisker_high) << ',' << b.outliers.size() << '\n';
      return b;
    };

    const int nowcast = leads.empty() ? 0 : *leads.begin();
    // Scores by return period at the nowcast lead.
    {
      std::vector<std::string> cats;
      for (double T : periods) cats.push_back("T=" + fmt_t(T));
      std::vector<BoxSeries> series;
      for (const auto& m : models) {
        BoxSeries s{m, {}};
        for (double T : periods) s.boxes.push_back(emit("return_period", m, T, nowcast, "", collect(m, T, nowcast, nullptr)));
        series.push_back(std::move(s));
      }
      ctx.write(metric + "_by_return_period.svg",
                box_plot_svg(metric + " by return period (lead " + std::to_string(nowcast) + ")", metric, cats, series));
    }
    // Scores by lead, one plot per return period.
    for (double T : periods) {
      std::vector<std::string> cats;
      for (int l : leads) cats.push_back("lead " + std::to_string(l));
      std::vector<BoxSeries> series;
      for (const auto& m : models) {
        BoxSeries s{m, {}};
        for (int l : leads) s.boxes.push_back(emit("lead", m, T, l, "", collect(m, T, l, nullptr)));
        series.push_back(std::move(s));
      }
      ctx.write(metric + "_by_lead_T" + fmt_t(T) + ".svg",
                box_plot_svg(metric + " by lead time (T=" + fmt_t(T) + ")", metric, cats, series));
    }
    // Scores by continent, one plot per return period.
    if (!conts.empty()) {
      for (double T : periods) {
        std::vector<std::string> cats(conts.begin(), conts.end());
        std::vector<BoxSeries> series;
        for (const auto& m : models) {
          BoxSeries s{m, {}};
          for (const auto& c : cats) s.boxes.push_back(emit("continent", m, T, nowcast, c, collect(m, T, nowcast, &c)));
          series.push_back(std::move(s));
        }
        ctx.write(metric + "_by_continent_T" + fmt_t(T) + ".svg",
                  box_plot_svg(metric + " by continent (T=" + fmt_t(T) + ")", metric, cats, series));
      }
    }
  }
  ctx.write("summary.csv", summary.str());
  if (!notes.empty()) ctx.write("notes.json", json(notes).dump(2) + "\n");
  ctx.finish();
}

}  // namespace hydrocast::cli
