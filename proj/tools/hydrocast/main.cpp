#include <iostream>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include "CLI11.hpp"
#include "hydrocast/commands.hpp"
#include "hydrocast/error.hpp"
#include "hydrocast/run_context.hpp"
#include "hydrocast/training.hpp"

using namespace hydrocast;
using namespace hydrocast::cli;

namespace {

void add_common(CLI::App* cmd, CommonArgs& c) {
  cmd->add_option("--config", c.config, "Run configuration JSON")->check(CLI::ExistingFile);
  cmd->add_option("--seed", c.seed, "Override the configured seed");
  cmd->add_option("--jobs", c.jobs, "Worker threads");
  cmd->add_option("--out", c.out, "Output directory (default: <output_root>/<command>)");
}

}  // namespace

int main(int argc, char** argv) {
#if defined(__GLIBC__)
  // Training frees and reallocates the same graph buffers every step.
  mallopt(M_TRIM_THRESHOLD, 512 << 20);
  mallopt(M_MMAP_THRESHOLD, 256 << 20);
#endif
  CLI::App app{"hydrocast: streamflow forecasting and evaluation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", HYDROCAST_VERSION);
  std::vector<std::string> args(argv, argv + argc);

  SynthArgs synth;
  auto* c_synth = app.add_subcommand("synth", "Write a synthetic linear-reservoir dataset");
  add_common(c_synth, synth.common);
  c_synth->add_option("--basins", synth.options.basins);
  c_synth->add_option("--years", synth.options.years);
  c_synth->add_option("--start-year", synth.options.start_year);
  c_synth->add_option("--area-outliers", synth.options.area_outliers);
  c_synth->add_option("--missing", synth.options.missing_discharge, "Fraction of discharge days dropped");

  TrainArgs train;
  auto* c_train = app.add_subcommand("train", "Train an ensemble of forecast models");
  add_common(c_train, train.common);
  c_train->add_option("--plan", train.plan, "Split plan; trains on the fold's training side");
  c_train->add_option("--fold", train.fold);

  ForecastArgs forecast;
  auto* c_forecast = app.add_subcommand("forecast", "Write ensemble-median forecasts to a prediction archive");
  add_common(c_forecast, forecast.common);
  c_forecast->add_option("--models", forecast.models, "Directory with member_*.json checkpoints")->required();
  c_forecast->add_option("--plan", forecast.plan);
  c_forecast->add_option("--fold", forecast.fold);

  ReturnPeriodArgs rp;
  auto* c_rp = app.add_subcommand("return-periods", "Fit log-Pearson III thresholds for observations and models");
  add_common(c_rp, rp.common);
  c_rp->add_option("--predictions", rp.predictions, "name=predictions.csv (repeatable)")->required();

  EventArgs ev;
  auto* c_ev = app.add_subcommand("eval-events", "Event precision, recall and F1 per gauge, T and lead");
  add_common(c_ev, ev.common);
  c_ev->add_option("--predictions", ev.predictions, "name=predictions.csv (repeatable)")->required();
  c_ev->add_option("--thresholds", ev.thresholds, "return_periods.csv")->required();

  HydroArgs hy;
  auto* c_hy = app.add_subcommand("eval-hydro", "Hydrograph metrics per gauge and lead");
  add_common(c_hy, hy.common);
  c_hy->add_option("--predictions", hy.predictions, "name=predictions.csv (repeatable)")->required();

  CompareArgs cmp;
  auto* c_cmp = app.add_subcommand("compare", "Paired Wilcoxon comparison of two models");
  add_common(c_cmp, cmp.common);
  c_cmp->add_option("--scores", cmp.scores, "event_scores.csv or hydro_metrics.csv")->required();
  c_cmp->add_option("--a", cmp.a)->required();
  c_cmp->add_option("--b", cmp.b)->required();
  c_cmp->add_option("--metric", cmp.metric);
  c_cmp->add_option("--grouping", cmp.grouping, "all | continent | T | lead");
  c_cmp->add_option("--T", cmp.return_period);
  c_cmp->add_option("--lead", cmp.lead);
  c_cmp->add_option("--lead-a", cmp.lead_a);
  c_cmp->add_option("--lead-b", cmp.lead_b);

  SplitArgs split;
  auto* c_split = app.add_subcommand("cv-split", "Generate a cross-validation split plan");
  add_common(c_split, split.common);
  c_split->add_option("--scheme", split.scheme, "random | continent | climate | terminal-basin");
  c_split->add_option("--k", split.k);
  c_split->add_option("--temporal-folds", split.temporal_folds);
  c_split->add_option("--buffer-days", split.buffer_days);

  SkillFitArgs sf;
  auto* c_sf = app.add_subcommand("skill-fit", "Fit the random-forest skill predictor");
  add_common(c_sf, sf.common);
  c_sf->add_option("--scores", sf.scores)->required();
  c_sf->add_option("--task", sf.task, "above-mean | which-model | regression");
  c_sf->add_option("--a", sf.a)->required();
  c_sf->add_option("--b", sf.b);
  c_sf->add_option("--metric", sf.metric);
  c_sf->add_option("--T", sf.return_period);
  c_sf->add_option("--lead", sf.lead);

  SkillPredictArgs sp;
  auto* c_sp = app.add_subcommand("skill-predict", "Apply a fitted skill model to every basin");
  add_common(c_sp, sp.common);
  c_sp->add_option("--model", sp.model, "skill_model.json")->required();

  ReportArgs rep;
  auto* c_rep = app.add_subcommand("report", "Box-plot summaries of event scores");
  add_common(c_rep, rep.common);
  c_rep->add_option("--scores", rep.scores)->required();
  c_rep->add_option("--metrics", rep.metrics);

  std::string command = "hydrocast";
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << error_json("usage_error", e.what(), command);
    return 2;
  }

  try {
    for (auto* sub : app.get_subcommands()) command = sub->get_name();
    for (auto* c : {&synth.common, &train.common, &forecast.common, &rp.common, &ev.common, &hy.common, &cmp.common,
                    &split.common, &sf.common, &sp.common, &rep.common}) {
      c->argv = args;
    }
    if (command == "synth") run_synth(synth);
    if (command == "train") run_train(train);
    if (command == "forecast") run_forecast(forecast);
    if (command == "return-periods") run_return_periods(rp);
    if (command == "eval-events") run_eval_events(ev);
    if (command == "eval-hydro") run_eval_hydro(hy);
    if (command == "compare") run_compare(cmp);
    if (command == "cv-split") run_cv_split(split);
    if (command == "skill-fit") run_skill_fit(sf);
    if (command == "skill-predict") run_skill_predict(sp);
    if (command == "report") run_report(rep);
  } catch (const TrainingDiverged& e) {
    std::cerr << error_json("training_diverged",
                            std::string(e.what()) + " (step " + std::to_string(e.step()) + ")", command);
    return 1;
  } catch (const Error& e) {
    std::cerr << error_json(e.code(), e.what(), command);
    return 1;
  } catch (const std::exception& e) {
    std::cerr << error_json("internal_error", e.what(), command);
    return 1;
  }
  return 0;
}
