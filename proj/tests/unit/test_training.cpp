#include <cmath>
#include <numeric>

#include "doctest.h"
#include "fixtures.hpp"
#include "hydrocast/checkpoint.hpp"
#include "hydrocast/ensemble.hpp"
#include "hydrocast/error.hpp"
#include "hydrocast/synthetic.hpp"
#include "hydrocast/training.hpp"

using namespace hydrocast;

namespace {

struct Setup {
  SyntheticDataset data;
  FeatureTransform transform;
  std::vector<PreparedBasin> prepared;
  ModelConfig config;
};

Setup setup(std::size_t basins = 3) {
  SyntheticOptions o;
  o.basins = basins;
  o.years = 2;
  Setup s{make_synthetic_dataset(o), {}, {}, {}};
  const auto schema = InputSchema::from_sources(s.data.dataset.schema, {"era5l"}, {"hres"},
                                                {{"hres.precip", {"era5l.precip"}}}, {"recession_k", "runoff_coef"});
  s.transform = fit_transform(s.data.dataset.basins, schema);
  for (const auto& r : s.data.dataset.basins) s.prepared.push_back(impute(r, s.transform));
  s.config = ModelConfig::desk_scale();
  s.config.hidden_size = 8;
  s.config.hindcast_length = 20;
  s.config.batch_size = 8;
  s.config.training_steps = 60;
  s.config.learning_rate = 1e-2;
  size_inputs(s.config, s.transform);
  return s;
}

double mean(std::span<const double> v) { return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()); }

}  // namespace

TEST_CASE("input widths follow the transform") {
  const auto s = setup();
  CHECK(s.config.hindcast_dynamic == 4);
  CHECK(s.config.forecast_dynamic == 2);
  CHECK(s.config.static_inputs == 2);
  CHECK(s.prepared[0].hindcast.cols == 4);
}

TEST_CASE("samples need a full window inside the period") {
  const auto s = setup(1);
  const auto all = enumerate_samples(s.prepared, s.config);
  const std::size_t n = s.prepared[0].num_days;
  CHECK(all.size() <= n - s.config.hindcast_length - 7);
  CHECK(all.front().issue == s.config.hindcast_length);
  CHECK(all.back().issue == n - 8);
  const Date start = s.prepared[0].start;
  const std::vector<DateRange> period{{start, start + 99}};
  const auto some = enumerate_samples(s.prepared, s.config, period);
  for (const auto& r : some) {
    CHECK(r.issue >= s.config.hindcast_length);
    CHECK(r.issue + 7 <= 99);
  }
  CHECK(some.size() <= 100 - s.config.hindcast_length - 7);
}

TEST_CASE("assembled batches are time-major and carry the masks") {
  const auto s = setup(2);
  const std::vector<SampleRef> refs{{0, 40}, {1, 50}};
  const auto b = assemble_batch(s.prepared, refs, s.config);
  const std::size_t ei = s.config.encoder_inputs();
  CHECK(b.hindcast.size() == s.config.hindcast_length * 2 * ei);
  // Row t*B + k; the encoder sees days issue-T .. issue-1 and the decoder issue .. issue+7.
  const std::size_t T = s.config.hindcast_length;
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t c = 0; c < s.prepared[1].hindcast.cols; ++c) {
      CHECK(b.hindcast[((t * 2) + 1) * ei + c] == s.prepared[1].hindcast(50 - T + t, c));
    }
    CHECK(b.hindcast[((t * 2) + 1) * ei + 4] == s.prepared[1].statics[0]);
  }
  const std::size_t di = s.config.decoder_inputs();
  for (std::size_t lead = 0; lead < 8; ++lead) {
    CHECK(b.forecast[(lead * 2) * di] == s.prepared[0].forecast(40 + lead, 0));
  }
  for (std::size_t lead = 0; lead < 8; ++lead) {
    const double want = s.prepared[0].target[40 + lead];
    const std::size_t row = lead * 2;
    if (std::isnan(want)) {
      CHECK(b.mask[row] == 0.0);
    } else {
      CHECK(b.mask[row] == 1.0);
      CHECK(b.targets[row] == want);
    }
  }
}

TEST_CASE("training lowers the loss and is reproducible") {
  const auto s = setup();
  const auto samples = enumerate_samples(s.prepared, s.config);
  const double before = evaluate_nll(ForecastModelState::initialize(s.config, 4), s.config, s.prepared, samples);
  std::size_t calls = 0;
  TrainOptions opts;
  opts.on_step = [&](std::size_t, double) { ++calls; };
  const auto a = train(s.prepared, samples, s.config, 4, opts);
  CHECK(calls == s.config.training_steps);
  const double after = evaluate_nll(a.state, s.config, s.prepared, samples);
  CHECK(after < before);
  const std::span<const double> loss(a.trace.loss);
  CHECK(mean(loss.last(10)) < mean(loss.first(10)));

  const auto b = train(s.prepared, samples, s.config, 4);
  CHECK(b.trace.loss == a.trace.loss);
  CHECK(b.state.encoder_bias.values == a.state.encoder_bias.values);
  const auto c = train(s.prepared, samples, s.config, 5);
  CHECK(c.trace.loss != a.trace.loss);
}

TEST_CASE("a runaway learning rate raises TrainingDiverged") {
  auto s = setup(1);
  s.config.learning_rate = 1e300;
  s.config.cosine_decay = false;
  const auto samples = enumerate_samples(s.prepared, s.config);
  CHECK_THROWS_AS(train(s.prepared, samples, s.config, 1), TrainingDiverged);
  CHECK_THROWS_AS(train(s.prepared, std::span<const SampleRef>{}, s.config, 1), DataError);
}

TEST_CASE("checkpoints round-trip and ensembles average their members") {
  auto s = setup(2);
  s.config.training_steps = 5;
  const auto samples = enumerate_samples(s.prepared, s.config);
  std::vector<TrainedModel> members;
  for (std::uint64_t seed : {1u, 2u}) {
    members.push_back({s.config, s.transform, train(s.prepared, samples, s.config, seed).state, seed});
  }
  fixtures::TempDir tmp("ckpt");
  save_checkpoint(members[0], tmp.path() / "m.json");
  const auto loaded = load_checkpoint(tmp.path() / "m.json");
  CHECK(checkpoint_json(loaded) == checkpoint_json(members[0]));
  CHECK(loaded.seed == 1);
  CHECK_THROWS_AS(parse_checkpoint("{\"format\": \"other\"}"), ParseError);

  const auto& rec = s.data.dataset.basins[0];
  const auto dates = valid_issue_dates(rec, s.config);
  REQUIRE(dates.size() > 10);
  const std::vector<Date> some(dates.begin(), dates.begin() + 10);
  const auto m0 = predict_medians(members[0], rec, some);
  const auto m0b = predict_medians(loaded, rec, some);
  CHECK(m0.data == m0b.data);
  const auto f = predict_ensemble(members, rec, some, 2);
  const auto m1 = predict_medians(members[1], rec, some);
  for (std::size_t i = 0; i < m0.data.size(); ++i) CHECK(f.mean.data[i] == doctest::Approx((m0.data[i] + m1.data[i]) / 2));
  CHECK_THROWS_AS(predict_ensemble(members, rec, some, 3), ValidationError);
  const std::vector<Date> too_early{rec.start};
  CHECK_THROWS_AS(predict_medians(members[0], rec, too_early), ValidationError);

  PredictionArchive archive;
  archive.add(f);
  write_predictions(archive, tmp.path() / "pred.csv");
  const auto back = read_predictions(tmp.path() / "pred.csv");
  CHECK(back.values == archive.values);
  const auto lead3 = back.lead_series(rec.gauge_id, 3);
  CHECK(lead3.start == some.front() + 3);
  CHECK(lead3.values.front() == f.mean(0, 3));
}
