#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "maskcast/dataio.hpp"
#include "maskcast/errors.hpp"
#include "maskcast/models.hpp"
#include "maskcast/training.hpp"
#include "maskcast/windowing.hpp"

#include <algorithm>
#include <cmath>

using namespace maskcast;

namespace {

ModelConfig tiny_lstm() {
	ModelConfig c;
	c.architecture = Architecture::lstm;
	c.embedding_dim = 3;
	c.lstm_layers = 1;
	c.lstm_hidden = 12;
	return c;
}

struct Fixture {
	FeatureTable table;
	NormStats stats;
	WindowSpec spec;
	std::vector<Window> train, val;
	InputLayout layout;
};

Fixture make_fixture(const FeatureTable &table, int history, int max_horizon) {
	Fixture f;
	f.table = table;
	f.spec.history = history;
	f.spec.max_horizon = max_horizon;
	auto split = split_by_days(f.table, f.table.n_days() * 8 / 10);
	f.stats = compute_norm_stats(split.train);
	f.train = make_windows(split.train, f.spec, f.stats);
	f.val = make_windows(split.validation, f.spec, f.stats);
	f.layout.zones = f.table.zones;
	return f;
}

/// Demand with independent per-day jitter around a constant; weather random.
FeatureTable jitter_table(std::size_t days, double level, double jitter, std::uint64_t seed) {
	FeatureTable t;
	t.zones = {"Z1"};
	Rng rng(seed);
	for (std::size_t d = 0; d < days; ++d) {
		t.dates.push_back(
		    date_from_day_number(day_number(Date{2015, 1, 1}) + static_cast<std::int64_t>(d)));
		t.calendar.push_back({t.dates.back().month, t.dates.back().day, day_of_week(t.dates.back())});
		t.dry_bulb.push_back(rng.uniform(20, 90));
		t.dew_point.push_back(t.dry_bulb.back() - rng.uniform(2, 20));
		t.peak_mw.push_back(level + jitter * (2.0 * rng.uniform() - 1.0));
	}
	t.validate();
	return t;
}

} // namespace

TEST_CASE("pinball loss closed forms") {
	CHECK(pinball_loss(10.0, 12.0, 0.5) == doctest::Approx(1.0));
	CHECK(pinball_loss(12.0, 10.0, 0.5) == doctest::Approx(1.0));
	CHECK(pinball_loss(0.0, 1.0, 0.05) == doctest::Approx(0.95));
	CHECK(pinball_loss(5.0, 5.0, 0.3) == 0.0);
	CHECK_THROWS_AS(pinball_loss(1.0, 1.0, 0.0), UsageError);
	CHECK_THROWS_AS(pinball_loss(1.0, 1.0, 1.0), UsageError);
	CHECK_THROWS_AS(pinball_loss(1.0, 1.0, -0.2), UsageError);
}

TEST_CASE("the mean pinball loss is minimized at the sample tau-quantile") {
	Rng rng(17);
	std::vector<double> sample;
	for (int i = 0; i < 101; ++i) {
		sample.push_back(rng.uniform(-50.0, 50.0));
	}
	auto mean_loss = [&](double candidate, double tau) {
		double s = 0.0;
		for (double y : sample) {
			s += pinball_loss(y, candidate, tau);
		}
		return s / static_cast<double>(sample.size());
	};
	std::vector<double> sorted = sample;
	std::sort(sorted.begin(), sorted.end());
	for (double tau : {0.05, 0.3, 0.5, 0.95}) {
		// grid search over all sample points (a minimizer always sits on one)
		double best = sorted[0];
		for (double cand : sorted) {
			if (mean_loss(cand, tau) < mean_loss(best, tau)) {
				best = cand;
			}
		}
		// order statistic ceil(n*tau) is the canonical tau-quantile
		const auto idx =
		    static_cast<std::size_t>(std::ceil(tau * static_cast<double>(sample.size()))) - 1;
		CHECK(mean_loss(sorted[idx], tau) == doctest::Approx(mean_loss(best, tau)).epsilon(1e-12));
	}
}

TEST_CASE("pinball subgradient matches finite differences away from the kink") {
	Rng rng(23);
	for (int i = 0; i < 1000; ++i) {
		const double y = rng.uniform(-10.0, 10.0);
		double y_hat = rng.uniform(-10.0, 10.0);
		if (std::abs(y_hat - y) < 1e-3) {
			y_hat = y + (y_hat >= y ? 1e-3 : -1e-3);
		}
		const double tau = rng.uniform(0.01, 0.99);
		const double analytic = (y <= y_hat ? 1.0 : 0.0) - tau;
		const double h = std::min(1e-4, std::abs(y_hat - y) / 2.0);
		const double fd =
		    (pinball_loss(y, y_hat + h, tau) - pinball_loss(y, y_hat - h, tau)) / (2.0 * h);
		REQUIRE(std::abs(analytic - fd) < 1e-6);
	}
}

TEST_CASE("masked quantile loss reference reduction") {
	const std::vector<double> taus = {0.05, 0.5, 0.95};

	SUBCASE("zero when prediction equals truth on masked steps") {
		// batch 2, length 3, m 2, Q 3; only the final step masked
		std::vector<double> truth(2 * 3 * 2);
		for (std::size_t i = 0; i < truth.size(); ++i) {
			truth[i] = static_cast<double>(i);
		}
		std::vector<double> pred(2 * 3 * 2 * 3, -99.0); // garbage off the mask
		std::vector<std::uint8_t> mask = {0, 0, 1};
		for (std::int64_t b = 0; b < 2; ++b) {
			for (std::int64_t v = 0; v < 2; ++v) {
				for (std::int64_t q = 0; q < 3; ++q) {
					pred[static_cast<std::size_t>(((b * 3 + 2) * 2 + v) * 3 + q)] =
					    truth[static_cast<std::size_t>((b * 3 + 2) * 2 + v)];
				}
			}
		}
		CHECK(masked_quantile_loss(pred, truth, mask, 2, 3, 2, taus) == 0.0);

		// perturbing an unmasked step's prediction changes nothing
		pred[0] = 1e9;
		CHECK(masked_quantile_loss(pred, truth, mask, 2, 3, 2, taus) == 0.0);
	}
	SUBCASE("single masked cell equals the sum of three pinball losses") {
		std::vector<double> truth = {3.0};
		std::vector<double> pred = {2.0, 3.5, 7.0};
		std::vector<std::uint8_t> mask = {1};
		const double expect = pinball_loss(3.0, 2.0, 0.05) + pinball_loss(3.0, 3.5, 0.5) +
		                      pinball_loss(3.0, 7.0, 0.95);
		CHECK(masked_quantile_loss(pred, truth, mask, 1, 1, 1, taus) ==
		      doctest::Approx(expect).epsilon(1e-15));
	}
	SUBCASE("empty mask is an error") {
		std::vector<double> truth = {1.0};
		std::vector<double> pred = {1.0, 1.0, 1.0};
		std::vector<std::uint8_t> mask = {0};
		CHECK_THROWS_AS(masked_quantile_loss(pred, truth, mask, 1, 1, 1, taus), UsageError);
	}
	SUBCASE("graph-op loss agrees with the reference on random tensors") {
		Rng rng(31);
		const std::int64_t batch = 4, length = 5, m = 2;
		std::vector<double> pred(static_cast<std::size_t>(batch * length * m * 3));
		std::vector<double> truth(static_cast<std::size_t>(batch * length * m));
		for (auto &v : pred) {
			v = rng.uniform(-2, 2);
		}
		for (auto &v : truth) {
			v = rng.uniform(-2, 2);
		}
		std::vector<std::uint8_t> mask = {0, 0, 1, 1, 1};
		const double reference = masked_quantile_loss(pred, truth, mask, batch, length, m, taus);

		nn::Tensor predt(batch * length, m * 3);
		for (std::size_t i = 0; i < pred.size(); ++i) {
			predt.data[i] = static_cast<float>(pred[i]);
		}
		nn::Tensor trutht(batch * length, m);
		for (std::size_t i = 0; i < truth.size(); ++i) {
			trutht.data[i] = static_cast<float>(truth[i]);
		}
		std::vector<float> weights(static_cast<std::size_t>(batch * length), 0.0f);
		for (std::int64_t b = 0; b < batch; ++b) {
			for (std::int64_t t = 0; t < length; ++t) {
				weights[static_cast<std::size_t>(b * length + t)] = mask[static_cast<std::size_t>(t)];
			}
		}
		auto loss = nn::quantile_loss(nn::make_constant(predt), trutht, weights, taus);
		CHECK(loss->value.data[0] == doctest::Approx(reference).epsilon(1e-5));
	}
}

TEST_CASE("formulation input builders") {
	auto f = make_fixture(jitter_table(80, 100.0, 5.0, 3), 6, 3);
	std::vector<const Window *> chunk = {&f.train[0], &f.train[1]};

	SUBCASE("rsf batch: history steps real, target step blank") {
		StepBatch sb = rsf_step_batch(chunk, f.layout);
		CHECK(sb.length == 7); // T+1
		const auto r = static_cast<std::size_t>(sb.row(0, 6));
		CHECK(sb.categorical[r * 3 + 0] == InputLayout::cardinalities[0]);
		CHECK(sb.categorical[r * 3 + 1] == InputLayout::cardinalities[1]);
		CHECK(sb.categorical[r * 3 + 2] == InputLayout::cardinalities[2]);
		for (int c = 0; c < f.layout.continuous_channels(); ++c) {
			CHECK(sb.continuous.at(sb.row(0, 6), c) == 0.0f);
		}
		CHECK(sb.continuous.at(sb.row(0, 6), sb.continuous.cols - 1) == 1.0f); // marker
		CHECK(sb.categorical[static_cast<std::size_t>(sb.row(0, 5)) * 3] ==
		      f.train[0].categorical[5 * 3]);
	}
	SUBCASE("dmf batch: the whole future block is blank") {
		StepBatch sb = dmf_step_batch(chunk, f.layout);
		CHECK(sb.length == f.spec.window_len());
		for (std::int64_t t = f.spec.history; t < sb.length; ++t) {
			for (int c = 0; c < f.layout.continuous_channels(); ++c) {
				CHECK(sb.continuous.at(sb.row(1, t), c) == 0.0f);
			}
			CHECK(sb.categorical[static_cast<std::size_t>(sb.row(1, t)) * 3] ==
			      InputLayout::cardinalities[0]);
		}
	}
	SUBCASE("mmmpf batch: fills only on the masked suffix, predictors bit-exact") {
		Rng rng(7);
		auto masked = apply_mask(chunk, 2, rng, f.stats);
		StepBatch sb = mmmpf_step_batch(masked, f.layout);
		const int zp = f.layout.predictor_channels();
		for (std::int64_t t = 0; t < sb.length; ++t) {
			for (int c = 0; c < zp; ++c) {
				CHECK(sb.continuous.at(sb.row(0, t), c) ==
				      f.train[0].predictors[static_cast<std::size_t>(t) * zp + c]);
			}
		}
		for (std::int64_t t = 0; t + 2 < sb.length; ++t) {
			CHECK(sb.continuous.at(sb.row(0, t), zp) ==
			      f.train[0].forecast[static_cast<std::size_t>(t)]);
		}
	}
}

TEST_CASE("mmmpf training drives quantile outputs to the degenerate optimum") {
	// demand nearly constant at 100 MW: every quantile should land within 1%
	auto f = make_fixture(jitter_table(260, 100.0, 0.05, 11), 6, 3);
	auto model = build_model(tiny_lstm(), f.layout, 2);
	TrainingConfig tc;
	tc.method = Method::mmmpf;
	tc.batch_size = 64;
	tc.epochs = 20;
	tc.learning_rate = 0.01;
	tc.seed = 5;
	auto report = train_mmmpf(*model, f.train, f.val, f.stats, f.spec, tc);
	CHECK(report.best_val_loss < report.epochs.front().val_loss);

	Rng rng(9);
	std::vector<const Window *> chunk = {&f.val.front()};
	auto masked = apply_mask(chunk, f.spec.max_horizon + 1, rng, f.stats);
	StepBatch sb = mmmpf_step_batch(masked, f.layout);
	auto out = model->forward(sb, false, nullptr);
	const int c = f.stats.forecast_channel(0);
	for (std::int64_t t = f.spec.history; t < sb.length; ++t) {
		for (int q = 0; q < 3; ++q) {
			const double mw = f.stats.denormalize(out->value.at(t, q), c);
			CHECK(std::abs(mw - 100.0) < 1.0); // within 1% of the constant
		}
	}
}

TEST_CASE("on pure noise the quantile heads recover the noise quantiles") {
	// y ~ uniform(95, 105): quantiles 95.5 / 100 / 104.5
	auto f = make_fixture(jitter_table(400, 100.0, 5.0, 13), 6, 3);
	auto model = build_model(tiny_lstm(), f.layout, 3);
	TrainingConfig tc;
	tc.method = Method::mmmpf;
	tc.batch_size = 64;
	tc.epochs = 40;
	tc.learning_rate = 0.01;
	tc.seed = 6;
	train_mmmpf(*model, f.train, f.val, f.stats, f.spec, tc);

	Rng rng(10);
	std::vector<const Window *> chunk = {&f.val.front()};
	auto masked = apply_mask(chunk, f.spec.max_horizon + 1, rng, f.stats);
	StepBatch sb = mmmpf_step_batch(masked, f.layout);
	auto out = model->forward(sb, false, nullptr);
	const int c = f.stats.forecast_channel(0);
	const double expect[3] = {95.5, 100.0, 104.5};
	for (std::int64_t t = f.spec.history; t < sb.length; ++t) {
		for (int q = 0; q < 3; ++q) {
			const double mw = f.stats.denormalize(out->value.at(t, q), c);
			CHECK(std::abs(mw - expect[q]) < 1.2);
		}
	}
}

TEST_CASE("rsf learns a one-step trend and charges loss only at the next step") {
	FeatureTable t;
	t.zones = {"Z1"};
	Rng wr(19);
	for (std::size_t d = 0; d < 300; ++d) {
		t.dates.push_back(
		    date_from_day_number(day_number(Date{2016, 1, 1}) + static_cast<std::int64_t>(d)));
		t.calendar.push_back({t.dates.back().month, t.dates.back().day, day_of_week(t.dates.back())});
		t.dry_bulb.push_back(wr.uniform(20, 90));
		t.dew_point.push_back(t.dry_bulb.back() - 10.0);
		t.peak_mw.push_back(100.0 + static_cast<double>(d)); // deterministic ramp
	}
	t.validate();
	auto f = make_fixture(t, 8, 1);
	auto model = build_model(tiny_lstm(), f.layout, 4);
	TrainingConfig tc;
	tc.method = Method::rsf;
	tc.batch_size = 64;
	tc.epochs = 60;
	tc.learning_rate = 0.01;
	tc.seed = 7;
	auto report = train_rsf(*model, f.train, f.val, f.stats, f.spec, tc);
	CHECK(report.epochs.back().train_loss < 0.15 * report.epochs.front().train_loss);

	SUBCASE("loss support: only the step-T target matters") {
		std::vector<const Window *> chunk = {&f.train[0]};
		StepBatch sb = rsf_step_batch(chunk, f.layout);
		nn::Tensor targets = window_targets(chunk, sb.length);
		std::vector<float> weights(static_cast<std::size_t>(sb.length), 0.0f);
		weights.back() = 1.0f;
		auto out = model->forward(sb, false, nullptr);
		auto base = nn::quantile_loss(out, targets, weights, model->config().quantile_levels);
		nn::Tensor bumped = targets;
		for (std::int64_t tstep = 0; tstep + 1 < sb.length; ++tstep) {
			bumped.at(tstep, 0) += 5.0f;
		}
		auto moved = nn::quantile_loss(out, bumped, weights, model->config().quantile_levels);
		CHECK(base->value.data[0] == moved->value.data[0]);
	}
	SUBCASE("method mismatch is rejected") {
		TrainingConfig bad = tc;
		bad.method = Method::dmf;
		CHECK_THROWS_AS(train_rsf(*model, f.train, f.val, f.stats, f.spec, bad), UsageError);
	}
}

TEST_CASE("training replays bitwise under a fixed seed") {
	auto f = make_fixture(jitter_table(200, 100.0, 8.0, 29), 5, 2);
	TrainingConfig tc;
	tc.method = Method::mmmpf;
	tc.batch_size = 32;
	tc.epochs = 4;
	tc.seed = 12;

	auto a = build_model(tiny_lstm(), f.layout, 8);
	auto ra = train_mmmpf(*a, f.train, f.val, f.stats, f.spec, tc);
	auto b = build_model(tiny_lstm(), f.layout, 8);
	auto rb = train_mmmpf(*b, f.train, f.val, f.stats, f.spec, tc);

	REQUIRE(ra.epochs.size() == rb.epochs.size());
	for (std::size_t e = 0; e < ra.epochs.size(); ++e) {
		CHECK(ra.epochs[e].train_loss == rb.epochs[e].train_loss);
		CHECK(ra.epochs[e].val_loss == rb.epochs[e].val_loss);
	}
	auto &pa = a->named_parameters();
	auto &pb = b->named_parameters();
	for (std::size_t i = 0; i < pa.size(); ++i) {
		CHECK(pa[i].second->value.data == pb[i].second->value.data);
	}
}

TEST_CASE("dmf cannot use future predictors; the masked task can") {
	// demand driven almost purely by same-day weather
	SyntheticSpec spec;
	spec.n_days = 600;
	spec.n_zones = 1;
	spec.future_signal_weight = 2.0;
	spec.autoregressive_weight = 0.0;
	spec.noise_scale = 10.0;
	spec.weather_persistence = 0.2;
	spec.seed = 33;
	auto f = make_fixture(generate_synthetic(spec), 6, 3);

	TrainingConfig tc;
	tc.batch_size = 64;
	tc.epochs = 30;
	tc.learning_rate = 0.01;
	tc.seed = 14;

	ModelConfig mc = tiny_lstm();
	mc.lstm_hidden = 16;
	auto mmmpf_model = build_model(mc, f.layout, 15);
	tc.method = Method::mmmpf;
	auto mmpf_rep = train_mmmpf(*mmmpf_model, f.train, f.val, f.stats, f.spec, tc);

	auto dmf_model = build_model(mc, f.layout, 15);
	tc.method = Method::dmf;
	auto dmf_rep = train_dmf(*dmf_model, f.train, f.val, f.stats, f.spec, tc);

	// same backbone, same budget: the information gap must show up
	CHECK(dmf_rep.best_val_loss > 1.3 * mmpf_rep.best_val_loss);
}

TEST_CASE("sample-based linear training recovers an exactly linear panel") {
	// demand is an exact linear function of the design row
	FeatureTable t;
	t.zones = {"Z1", "Z2"};
	Rng rng(41);
	const std::size_t days = 400;
	for (std::size_t d = 0; d < days; ++d) {
		t.dates.push_back(
		    date_from_day_number(day_number(Date{2014, 1, 1}) + static_cast<std::int64_t>(d)));
		t.calendar.push_back({t.dates.back().month, t.dates.back().day, day_of_week(t.dates.back())});
		for (int z = 0; z < 2; ++z) {
			t.dry_bulb.push_back(rng.uniform(10, 95));
			t.dew_point.push_back(t.dry_bulb.back() - rng.uniform(2, 25));
		}
		for (int z = 0; z < 2; ++z) {
			const double dry = t.dry_bulb[d * 2 + static_cast<std::size_t>(z)];
			const double dew = t.dew_point[d * 2 + static_cast<std::size_t>(z)];
			t.peak_mw.push_back(400.0 + 3.0 * dry - 1.5 * dew + 10.0 * t.calendar[d][2] +
			                    4.0 * t.calendar[d][0]);
		}
	}
	t.validate();
	auto stats = compute_norm_stats(t);
	auto lm = train_sbf_linear(Architecture::linear_ols, t, stats, 0.0);

	std::vector<double> weather(4);
	double max_err = 0.0;
	for (std::size_t d = 0; d < days; ++d) {
		for (int c = 0; c < 4; ++c) {
			weather[static_cast<std::size_t>(c)] = stats.normalize(t.weather(d, c / 2, c % 2 == 1), c);
		}
		auto row = sbf_design_row(t.calendar[d], weather);
		auto y = lm.predict(row);
		for (int z = 0; z < 2; ++z) {
			const double mw =
			    stats.denormalize(y[static_cast<std::size_t>(z)], stats.forecast_channel(z));
			max_err = std::max(max_err, std::abs(mw - t.peak(d, z)));
		}
	}
	CHECK(max_err < 1e-6);
}

TEST_CASE("sample-based fcnn quantile spread tracks heteroscedastic noise") {
	// noise scale rises with dry bulb temperature
	FeatureTable t;
	t.zones = {"Z1"};
	Rng rng(43);
	for (std::size_t d = 0; d < 1500; ++d) {
		t.dates.push_back(
		    date_from_day_number(day_number(Date{2012, 1, 1}) + static_cast<std::int64_t>(d)));
		t.calendar.push_back({t.dates.back().month, t.dates.back().day, day_of_week(t.dates.back())});
		const double dry = rng.uniform(0.0, 100.0);
		t.dry_bulb.push_back(dry);
		t.dew_point.push_back(dry - 10.0);
		const double sigma = 2.0 + 0.5 * dry;
		t.peak_mw.push_back(600.0 + 2.0 * dry + sigma * rng.normal());
	}
	t.validate();
	auto split = split_by_days(t, 1200);
	auto stats = compute_norm_stats(split.train);

	ModelConfig mc;
	mc.architecture = Architecture::fcnn;
	mc.embedding_dim = 2;
	mc.fcnn_width = 24;
	InputLayout layout;
	layout.zones = t.zones;
	auto model = build_model(mc, layout, 51);
	TrainingConfig tc;
	tc.method = Method::sbf;
	tc.batch_size = 128;
	tc.epochs = 60;
	tc.learning_rate = 0.01;
	tc.seed = 16;
	train_sbf_fcnn(*model, split.train, split.validation, stats, tc);

	auto spread_at = [&](double dry) {
		StepBatch sb(1, 1, layout);
		sb.set_categorical(0, 0, 6, 15, 2);
		sb.continuous.at(0, 0) = static_cast<float>(stats.normalize(dry, 0));
		sb.continuous.at(0, 1) = static_cast<float>(stats.normalize(dry - 10.0, 1));
		auto out = model->forward(sb, false, nullptr);
		const int c = stats.forecast_channel(0);
		return stats.denormalize(out->value.at(0, 2), c) - stats.denormalize(out->value.at(0, 0), c);
	};
	const double cold = spread_at(10.0);
	const double hot = spread_at(90.0);
	CHECK(hot > 1.5 * cold);
}

TEST_CASE("training config validation and method parsing") {
	TrainingConfig tc;
	tc.learning_rate = 0.0;
	CHECK_THROWS_AS(tc.validate(), UsageError);
	tc = TrainingConfig{};
	tc.batch_size = 0;
	CHECK_THROWS_AS(tc.validate(), UsageError);
	tc = TrainingConfig{};
	tc.epochs = 0;
	CHECK_THROWS_AS(tc.validate(), UsageError);

	CHECK_THROWS_AS(parse_method("boost"), UsageError);
	CHECK(parse_method("rsf") == Method::rsf);
	CHECK(method_name(Method::sbf) == "sbf");
}
