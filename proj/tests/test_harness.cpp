#include "doctest.h"

#include <sstream>

#include "moddnn/error.hpp"
#include "moddnn/harness.hpp"

using namespace moddnn;

namespace {

RunConfig ideal_config() {
  RunConfig cfg = RunConfig::preset_named("desk");
  cfg.impairment.rho = {0.0};
  cfg.scenario.snr_db = {std::nullopt};
  cfg.scenario.symbols_per_angle = 1;
  cfg.scenario.train_symbols = 0;
  cfg.scenario.val_symbols = 1;
  return cfg;
}

RunConfig quick_config() {
  RunConfig cfg = RunConfig::preset_named("desk");
  cfg.grid_min = -20;
  cfg.grid_max = 20;
  cfg.srs.K = 16;
  cfg.scenario.symbols_per_angle = 4;
  cfg.scenario.train_symbols = 2;
  cfg.scenario.val_symbols = 2;
  return cfg;
}

}  // namespace

TEST_SUITE("harness") {

TEST_CASE("method names") {
  for (const char* name : {"moddnn", "music", "scg-only", "css"}) CHECK(std::string(method_name(parse_method(name))) == name);
  CHECK_THROWS_AS(parse_method("esprit"), ConfigError);
  CHECK(parse_axis("snr") == SweepAxis::Snr);
  CHECK_THROWS_AS(parse_axis("k"), ConfigError);
}

TEST_CASE("MUSIC and CSS are exact on the ideal noiseless sweep") {
  const Dataset ds = generate_dataset(ideal_config(), Split::All);
  REQUIRE(ds.records.size() == 121);
  for (Method m : {Method::Music, Method::CssArgmax}) {
    const MetricsReport r = evaluate(ds, m, std::nullopt, EvalConfig{});
    CHECK(r.rmse == 0.0);
    CHECK(r.samples.size() == 121);
  }
}

TEST_CASE("moddnn needs a matching model") {
  const Dataset ds = generate_dataset(quick_config(), Split::Val);
  CHECK_THROWS_AS(evaluate(ds, Method::ModDnn, std::nullopt, EvalConfig{}), ConfigError);
  const ModDnnModel wrong = make_model(AngleGrid(-60, 60, 1), ModelSpec{});
  CHECK_THROWS_AS(evaluate(ds, Method::ModDnn, wrong, EvalConfig{}), ConfigError);
  const ModDnnModel right = make_model(ds.config.grid(), ModelSpec{});
  CHECK_NOTHROW(evaluate(ds, Method::ModDnn, right, EvalConfig{}));
}

TEST_CASE("threaded evaluation matches serial") {
  const Dataset ds = generate_dataset(quick_config(), Split::Val);
  EvalConfig serial;
  EvalConfig threaded;
  threaded.threads = 3;
  const auto a = evaluate(ds, Method::ScgOnly, std::nullopt, serial);
  const auto b = evaluate(ds, Method::ScgOnly, std::nullopt, threaded);
  CHECK(report_to_json(a) == report_to_json(b));
}

TEST_CASE("training samples are normalized with unit-peak labels") {
  const Dataset ds = generate_dataset(quick_config(), Split::Train);
  const auto samples = training_samples(ds, 1.0);
  CHECK(samples.size() == ds.records.size());
  for (const auto& s : samples) {
    CHECK(s.input.maxCoeff() == doctest::Approx(1.0));
    CHECK(s.label.maxCoeff() == doctest::Approx(1.0));
    CHECK(s.input.size() == 41);
  }
}

TEST_CASE("rho 0 sweep point equals the ideal-hardware run") {
  RunConfig cfg = quick_config();
  const auto rows = sweep(SweepAxis::Rho, {0.0}, {Method::Music}, cfg, std::nullopt);
  REQUIRE(rows.size() == 1);
  RunConfig ideal = cfg;
  ideal.impairment.phi_max = 0.0;
  const Dataset ds = generate_dataset(ideal, Split::Val);
  CHECK(rows[0].rmse == evaluate(ds, Method::Music, std::nullopt, cfg.eval).rmse);
}

TEST_CASE("sweep table shape, order and determinism") {
  const RunConfig cfg = quick_config();
  const std::vector<double> values{0.0, 10.0, 20.0};
  const std::vector<Method> methods{Method::Music, Method::CssArgmax};
  const auto rows = sweep(SweepAxis::Snr, values, methods, cfg, std::nullopt);
  CHECK(rows.size() == values.size() * methods.size());
  CHECK(rows[0].method == "music");
  CHECK(rows[1].method == "css");
  CHECK(rows[2].axis_value == 10.0);
  CHECK(rows[0].n == 41 * 2);

  const std::string csv = sweep_csv(SweepAxis::Snr, rows);
  CHECK(csv == sweep_csv(SweepAxis::Snr, sweep(SweepAxis::Snr, values, methods, cfg, std::nullopt)));
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  CHECK(line.rfind(kSweepCsvHeader, 0) == 0);
  std::getline(in, line);
  CHECK(line == "axis_value,method,rmse,median,p80,n");
  int count = 0;
  while (std::getline(in, line)) ++count;
  CHECK(count == 6);
  CHECK_THROWS_AS(sweep(SweepAxis::Snr, {}, methods, cfg, std::nullopt), ConfigError);
}

TEST_CASE("number formatting is shortest round trip") {
  CHECK(format_number(0.1) == "0.1");
  CHECK(format_number(2.0) == "2");
  CHECK(format_number(-1.5e-7) == "-1.5e-07");
  CHECK(format_number(1.0 / 3.0) == "0.3333333333333333");
  CHECK(std::stod(format_number(2.7386127875258306)) == 2.7386127875258306);
  CHECK(format_number(INFINITY) == "inf");
}

TEST_CASE("spectrum csv") {
  AngleGrid g(-1, 1, 1);
  const std::string csv = spectrum_csv(g, Spectrum::LinSpaced(3, 0.5, 1.5));
  CHECK(csv == std::string(kSpectrumCsvHeader) + "\nangle_deg,value\n-1,0.5\n0,1\n1,1.5\n");
  CHECK_THROWS_AS(spectrum_csv(g, Spectrum::Zero(2)), ShapeError);
}

}
