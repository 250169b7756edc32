#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <string>

#include "pnrhbt/config.hpp"
#include "pnrhbt/io.hpp"

using namespace pnrhbt;
using Catch::Approx;

TEST_CASE("presets parse into complete experiments") {
  for (const auto& name : preset_names()) {
    CAPTURE(name);
    const auto cfg = parse_config(embedded_preset(name));
    CHECK(cfg.schema_version == 1);
    CHECK(cfg.name == name);
    CHECK_FALSE(cfg.notes.empty());
    CHECK(cfg.experiment.det1.eta == 0.17);
    CHECK(cfg.experiment.det1.v1 == 0.13);
    CHECK(cfg.experiment.det1.n_max == 7);
    CHECK(cfg.experiment.disc1.kind == Discriminator::Kind::Threshold);
    CHECK(cfg.experiment.disc1.v_lo == 0.3);
    CHECK(cfg.experiment.split == 0.5);
    CHECK(cfg.seed.has_value());
    REQUIRE(cfg.grid.has_value());
    CHECK(cfg.grid->kind == SweepKind::ThresholdEq6);
    CHECK(cfg.grid->n1_min == 7);
    CHECK(cfg.grid->n2_levels == std::vector<int>{1, 2, 3, 4, 5, 6, 7});
    CHECK(cfg.hist.v_max == 0.75);
  }

  const auto fml = parse_config(embedded_preset("fml"));
  CHECK(fml.sources.size() == 1);
  CHECK(fml.experiment.source.kind == SourceKind::Mix);
  CHECK(fml.experiment.source.mean() == Approx(2.8).epsilon(1e-12));
  CHECK(fml.experiment.source.mu_n == Approx(0.2956).margin(1e-4));

  const auto compare = parse_config(embedded_preset("compare"));
  REQUIRE(compare.sources.size() == 3);
  CHECK(compare.sources[0].name == "fml");
  CHECK(compare.sources[1].name == "lnt");
  CHECK(compare.sources[2].name == "lat");
  CHECK(compare.experiment.source.mean() == Approx(2.8).epsilon(1e-12));

  CHECK_THROWS_AS(embedded_preset("nope"), ParameterError);
}

TEST_CASE("preset files on disk match the embedded copies") {
  const char* dir = std::getenv("PNRHBT_PRESETS");
  REQUIRE(dir != nullptr);
  for (const auto& name : preset_names()) {
    CAPTURE(name);
    const auto on_disk = read_text_file(std::filesystem::path(dir) / (name + ".json"));
    CHECK(on_disk == embedded_preset(name));
  }
}

namespace {

std::string minimal_config(const std::string& source_block,
                           const std::string& run_extra = "") {
  return std::string("{\"schema_version\": 1, \"source\": ") + source_block +
         ", \"detector\": {\"eta\": 0.2, \"v1_volts\": 0.1, \"sigma1_volts\": 0.02, "
         "\"n_max\": 5}, "
         "\"disc1\": {\"kind\": \"threshold\", \"v_t_volts\": 0.05}, "
         "\"disc2\": {\"kind\": \"window\", \"v_lo_volts\": 0.05, \"v_hi_volts\": 0.15}, "
         "\"run\": {\"n_pulses\": 10000" +
         run_extra + "}}";
}

}  // namespace

TEST_CASE("config parsing: source forms, defaults, and optional seed") {
  const auto a = parse_config(minimal_config("{\"kind\": \"mix\", \"mu_s\": 1.5, \"mu_n\": 0.5}"));
  CHECK(a.experiment.source.mu_s == 1.5);
  CHECK(a.experiment.source.mu_n == 0.5);
  CHECK_FALSE(a.seed.has_value());
  CHECK(a.experiment.det1.sigma0 == Approx(0.01));  // defaults to sigma1/2
  CHECK(a.experiment.det2.eta == a.experiment.det1.eta);
  CHECK(a.experiment.disc2.kind == Discriminator::Kind::Window);
  CHECK(a.experiment.max_delay == 10);
  CHECK(a.experiment.shards == 1);

  const auto b = parse_config(minimal_config("{\"kind\": \"mix\", \"mu\": 2.8, \"g2\": 1.2}",
                                             ", \"seed\": 99"));
  CHECK(b.experiment.source.mean() == Approx(2.8).epsilon(1e-12));
  CHECK(b.seed.has_value());
  CHECK(*b.seed == 99);

  const auto c = parse_config(minimal_config("{\"kind\": \"thermal\", \"mu\": 1.0}"));
  CHECK(c.experiment.source.kind == SourceKind::Thermal);
}

TEST_CASE("config parsing rejects bad inputs with parameter errors") {
  CHECK_THROWS_AS(parse_config("not json at all"), ParameterError);
  CHECK_THROWS_AS(parse_config("{\"source\": {}}"), ParameterError);  // no schema_version
  CHECK_THROWS_AS(parse_config("{\"schema_version\": 2, \"source\": {}}"), ParameterError);
  CHECK_THROWS_AS(parse_config(minimal_config("{\"kind\": \"laser\", \"mu\": 1.0}")),
                  ParameterError);
  CHECK_THROWS_AS(parse_config(minimal_config("{\"kind\": \"poisson\", \"mu\": -2.0}")),
                  ParameterError);
  CHECK_THROWS_AS(
      parse_config(minimal_config("{\"kind\": \"mix\", \"mu\": 2.8, \"g2\": 2.5}")),
      ParameterError);
  CHECK_THROWS_AS(
      parse_config(minimal_config(
          "{\"kind\": \"mix\", \"mu_s\": 1.0, \"mu_n\": 0.5, \"g2\": 1.2}")),
      ParameterError);
  // n_pulses below the accidental-bin floor
  CHECK_THROWS_AS(parse_config(minimal_config("{\"kind\": \"poisson\", \"mu\": 1.0}",
                                              ", \"max_delay\": 500")),
                  ParameterError);
  // window with inverted bounds
  const std::string bad_window =
      "{\"schema_version\": 1, \"source\": {\"kind\": \"poisson\", \"mu\": 1.0}, "
      "\"detector\": {\"eta\": 0.2, \"v1_volts\": 0.1, \"sigma1_volts\": 0.02, \"n_max\": 5}, "
      "\"disc1\": {\"kind\": \"window\", \"v_lo_volts\": 0.2, \"v_hi_volts\": 0.1}, "
      "\"disc2\": {\"kind\": \"threshold\", \"v_t_volts\": 0.05}, "
      "\"run\": {\"n_pulses\": 10000}}";
  CHECK_THROWS_AS(parse_config(bad_window), ParameterError);
}

TEST_CASE("csv round-trips exactly") {
  Csv table;
  table.header = {"delay", "count", "x"};
  table.rows = {{-10.0, 300.0, 1.0 / 3.0},
                {0.0, 12345678901234.0, 1e-300},
                {3.0, 0.1, -2.5e17},
                {7.0, 600.0, std::nextafter(1.0, 2.0)}};
  const auto text = to_csv_string(table);
  const auto back = parse_csv_string(text);
  REQUIRE(back.header == table.header);
  REQUIRE(back.rows.size() == table.rows.size());
  for (std::size_t i = 0; i < table.rows.size(); ++i)
    for (std::size_t j = 0; j < table.rows[i].size(); ++j)
      CHECK(back.rows[i][j] == table.rows[i][j]);

  // comment lines are ignored on the way in
  const auto commented = parse_csv_string("# provenance\n" + text);
  CHECK(commented.rows == table.rows);

  CHECK_THROWS_AS(parse_double("12x"), ParameterError);
  CHECK_THROWS_AS(parse_csv_string(""), ParameterError);
}

TEST_CASE("metadata sidecars round-trip") {
  MetaMap meta = {{"command", "simulate"},
                  {"seed", "424242"},
                  {"source.kind", "mix"},
                  {"note", "a = b = c"}};
  const auto text = to_meta_string(meta);
  const auto back = parse_meta_string(text);
  CHECK(back == meta);
  CHECK_THROWS_AS(parse_meta_string("no separator here"), ParameterError);
}

TEST_CASE("double formatting is shortest-exact") {
  for (double v : {0.1, 1.0 / 3.0, 2.6, 0.0743, 1e-300, 6.76, -0.0, 47.1}) {
    const auto s = format_double(v);
    CHECK(parse_double(s) == v);
  }
  CHECK(format_double(300.0) == "300");
  CHECK(format_double(0.5) == "0.5");
}
