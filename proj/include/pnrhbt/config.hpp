#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "pnrhbt/analytics.hpp"
#include "pnrhbt/errors.hpp"
#include "pnrhbt/hbt_engine.hpp"
#include "pnrhbt/io.hpp"

namespace pnrhbt {

inline constexpr int kSchemaVersion = 1;

struct HistGridSpec {
  double v_min = 0.0;
  double v_max = 0.75;
  double step = 0.001;
};

enum class SweepKind { WindowExact, ThresholdEq6, VoltageModel, MonteCarlo };

struct SweepGridSpec {
  SweepKind kind = SweepKind::ThresholdEq6;
  int n1_min = 7;
  std::vector<int> n2_levels;         // photon-number modes; defaults to 1..n_max
  std::vector<double> v2_thresholds;  // voltage-model / monte-carlo modes
};

struct NamedSource {
  std::string name;
  SourceSpec spec;
};

/// Parsed experiment file: one or more sources plus the shared detector,
/// discriminator, run, sweep-grid and histogram-grid blocks.
struct LoadedConfig {
  int schema_version = kSchemaVersion;
  std::string name;
  std::string notes;
  std::vector<NamedSource> sources;
  ExperimentConfig experiment;  // source set to sources.front()
  std::optional<std::uint64_t> seed;
  std::optional<SweepGridSpec> grid;
  HistGridSpec hist;
};

namespace detail {

using json = nlohmann::json;

inline const json& require_key(const json& j, const char* key, const char* where) {
  const auto it = j.find(key);
  if (it == j.end())
    throw ParameterError(std::string("config: missing '") + key + "' in " + where);
  return *it;
}

inline SourceSpec parse_source(const json& j) {
  const std::string kind = require_key(j, "kind", "source").get<std::string>();
  if (kind == "poisson") return SourceSpec::poisson(require_key(j, "mu", "source").get<double>());
  if (kind == "thermal") return SourceSpec::thermal(require_key(j, "mu", "source").get<double>());
  if (kind == "mix") {
    if (j.contains("mu_s") || j.contains("mu_n")) {
      if (j.contains("g2"))
        throw ParameterError("config: mix source takes (mu, g2) or (mu_s, mu_n), not both");
      return SourceSpec::mix(require_key(j, "mu_s", "source").get<double>(),
                             require_key(j, "mu_n", "source").get<double>());
    }
    return mix_source_from_mu_g2(require_key(j, "mu", "source").get<double>(),
                                 require_key(j, "g2", "source").get<double>());
  }
  throw ParameterError("config: unknown source kind '" + kind + "'");
}

inline DetectorParams parse_detector(const json& j) {
  DetectorParams d;
  d.eta = require_key(j, "eta", "detector").get<double>();
  d.v1 = require_key(j, "v1_volts", "detector").get<double>();
  d.sigma1 = require_key(j, "sigma1_volts", "detector").get<double>();
  d.sigma0 = j.value("sigma0_volts", d.sigma1 / 2.0);
  d.n_max = require_key(j, "n_max", "detector").get<int>();
  if (j.contains("quench")) {
    const auto& q = j.at("quench");
    if (q.is_string()) {
      if (q.get<std::string>() != "linear")
        throw ParameterError("config: quench must be \"linear\" or {\"v_sat_volts\": x}");
    } else {
      d.quench = Quench::saturating(require_key(q, "v_sat_volts", "quench").get<double>());
    }
  }
  d.validate();
  return d;
}

inline Discriminator parse_discriminator(const json& j, const char* where) {
  const std::string kind = require_key(j, "kind", where).get<std::string>();
  if (kind == "threshold")
    return Discriminator::threshold(require_key(j, "v_t_volts", where).get<double>());
  if (kind == "window")
    return Discriminator::window(require_key(j, "v_lo_volts", where).get<double>(),
                                 require_key(j, "v_hi_volts", where).get<double>());
  throw ParameterError(std::string("config: unknown discriminator kind '") + kind + "' in " +
                       where);
}

inline SweepGridSpec parse_grid(const json& j, int n_max) {
  SweepGridSpec g;
  const std::string mode = require_key(j, "mode", "grid").get<std::string>();
  if (mode == "window-exact") g.kind = SweepKind::WindowExact;
  else if (mode == "threshold-eq6") g.kind = SweepKind::ThresholdEq6;
  else if (mode == "voltage-model") g.kind = SweepKind::VoltageModel;
  else if (mode == "monte-carlo") g.kind = SweepKind::MonteCarlo;
  else throw ParameterError("config: unknown sweep mode '" + mode + "'");

  g.n1_min = j.contains("n1_min") ? j.at("n1_min").get<int>() : j.value("n1", 7);
  if (g.kind == SweepKind::WindowExact || g.kind == SweepKind::ThresholdEq6) {
    if (j.contains("n2_min")) g.n2_levels = j.at("n2_min").get<std::vector<int>>();
    else if (j.contains("n2")) g.n2_levels = j.at("n2").get<std::vector<int>>();
    else
      for (int n = 1; n <= n_max; ++n) g.n2_levels.push_back(n);
  } else {
    g.v2_thresholds = require_key(j, "v_t_volts", "grid").get<std::vector<double>>();
  }
  return g;
}

}  // namespace detail

inline LoadedConfig parse_config(const std::string& text) {
  detail::json j;
  try {
    j = detail::json::parse(text);
  } catch (const detail::json::exception& e) {
    throw ParameterError(std::string("config: invalid JSON: ") + e.what());
  }
  try {
    LoadedConfig cfg;
    cfg.schema_version = detail::require_key(j, "schema_version", "top level").get<int>();
    if (cfg.schema_version != kSchemaVersion)
      throw ParameterError("config: unsupported schema_version " +
                           std::to_string(cfg.schema_version));
    cfg.name = j.value("name", "");
    cfg.notes = j.value("notes", "");

    if (j.contains("sources")) {
      for (const auto& s : j.at("sources")) {
        NamedSource ns;
        ns.name = s.value("name", "");
        ns.spec = detail::parse_source(s);
        if (ns.name.empty())
          throw ParameterError("config: each entry of 'sources' needs a 'name'");
        cfg.sources.push_back(ns);
      }
      if (cfg.sources.empty()) throw ParameterError("config: 'sources' must not be empty");
    } else {
      NamedSource ns;
      ns.spec = detail::parse_source(detail::require_key(j, "source", "top level"));
      ns.name = !cfg.name.empty() ? cfg.name : std::string("source");
      cfg.sources.push_back(ns);
    }

    cfg.experiment.det1 = detail::parse_detector(detail::require_key(j, "detector", "top level"));
    cfg.experiment.det2 = j.contains("detector2")
                              ? detail::parse_detector(j.at("detector2"))
                              : cfg.experiment.det1;
    cfg.experiment.disc1 = detail::parse_discriminator(
        detail::require_key(j, "disc1", "top level"), "disc1");
    cfg.experiment.disc2 = detail::parse_discriminator(
        detail::require_key(j, "disc2", "top level"), "disc2");

    const auto& run_block = detail::require_key(j, "run", "top level");
    cfg.experiment.n_pulses =
        detail::require_key(run_block, "n_pulses", "run").get<std::uint64_t>();
    cfg.experiment.max_delay = run_block.value("max_delay", 10);
    cfg.experiment.shards = run_block.value("shards", 1);
    cfg.experiment.split = run_block.value("split", 0.5);
    if (run_block.contains("seed")) {
      cfg.seed = run_block.at("seed").get<std::uint64_t>();
      cfg.experiment.seed = *cfg.seed;
    }

    cfg.experiment.source = cfg.sources.front().spec;
    validate(cfg.experiment);

    if (j.contains("grid"))
      cfg.grid = detail::parse_grid(
          j.at("grid"), std::min(cfg.experiment.det1.n_max, cfg.experiment.det2.n_max));

    if (j.contains("hist")) {
      const auto& h = j.at("hist");
      cfg.hist.v_min = h.value("v_min_volts", 0.0);
      cfg.hist.v_max = h.value("v_max_volts", 0.75);
      cfg.hist.step = h.value("step_volts", 0.001);
      if (!(cfg.hist.step > 0.0) || !(cfg.hist.v_max > cfg.hist.v_min))
        throw ParameterError("config: hist grid requires step > 0 and v_max > v_min");
    }
    return cfg;
  } catch (const detail::json::exception& e) {
    throw ParameterError(std::string("config: ") + e.what());
  }
}

inline LoadedConfig load_config_file(const std::filesystem::path& path) {
  return parse_config(read_text_file(path));
}

// ---------------------------------------------------------------------------
// Shipped presets. The lnt mean photon number is an assumption (same laser as
// lat, run near threshold); it is flagged in the preset notes.
// ---------------------------------------------------------------------------

namespace detail {

inline constexpr const char* kPresetFml = R"({
  "schema_version": 1,
  "name": "fml",
  "notes": "Filtered multi-mode laser slightly above threshold: strongly bunched mixture source, mu = 2.8, g2 = 1.2.",
  "source": {"kind": "mix", "mu": 2.8, "g2": 1.2},
  "detector": {"eta": 0.17, "v1_volts": 0.13, "sigma1_volts": 0.025, "sigma0_volts": 0.0125, "n_max": 7, "quench": "linear"},
  "disc1": {"kind": "threshold", "v_t_volts": 0.3},
  "disc2": {"kind": "threshold", "v_t_volts": 0.3},
  "run": {"n_pulses": 2000000, "max_delay": 10, "seed": 424242, "shards": 2, "split": 0.5},
  "grid": {"mode": "threshold-eq6", "n1_min": 7, "n2_min": [1, 2, 3, 4, 5, 6, 7]},
  "hist": {"v_min_volts": 0.0, "v_max_volts": 0.75, "step_volts": 0.001}
}
)";

inline constexpr const char* kPresetLnt = R"({
  "schema_version": 1,
  "name": "lnt",
  "notes": "DFB laser near threshold: weakly bunched, g2 = 1.075. The mean mu = 2.6 is an assumption (same laser as the lat preset); adjust it if measured separately.",
  "source": {"kind": "mix", "mu": 2.6, "g2": 1.075},
  "detector": {"eta": 0.17, "v1_volts": 0.13, "sigma1_volts": 0.025, "sigma0_volts": 0.0125, "n_max": 7, "quench": "linear"},
  "disc1": {"kind": "threshold", "v_t_volts": 0.3},
  "disc2": {"kind": "threshold", "v_t_volts": 0.3},
  "run": {"n_pulses": 2000000, "max_delay": 10, "seed": 424242, "shards": 2, "split": 0.5},
  "grid": {"mode": "threshold-eq6", "n1_min": 7, "n2_min": [1, 2, 3, 4, 5, 6, 7]},
  "hist": {"v_min_volts": 0.0, "v_max_volts": 0.75, "step_volts": 0.001}
}
)";

inline constexpr const char* kPresetLat = R"({
  "schema_version": 1,
  "name": "lat",
  "notes": "DFB laser well above threshold: nearly Poissonian, mu = 2.6, g2 = 1.001.",
  "source": {"kind": "mix", "mu": 2.6, "g2": 1.001},
  "detector": {"eta": 0.17, "v1_volts": 0.13, "sigma1_volts": 0.025, "sigma0_volts": 0.0125, "n_max": 7, "quench": "linear"},
  "disc1": {"kind": "threshold", "v_t_volts": 0.3},
  "disc2": {"kind": "threshold", "v_t_volts": 0.3},
  "run": {"n_pulses": 2000000, "max_delay": 10, "seed": 424242, "shards": 2, "split": 0.5},
  "grid": {"mode": "threshold-eq6", "n1_min": 7, "n2_min": [1, 2, 3, 4, 5, 6, 7]},
  "hist": {"v_min_volts": 0.0, "v_max_volts": 0.75, "step_volts": 0.001}
}
)";

inline constexpr const char* kPresetCompare = R"({
  "schema_version": 1,
  "name": "compare",
  "notes": "All three sources side by side for sweep comparisons. The lnt mean mu = 2.6 is an assumption (same laser as lat).",
  "sources": [
    {"name": "fml", "kind": "mix", "mu": 2.8, "g2": 1.2},
    {"name": "lnt", "kind": "mix", "mu": 2.6, "g2": 1.075},
    {"name": "lat", "kind": "mix", "mu": 2.6, "g2": 1.001}
  ],
  "detector": {"eta": 0.17, "v1_volts": 0.13, "sigma1_volts": 0.025, "sigma0_volts": 0.0125, "n_max": 7, "quench": "linear"},
  "disc1": {"kind": "threshold", "v_t_volts": 0.3},
  "disc2": {"kind": "threshold", "v_t_volts": 0.3},
  "run": {"n_pulses": 2000000, "max_delay": 10, "seed": 424242, "shards": 2, "split": 0.5},
  "grid": {"mode": "threshold-eq6", "n1_min": 7, "n2_min": [1, 2, 3, 4, 5, 6, 7]},
  "hist": {"v_min_volts": 0.0, "v_max_volts": 0.75, "step_volts": 0.001}
}
)";

}  // namespace detail

inline std::vector<std::string> preset_names() { return {"fml", "lnt", "lat", "compare"}; }

inline std::string embedded_preset(const std::string& name) {
  if (name == "fml") return detail::kPresetFml;
  if (name == "lnt") return detail::kPresetLnt;
  if (name == "lat") return detail::kPresetLat;
  if (name == "compare") return detail::kPresetCompare;
  throw ParameterError("unknown preset '" + name + "' (available: fml, lnt, lat, compare)");
}

// ---------------------------------------------------------------------------
// Metadata echoes
// ---------------------------------------------------------------------------

inline std::string source_kind_name(SourceKind k) {
  switch (k) {
    case SourceKind::Poisson: return "poisson";
    case SourceKind::Thermal: return "thermal";
    case SourceKind::Mix: return "mix";
  }
  return "?";
}

inline void append_source_meta(MetaMap& meta, const std::string& prefix, const SourceSpec& s) {
  meta.emplace_back(prefix + ".kind", source_kind_name(s.kind));
  meta.emplace_back(prefix + ".mu_s", format_double(s.mu_s));
  meta.emplace_back(prefix + ".mu_n", format_double(s.mu_n));
  meta.emplace_back(prefix + ".mu", format_double(s.mean()));
}

inline void append_detector_meta(MetaMap& meta, const std::string& prefix,
                                 const DetectorParams& d) {
  meta.emplace_back(prefix + ".eta", format_double(d.eta));
  meta.emplace_back(prefix + ".v1_volts", format_double(d.v1));
  meta.emplace_back(prefix + ".sigma1_volts", format_double(d.sigma1));
  meta.emplace_back(prefix + ".sigma0_volts", format_double(d.sigma0));
  meta.emplace_back(prefix + ".n_max", std::to_string(d.n_max));
  meta.emplace_back(prefix + ".quench", d.quench.kind == QuenchKind::Linear
                                            ? std::string("linear")
                                            : "saturating v_sat_volts=" +
                                                  format_double(d.quench.v_sat));
}

inline void append_discriminator_meta(MetaMap& meta, const std::string& prefix,
                                      const Discriminator& d) {
  if (d.kind == Discriminator::Kind::Threshold) {
    meta.emplace_back(prefix + ".kind", "threshold");
    meta.emplace_back(prefix + ".v_t_volts", format_double(d.v_lo));
  } else {
    meta.emplace_back(prefix + ".kind", "window");
    meta.emplace_back(prefix + ".v_lo_volts", format_double(d.v_lo));
    meta.emplace_back(prefix + ".v_hi_volts", format_double(d.v_hi));
  }
}

}  // namespace pnrhbt
