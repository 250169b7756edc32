// Command-line front end: loads an experiment config, runs simulations,
// sweeps and analytic evaluations, and writes CSV tables with metadata
// sidecars plus a per-invocation manifest.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pnrhbt/pnrhbt.hpp"

namespace fs = std::filesystem;
using namespace pnrhbt;

namespace {

constexpr int kExitConfigError = 2;
constexpr int kExitConvergenceError = 3;
constexpr int kExitInsufficientStats = 4;
constexpr int kExitIoError = 5;

struct CliOptions {
  std::string config_path;
  std::string preset;
  std::string out_dir = "out";
  std::optional<std::uint64_t> seed;
  std::optional<int> shards;
  std::optional<std::uint64_t> n_pulses;
  int max_quad_doublings = 14;
};

struct OutputRecorder {
  std::vector<std::string> paths;

  void write(const fs::path& path, const std::string& content) {
    try {
      write_text_file(path, content);
    } catch (const IoError&) {
      throw;
    }
    paths.push_back(path.string());
  }
};

LoadedConfig load(const CliOptions& opt) {
  if (!opt.preset.empty() && !opt.config_path.empty())
    throw ParameterError("give either --config or --preset, not both");
  LoadedConfig cfg;
  if (!opt.preset.empty()) {
    cfg = parse_config(embedded_preset(opt.preset));
    cfg.name = opt.preset;
  } else if (!opt.config_path.empty()) {
    cfg = load_config_file(opt.config_path);
    if (cfg.name.empty()) cfg.name = fs::path(opt.config_path).stem().string();
  } else {
    throw ParameterError("a config is required: pass --config <file> or --preset <name>");
  }
  if (opt.seed) {
    cfg.seed = *opt.seed;
    cfg.experiment.seed = *opt.seed;
  } else if (!cfg.seed) {
    std::random_device rd;
    const std::uint64_t entropy =
        (static_cast<std::uint64_t>(rd()) << 32) ^ static_cast<std::uint64_t>(rd());
    cfg.seed = entropy;
    cfg.experiment.seed = entropy;
  }
  if (opt.shards) cfg.experiment.shards = *opt.shards;
  if (opt.n_pulses) cfg.experiment.n_pulses = *opt.n_pulses;
  validate(cfg.experiment);
  return cfg;
}

fs::path ensure_out_dir(const CliOptions& opt) {
  fs::path dir(opt.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir))
    throw IoError("cannot create output directory: " + dir.string());
  return dir;
}

MetaMap base_meta(const std::string& command, const LoadedConfig& cfg) {
  MetaMap meta;
  meta.emplace_back("command", command);
  meta.emplace_back("artifact_version", kVersion);
  meta.emplace_back("generator", CounterRng::generator_name());
  meta.emplace_back("schema_version", std::to_string(cfg.schema_version));
  meta.emplace_back("config_name", cfg.name);
  meta.emplace_back("seed", std::to_string(cfg.experiment.seed));
  meta.emplace_back("shards", std::to_string(cfg.experiment.shards));
  meta.emplace_back("n_pulses", std::to_string(cfg.experiment.n_pulses));
  meta.emplace_back("max_delay", std::to_string(cfg.experiment.max_delay));
  meta.emplace_back("split", format_double(cfg.experiment.split));
  append_detector_meta(meta, "det1", cfg.experiment.det1);
  append_detector_meta(meta, "det2", cfg.experiment.det2);
  append_discriminator_meta(meta, "disc1", cfg.experiment.disc1);
  append_discriminator_meta(meta, "disc2", cfg.experiment.disc2);
  return meta;
}

void write_manifest(const fs::path& dir, const std::string& command, const CliOptions& opt,
                    const LoadedConfig& cfg, const OutputRecorder& rec, double seconds) {
  MetaMap m;
  m.emplace_back("command", command);
  m.emplace_back("config",
                 !opt.preset.empty() ? "preset:" + opt.preset : opt.config_path);
  m.emplace_back("seed", std::to_string(cfg.experiment.seed));
  m.emplace_back("artifact_version", kVersion);
  m.emplace_back("generator", CounterRng::generator_name());
  m.emplace_back("duration_seconds", format_double(seconds));
  std::string joined;
  for (const auto& p : rec.paths) {
    if (!joined.empty()) joined += ';';
    joined += p;
  }
  m.emplace_back("outputs", joined);
  write_text_file(dir / ("manifest-" + command + ".txt"), to_meta_string(m));
}

std::vector<double> hist_grid(const HistGridSpec& h) {
  std::vector<double> g;
  for (double v = h.v_min; v <= h.v_max + 0.5 * h.step; v += h.step) g.push_back(v);
  return g;
}

ExperimentConfig for_source(const LoadedConfig& cfg, const NamedSource& src) {
  ExperimentConfig e = cfg.experiment;
  e.source = src.spec;
  return e;
}

// ---------------------------------------------------------------------------

int cmd_avalanche_hist(const CliOptions& opt) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto cfg = load(opt);
  const auto dir = ensure_out_dir(opt);
  OutputRecorder rec;
  const auto grid = hist_grid(cfg.hist);
  for (const auto& src : cfg.sources) {
    const auto density = avalanche_density(pmf(src.spec), cfg.experiment.det1, grid);
    Csv table;
    table.header = {"voltage", "density"};
    for (std::size_t i = 0; i < grid.size(); ++i)
      table.rows.push_back({grid[i], density[i]});
    const std::string base = "avalanche_hist_" + src.name;
    rec.write(dir / (base + ".csv"), to_csv_string(table));
    auto meta = base_meta("avalanche-hist", cfg);
    append_source_meta(meta, "source", src.spec);
    meta.emplace_back("grid.v_min_volts", format_double(cfg.hist.v_min));
    meta.emplace_back("grid.v_max_volts", format_double(cfg.hist.v_max));
    meta.emplace_back("grid.step_volts", format_double(cfg.hist.step));
    rec.write(dir / (base + ".meta"), to_meta_string(meta));
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_manifest(dir, "avalanche-hist", opt, cfg, rec, secs);
  std::cout << "wrote " << rec.paths.size() << " files to " << dir.string() << "\n";
  return 0;
}

int cmd_simulate(const CliOptions& opt) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto cfg = load(opt);
  const auto dir = ensure_out_dir(opt);
  OutputRecorder rec;
  const auto& src = cfg.sources.front();
  const auto exp = for_source(cfg, src);
  const auto hist = run(exp);

  Csv table;
  table.header = {"delay", "count"};
  for (int d = -hist.max_delay; d <= hist.max_delay; ++d)
    table.rows.push_back({static_cast<double>(d), static_cast<double>(hist.count(d))});
  const std::string base = "histogram_" + src.name;
  rec.write(dir / (base + ".csv"), to_csv_string(table));

  auto meta = base_meta("simulate", cfg);
  append_source_meta(meta, "source", src.spec);
  meta.emplace_back("singles1", std::to_string(hist.singles1));
  meta.emplace_back("singles2", std::to_string(hist.singles2));
  rec.write(dir / (base + ".meta"), to_meta_string(meta));

  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_manifest(dir, "simulate", opt, cfg, rec, secs);

  const auto result = estimate_gamma(hist);  // may throw InsufficientStatsError
  std::cout << "gamma = " << format_double(result.gamma) << " +- "
            << format_double(result.stderr_) << " (peak=" << result.peak_count
            << ", accidental_mean=" << format_double(result.accidental_mean)
            << ", singles1=" << hist.singles1 << ", singles2=" << hist.singles2 << ")\n";
  return 0;
}

int cmd_sweep(const CliOptions& opt, const std::string& mode_override) {
  const auto t0 = std::chrono::steady_clock::now();
  auto cfg = load(opt);
  if (!cfg.grid) throw ParameterError("sweep: config has no 'grid' block");
  auto grid = *cfg.grid;
  if (!mode_override.empty()) {
    if (mode_override == "window-exact") grid.kind = SweepKind::WindowExact;
    else if (mode_override == "threshold-eq6") grid.kind = SweepKind::ThresholdEq6;
    else if (mode_override == "voltage-model") grid.kind = SweepKind::VoltageModel;
    else if (mode_override == "monte-carlo") grid.kind = SweepKind::MonteCarlo;
    else throw ParameterError("sweep: unknown mode '" + mode_override + "'");
  }
  if ((grid.kind == SweepKind::VoltageModel || grid.kind == SweepKind::MonteCarlo) &&
      grid.v2_thresholds.empty())
    throw ParameterError("sweep: this mode needs grid.v_t_volts");

  QuadratureOptions quad;
  quad.max_doublings = opt.max_quad_doublings;
  const auto dir = ensure_out_dir(opt);
  OutputRecorder rec;

  for (const auto& src : cfg.sources) {
    Csv table;
    std::string mode_name;
    if (grid.kind == SweepKind::MonteCarlo) {
      mode_name = "monte-carlo";
      table.header = {"setting", "gamma", "stderr"};
      for (double vt : grid.v2_thresholds) {
        auto exp = for_source(cfg, src);
        exp.disc2 = Discriminator::threshold(vt);
        const auto result = estimate_gamma(run(exp));
        table.rows.push_back({vt, result.gamma, result.stderr_});
      }
    } else {
      SweepRequest req;
      req.n1 = grid.n1_min;
      req.n2_levels = grid.n2_levels;
      req.v2_thresholds = grid.v2_thresholds;
      switch (grid.kind) {
        case SweepKind::WindowExact: req.mode = SweepMode::WindowExact; mode_name = "window-exact"; break;
        case SweepKind::ThresholdEq6: req.mode = SweepMode::ThresholdEq6; mode_name = "threshold-eq6"; break;
        default: req.mode = SweepMode::VoltageModel; mode_name = "voltage-model"; break;
      }
      const auto curve = sweep_gamma(src.spec, cfg.experiment.det1, cfg.experiment.det2,
                                     cfg.experiment.disc1, cfg.experiment.split, req, quad);
      table.header = {"setting", "gamma"};
      for (const auto& pt : curve.points) table.rows.push_back({pt.setting, pt.gamma});
    }
    const std::string base = "gamma_curve_" + src.name;
    rec.write(dir / (base + ".csv"), to_csv_string(table));
    auto meta = base_meta("sweep", cfg);
    append_source_meta(meta, "source", src.spec);
    meta.emplace_back("mode", mode_name);
    meta.emplace_back("n1_min", std::to_string(grid.n1_min));
    meta.emplace_back("x_axis_convention",
                      "raw settings; plot reciprocally to emphasise avalanche self-limiting");
    rec.write(dir / (base + ".meta"), to_meta_string(meta));
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_manifest(dir, "sweep", opt, cfg, rec, secs);
  std::cout << "wrote " << rec.paths.size() << " files to " << dir.string() << "\n";
  return 0;
}

int cmd_analytic(const CliOptions& opt) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto cfg = load(opt);
  QuadratureOptions quad;
  quad.max_doublings = opt.max_quad_doublings;
  const auto dir = ensure_out_dir(opt);
  OutputRecorder rec;
  for (const auto& src : cfg.sources) {
    const auto& e = cfg.experiment;
    const int n_max = std::min(e.det1.n_max, e.det2.n_max);
    Csv table;
    table.header = {"order", "value"};
    Csv named;
    std::cout << "[" << src.name << "]\n";
    for (int n = 2; n <= 4; ++n) {
      const double g = g_order(src.spec, n);
      table.rows.push_back({static_cast<double>(n), g});
      std::cout << "  g(" << n << ") = " << format_double(g) << "\n";
    }
    const double gw = gamma_window(src.spec, 2, 2);
    const double gt = gamma_threshold(src.spec, e.det1.eta, e.det2.eta, n_max, 1, n_max);
    const auto joint =
        joint_click_probability(src.spec, e.det1, e.det2, e.disc1, e.disc2, e.split, quad);
    const double gc = gamma_from_clicks(joint);
    std::cout << "  gamma_window(2,2) = " << format_double(gw) << "\n"
              << "  gamma_threshold(n1_min=" << n_max << ",n2_min=1) = " << format_double(gt)
              << "\n"
              << "  gamma_clicks(configured discriminators) = " << format_double(gc) << "\n";

    const std::string base = "analytic_" + src.name;
    Csv out;
    out.header = {"g2", "g3", "g4", "gamma_window_22", "gamma_threshold", "gamma_clicks"};
    out.rows.push_back({table.rows[0][1], table.rows[1][1], table.rows[2][1], gw, gt, gc});
    rec.write(dir / (base + ".csv"), to_csv_string(out));
    auto meta = base_meta("analytic", cfg);
    append_source_meta(meta, "source", src.spec);
    meta.emplace_back("p_coinc", format_double(joint.p_coinc));
    meta.emplace_back("p1", format_double(joint.p1));
    meta.emplace_back("p2", format_double(joint.p2));
    rec.write(dir / (base + ".meta"), to_meta_string(meta));
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_manifest(dir, "analytic", opt, cfg, rec, secs);
  return 0;
}

// Golden fixture values regenerated through the brute-force pmf paths.
int cmd_fixtures(const CliOptions& opt) {
  const auto dir = ensure_out_dir(opt);
  OutputRecorder rec;
  const std::string provenance =
      std::string("# regenerate with: pnrhbt fixtures --out <dir>\n") +
      "# method: truncated photon-number sums (n_trunc = 256), 6 significant figures\n" +
      "# artifact_version: " + kVersion + "\n";

  auto six = [](double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return std::string(buf);
  };

  struct Named {
    const char* label;
    SourceSpec spec;
  };
  const std::vector<Named> sources = {{"poisson_2.6", SourceSpec::poisson(2.6)},
                                      {"thermal_1.0", SourceSpec::thermal(1.0)},
                                      {"fml", mix_source_from_mu_g2(2.8, 1.2)},
                                      {"lnt", mix_source_from_mu_g2(2.6, 1.075)},
                                      {"lat", mix_source_from_mu_g2(2.6, 1.001)}};

  {
    std::string body = provenance + "source,k,value\n";
    for (const auto& s : sources) {
      const auto p = pmf(s.spec, 256);
      for (int k = 1; k <= 6; ++k)
        body += std::string(s.label) + "," + std::to_string(k) + "," +
                six(factorial_moment_from_pmf(p, k)) + "\n";
    }
    rec.write(dir / "factorial_moments.csv", body);
  }
  {
    std::string body = provenance + "source,n1,n2,gamma\n";
    for (const auto& s : sources) {
      const auto p = pmf(s.spec, 256);
      for (int n1 : {1, 2, 3}) {
        for (int n2 : {1, 2, 3}) {
          const double g = factorial_moment_from_pmf(p, n1 + n2) /
                           (factorial_moment_from_pmf(p, n1) * factorial_moment_from_pmf(p, n2));
          body += std::string(s.label) + "," + std::to_string(n1) + "," + std::to_string(n2) +
                  "," + six(g) + "\n";
        }
      }
    }
    rec.write(dir / "gamma_window.csv", body);
  }
  {
    // threshold-discriminator curves at the shipped detector operating point
    std::string body = provenance + "source,n2_min,gamma\n";
    for (const auto& s : sources) {
      const auto p = pmf(s.spec, 256);
      for (int n2 = 1; n2 <= 7; ++n2)
        body += std::string(s.label) + "," + std::to_string(n2) + "," +
                six(gamma_threshold_from_pmf(p, 0.17, 0.17, 7, n2, 7)) + "\n";
    }
    rec.write(dir / "gamma_threshold_eq6.csv", body);
  }
  std::cout << "wrote " << rec.paths.size() << " fixture files to " << dir.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-detector photon-coincidence simulator with photon-number-resolving APDs"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  CliOptions opt;
  app.add_option("--config", opt.config_path, "experiment config file (JSON)");
  app.add_option("--preset", opt.preset, "built-in config: fml, lnt, lat, compare");
  app.add_option("--out", opt.out_dir, "output directory")->capture_default_str();
  std::uint64_t seed_value = 0;
  auto* seed_flag = app.add_option("--seed", seed_value, "override the config seed");
  int shards_value = 0;
  auto* shards_flag = app.add_option("--shards", shards_value, "override worker count");
  std::uint64_t pulses_value = 0;
  auto* pulses_flag = app.add_option("--n-pulses", pulses_value, "override pulse count");
  app.add_option("--max-quad-level", opt.max_quad_doublings,
                 "cap on quadrature node doublings")
      ->capture_default_str();

  auto* c_hist = app.add_subcommand("avalanche-hist", "model avalanche-voltage distribution");
  auto* c_sim = app.add_subcommand("simulate", "monte-carlo coincidence histogram");
  auto* c_sweep = app.add_subcommand("sweep", "gamma versus discrimination setting");
  std::string mode_override;
  c_sweep->add_option("--mode", mode_override,
                      "window-exact | threshold-eq6 | voltage-model | monte-carlo");
  auto* c_ana = app.add_subcommand("analytic", "closed-form correlation values");
  auto* c_fix = app.add_subcommand("fixtures", "regenerate golden fixture files");
  for (auto* sub : {c_hist, c_sim, c_sweep, c_ana, c_fix}) sub->fallthrough();

  CLI11_PARSE(app, argc, argv);

  if (*seed_flag) opt.seed = seed_value;
  if (*shards_flag) opt.shards = shards_value;
  if (*pulses_flag) opt.n_pulses = pulses_value;

  try {
    if (c_hist->parsed()) return cmd_avalanche_hist(opt);
    if (c_sim->parsed()) return cmd_simulate(opt);
    if (c_sweep->parsed()) return cmd_sweep(opt, mode_override);
    if (c_ana->parsed()) return cmd_analytic(opt);
    if (c_fix->parsed()) return cmd_fixtures(opt);
  } catch (const ParameterError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const ConvergenceError& e) {
    std::cerr << "numeric convergence error: " << e.what() << "\n";
    return kExitConvergenceError;
  } catch (const InsufficientStatsError& e) {
    std::cerr << "insufficient statistics: " << e.what() << "\n";
    return kExitInsufficientStats;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kExitIoError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
