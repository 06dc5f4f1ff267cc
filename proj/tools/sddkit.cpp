// sddkit: train / sweep / analyze / plot / noise-audit front end.
// Exit codes: 0 success, 1 configuration error, 2 runtime failure,
// 3 analyze --assert mismatch.
#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sdd/analyze.hpp"
#include "sdd/blas.hpp"
#include "sdd/dataset.hpp"
#include "sdd/error.hpp"
#include "sdd/pipeline.hpp"
#include "sdd/svgplot.hpp"
#include "sdd/sweep.hpp"

namespace {

struct AssertFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

sdd::RunConfig load_config(const std::string& path,
                           const std::vector<std::string>& overrides) {
  sdd::RunConfig cfg = sdd::parse_config_file(path);
  for (const std::string& kv : overrides) {
    size_t eq = kv.find('=');
    if (eq == std::string::npos)
      throw sdd::ConfigError("--set expects key=value, got: " + kv);
    std::string key = kv.substr(0, eq);
    std::string value = kv.substr(eq + 1);
    while (!key.empty() && key.back() == ' ') key.pop_back();
    while (!value.empty() && value.front() == ' ') value.erase(0, 1);
    sdd::config_set(cfg, key, value);
  }
  cfg.validate();
  return cfg;
}

void print_rounds(const std::vector<sdd::RoundRecord>& rounds) {
  std::printf("%5s %10s %9s %9s %9s %10s %14s\n", "round", "sparsity",
              "train_acc", "val_acc", "test_acc", "test_loss", "flops");
  for (const sdd::RoundRecord& r : rounds)
    std::printf("%5d %10.6f %9.4f %9.4f %9.4f %10.4f %14" PRId64 "\n",
                r.round, r.sparsity, r.train_acc, r.val_acc, r.test_acc,
                r.test_loss, r.flops);
}

void print_verdict(const sdd::SddVerdict& v,
                   const sdd::SparsityCurve& curve) {
  std::printf("classification: %s (tol %.4g)\n",
              sdd::curve_class_name(v.classification), v.tol);
  auto at = [&](int i) {
    return i >= 0 ? curve.points[static_cast<size_t>(i)].sparsity : -1.0;
  };
  if (v.peak_index >= 0)
    std::printf("  first peak   round %d (sparsity %.6f)\n", v.peak_index,
                at(v.peak_index));
  if (v.dip_index >= 0)
    std::printf("  dip          round %d (sparsity %.6f, depth %.4f)\n",
                v.dip_index, at(v.dip_index), v.dip_depth);
  if (v.recovery_index >= 0)
    std::printf("  second peak  round %d (sparsity %.6f, height %.4f)\n",
                v.recovery_index, at(v.recovery_index), v.recovery_height);
  static const char* kPhaseNames[] = {"plateau", "dip", "recovery",
                                      "collapse"};
  for (size_t i = 0; i < v.phases.size() && i < 4; ++i)
    std::printf("  phase %-8s rounds [%d, %d]\n", kPhaseNames[i],
                v.phases[i].first, v.phases[i].last);
}

int cmd_train(const std::string& config_path,
              const std::vector<std::string>& overrides, double tol) {
  sdd::RunConfig cfg = load_config(config_path, overrides);
  sdd::PruneRun run = sdd::imp_run(cfg);
  std::printf("run %s: %zu rounds, config hash 0x%016" PRIx64 "\n",
              run.dir.c_str(), run.rounds.size(), run.config_hash);
  print_rounds(run.rounds);
  if (run.rounds.size() >= 3) {
    sdd::SparsityCurve curve = sdd::curve_from_records(run.rounds);
    print_verdict(sdd::detect_sdd(curve, tol), curve);
  }
  return 0;
}

int cmd_sweep(const std::string& grid_path, int parallel,
              const std::string& summary_csv, bool early_stop, int patience,
              double tol, double flops_per_joule, double gco2_per_kwh) {
  std::vector<sdd::RunConfig> configs = sdd::expand_grid_file(grid_path);
  std::printf("sweep: %zu runs, parallelism %d\n", configs.size(), parallel);
  std::vector<sdd::RunOutcome> outcomes = sdd::run_sweep(configs, parallel);
  int failures = 0;
  for (const sdd::RunOutcome& o : outcomes)
    if (!o.ok) {
      ++failures;
      std::fprintf(stderr, "run %s failed: %s\n", o.dir.c_str(),
                   o.error.c_str());
    }
  sdd::SummaryOptions opts;
  opts.apply_early_stop = early_stop;
  opts.patience = patience;
  opts.tol = tol;
  opts.flops_per_joule = flops_per_joule;
  opts.grams_co2_per_kwh = gco2_per_kwh;
  std::vector<sdd::SummaryRow> rows = sdd::summarize(outcomes, opts);
  std::fputs(sdd::format_summary_table(rows).c_str(), stdout);
  if (!summary_csv.empty()) {
    sdd::write_summary_csv(summary_csv, rows);
    std::printf("summary written to %s\n", summary_csv.c_str());
  }
  if (failures > 0)
    throw sdd::Error(std::to_string(failures) + " of " +
                     std::to_string(outcomes.size()) + " runs failed");
  return 0;
}

int cmd_analyze(const std::string& run_dir, double tol,
                const std::string& expect) {
  sdd::PruneRun run = sdd::load_run(run_dir);
  sdd::SparsityCurve curve = sdd::curve_from_records(run.rounds);
  sdd::SddVerdict v = sdd::detect_sdd(curve, tol);
  print_verdict(v, curve);
  if (!expect.empty() &&
      expect != sdd::curve_class_name(v.classification))
    throw AssertFailure("expected " + expect + ", detected " +
                        sdd::curve_class_name(v.classification));
  return 0;
}

int cmd_plot(const std::vector<std::string>& run_dirs,
             std::vector<std::string> labels, const std::string& out,
             const std::string& title, bool linear, bool shade, double tol) {
  if (!labels.empty() && labels.size() != run_dirs.size())
    throw sdd::ConfigError("--label count must match --run count");
  std::vector<sdd::SparsityCurve> curves;
  for (size_t i = 0; i < run_dirs.size(); ++i) {
    sdd::PruneRun run = sdd::load_run(run_dirs[i]);
    curves.push_back(sdd::curve_from_records(run.rounds));
    if (labels.size() < curves.size())
      labels.push_back(
          std::filesystem::path(run_dirs[i]).filename().string());
  }
  sdd::PlotOptions opts;
  opts.title = title;
  opts.log_remaining_axis = !linear;
  if (shade) {
    sdd::SddVerdict v = sdd::detect_sdd(curves.front(), tol);
    if (v.phases.empty())
      std::fprintf(stderr,
                   "note: first curve is %s; skipping phase shading\n",
                   sdd::curve_class_name(v.classification));
    else {
      opts.shade_phases = true;
      opts.verdict = v;
    }
  }
  sdd::write_svg(out, sdd::render_curves_svg(curves, labels, opts));
  std::printf("plot written to %s\n", out.c_str());
  return 0;
}

int cmd_noise_audit(const std::string& config_path,
                    const std::vector<std::string>& overrides) {
  sdd::RunConfig cfg = load_config(config_path, overrides);
  sdd::DataBundle data = sdd::assemble_data(cfg);
  sdd::FlipStats stats = sdd::audit_noise(data.train);
  std::printf("train examples: %" PRId64 "\n", stats.total);
  std::printf("flipped labels: %" PRId64 " (%.6f of total)\n", stats.flipped,
              stats.total > 0
                  ? static_cast<double>(stats.flipped) /
                        static_cast<double>(stats.total)
                  : 0.0);
  std::printf("uniformity chi-square: %.6f (dof %d, p = %.6g)\n",
              stats.chi_square, stats.dof, stats.p_value);
  std::printf("flip transitions [from -> to]:\n");
  for (size_t from = 0; from < stats.transition.size(); ++from) {
    std::printf("  %2zu:", from);
    for (int64_t n : stats.transition[from]) std::printf(" %6" PRId64, n);
    std::printf("\n");
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  sdd::init_blas_runtime(argv);

  CLI::App app{"iterative-pruning experiment toolkit"};
  app.require_subcommand(1);

  std::string config_path, grid_path, run_dir, out_path, title, expect;
  std::string summary_csv;
  std::vector<std::string> overrides, run_dirs, labels;
  double tol = 0.05, sweep_tol = 0.02;
  double flops_per_joule = 0.0, gco2_per_kwh = 0.0;
  int parallel = 1, patience = 2;
  bool early_stop = false, linear = false, shade = false;

  CLI::App* train = app.add_subcommand(
      "train", "run the iterative magnitude-pruning pipeline");
  train->add_option("--config", config_path, "run config file")->required();
  train->add_option("--set", overrides, "override: key=value");
  train->add_option("--tol", tol, "detection tolerance")->capture_default_str();

  CLI::App* sweep =
      app.add_subcommand("sweep", "run a config grid and summarize");
  sweep->add_option("--config", grid_path, "grid config file")->required();
  sweep->add_option("--parallel", parallel, "worker threads")->capture_default_str();
  sweep->add_option("--summary", summary_csv, "summary CSV output path");
  sweep->add_flag("--early-stop", early_stop,
                  "also report round-level early stopping");
  sweep->add_option("--patience", patience, "early-stop patience")->capture_default_str();
  sweep->add_option("--tol", sweep_tol, "early-stop tolerance")->capture_default_str();
  sweep->add_option("--flops-per-joule", flops_per_joule,
                    "hardware efficiency for CO2 accounting");
  sweep->add_option("--gco2-per-kwh", gco2_per_kwh,
                    "grid carbon intensity for CO2 accounting");

  CLI::App* analyze =
      app.add_subcommand("analyze", "classify a finished run's curve");
  analyze->add_option("--run", run_dir, "run directory")->required();
  analyze->add_option("--tol", tol, "detection tolerance")->capture_default_str();
  analyze->add_option("--assert", expect,
                      "exit 3 unless the classification matches");

  CLI::App* plot = app.add_subcommand("plot", "render run curves to SVG");
  plot->add_option("--run", run_dirs, "run directory (repeatable)")
      ->required();
  plot->add_option("--label", labels, "legend label per --run");
  plot->add_option("--out", out_path, "output .svg path")->required();
  plot->add_option("--title", title, "plot title");
  plot->add_flag("--linear-x", linear, "linear sparsity axis");
  plot->add_flag("--shade", shade, "shade detected phases (first curve)");
  plot->add_option("--tol", tol, "detection tolerance")->capture_default_str();

  CLI::App* audit = app.add_subcommand(
      "noise-audit", "report label-flip statistics for a config");
  audit->add_option("--config", config_path, "run config file")->required();
  audit->add_option("--set", overrides, "override: key=value");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (*train) return cmd_train(config_path, overrides, tol);
    if (*sweep)
      return cmd_sweep(grid_path, parallel, summary_csv, early_stop,
                       patience, sweep_tol, flops_per_joule, gco2_per_kwh);
    if (*analyze) return cmd_analyze(run_dir, tol, expect);
    if (*plot)
      return cmd_plot(run_dirs, labels, out_path, title, linear, shade, tol);
    if (*audit) return cmd_noise_audit(config_path, overrides);
  } catch (const AssertFailure& e) {
    std::fprintf(stderr, "assertion failed: %s\n", e.what());
    return 3;
  } catch (const sdd::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 1;
  } catch (const sdd::InputError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
