// Copyright 2026 The ncdlab Authors
// SPDX-License-Identifier: Apache-2.0

#include "ncdlab/cli.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "ncdlab/ablation.hpp"
#include "ncdlab/config.hpp"
#include "ncdlab/csv.hpp"
#include "ncdlab/eval.hpp"
#include "ncdlab/gradcheck_suite.hpp"
#include "ncdlab/plot.hpp"
#include "ncdlab/trainer.hpp"

namespace ncd {

namespace fs = std::filesystem;

namespace {

enum class LogLevel { quiet, info, debug };

struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

LogLevel log_level(std::ostream& err) {
  const char* env = std::getenv("NCDLAB_LOG");
  if (env == nullptr || std::string(env).empty() || std::string(env) == "info") return LogLevel::info;
  if (std::string(env) == "quiet") return LogLevel::quiet;
  if (std::string(env) == "debug") return LogLevel::debug;
  err << "warning: NCDLAB_LOG='" << env << "' not one of quiet, info, debug; using info\n";
  return LogLevel::info;
}

struct Options {
  std::string config_path;
  std::string out = "out";
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::size_t workers = 1;
  std::string axes;
  std::string plot_input;
  bool out_given = false;
};

ExperimentConfig load(const Options& o) {
  ExperimentConfig c = o.config_path.empty() ? ExperimentConfig{} : load_config(o.config_path);
  if (o.seed_given) c.seed = o.seed;
  validate(c);
  return c;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot write '" + path.string() + "'");
  return f;
}

void make_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw InputError("cannot create '" + dir.string() + "': " + ec.message());
}

std::string hash_hex(std::uint64_t h) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void write_json(const fs::path& path, const nlohmann::ordered_json& j) {
  std::ofstream f = open_out(path);
  f << j.dump(2) << '\n';
}

void write_batch_dump(const fs::path& path, const TrainingDiverged& e) {
  std::ofstream f = open_out(path);
  f << "view,column";
  for (std::size_t r = 0; r < e.view1.rows(); ++r) f << ",x" << r;
  f << '\n';
  for (const auto& [name, m] : {std::pair{"view1", &e.view1}, std::pair{"view2", &e.view2}}) {
    for (std::size_t c = 0; c < m->cols(); ++c) {
      f << name << ',' << c;
      for (std::size_t r = 0; r < m->rows(); ++r) f << ',' << csv::format_real((*m)(r, c));
      f << '\n';
    }
  }
}

/// Artifacts of one trained run. Shared by train and ablate.
void write_run_artifacts(const fs::path& dir, const ExperimentConfig& config, const ExperimentOutcome& run,
                         bool full) {
  make_dir(dir);
  open_out(dir / "config.ini") << to_text(config);
  {
    std::ofstream f = open_out(dir / "history.csv");
    write_history_csv(run.result.history, f);
  }
  {
    std::ofstream f = open_out(dir / "checkpoint.txt");
    save_checkpoint(run.result.model, f);
  }
  {
    std::ofstream f = open_out(dir / "eval.csv");
    write_eval_csv(run.report, f);
  }
  if (!full) return;
  {
    std::ofstream f = open_out(dir / "eval.txt");
    write_eval_text(run.report, f);
  }
  {
    std::ofstream f = open_out(dir / "confusion.csv");
    write_confusion_csv(run.report, f);
  }
  {
    std::ofstream f = open_out(dir / "embeddings.csv");
    dump_embeddings(run.result.model, run.test_data, f);
  }
  {
    std::ofstream f = open_out(dir / "epochs.csv");
    f << "epoch,lr,lambda_ce,lambda_kl,lambda_var,mean_total_loss\n";
    for (const EpochSummary& e : run.result.epochs) write_epoch_line(f, e);
  }
}

int cmd_generate(const Options& o, std::ostream& out, LogLevel level) {
  const ExperimentConfig c = load(o);
  const MultinoulliSpec spec = c.spec();
  const SyntheticDataset data = generate(c.geometry(), spec, c.seed);
  const SyntheticDataset test =
      generate_split(data, spec, c.data.n_test_labeled, c.data.n_test_unlabeled, c.seed + kTestSeedOffset);
  const fs::path dir(o.out);
  make_dir(dir);
  {
    std::ofstream f = open_out(dir / "dataset.csv");
    write_dataset_csv(data, f);
  }
  {
    std::ofstream f = open_out(dir / "test.csv");
    write_dataset_csv(test, f);
  }
  if (level != LogLevel::quiet) {
    out << "wrote " << (dir / "dataset.csv").string() << " (" << data.labeled_size() + data.unlabeled_size()
        << " rows) and " << (dir / "test.csv").string() << '\n';
  }
  return kExitOk;
}

int cmd_train(const Options& o, std::ostream& out, std::ostream& err, LogLevel level) {
  const ExperimentConfig c = load(o);
  const fs::path dir(o.out);
  make_dir(dir);
  nlohmann::ordered_json manifest;
  manifest["config_hash"] = hash_hex(config_hash(c));
  manifest["seeds"] = {c.seed};
  manifest["layout"] = {"config.ini",     "history.csv",   "checkpoint.txt", "eval.csv",     "eval.txt",
                        "confusion.csv", "embeddings.csv", "epochs.csv",     "manifest.json"};
  try {
    const ExperimentOutcome run = run_experiment(c, [&](const EpochSummary& e) {
      if (level != LogLevel::quiet) write_epoch_line(out, e);
    });
    write_run_artifacts(dir, c, run, true);
    manifest["runs"] = {{{"seed", c.seed}, {"status", "ok"}}};
    write_json(dir / "manifest.json", manifest);
    if (level != LogLevel::quiet) write_eval_text(run.report, out);
    return kExitOk;
  } catch (const TrainingDiverged& e) {
    write_batch_dump(dir / "diverged_batch.csv", e);
    manifest["runs"] = {{{"seed", c.seed}, {"status", "diverged"}, {"epoch", e.epoch}, {"step", e.step}}};
    write_json(dir / "manifest.json", manifest);
    err << "error: " << e.what() << " (batch written to " << (dir / "diverged_batch.csv").string() << ")\n";
    return kExitNumerical;
  }
}

int cmd_ablate(const Options& o, std::ostream& out, std::ostream& err, LogLevel level) {
  const ExperimentConfig c = load(o);
  std::vector<AblationAxis> axes;
  try {
    axes = parse_axes(o.axes);
  } catch (const std::invalid_argument& e) {
    throw InputError(std::string("--axes: ") + e.what());
  }
  const std::vector<AblationCell> cells = enumerate_grid(c, axes);
  const fs::path dir(o.out);
  make_dir(dir);
  if (level != LogLevel::quiet) {
    out << "ablation: " << cells.size() << " cells x 3 seeds on " << o.workers << " worker(s)\n";
  }

  std::mutex log_mutex;
  GridOptions options;
  options.seeds = 3;
  options.workers = o.workers;
  options.sink = [&](const AblationCell& cell, std::uint64_t seed, const ExperimentOutcome& run) {
    ExperimentConfig config = cell.config;
    config.seed = seed;
    write_run_artifacts(dir / "runs" / (cell.axis + "-" + cell.name) / ("seed" + std::to_string(seed)), config, run,
                        false);
    if (level == LogLevel::debug) {
      std::lock_guard lock(log_mutex);
      out << cell.axis << '/' << cell.name << " seed " << seed << ": acc " << run.report.labeled_accuracy
          << " ACC " << run.report.novel_acc << '\n';
    }
  };
  const std::vector<CellSummary> grid = run_grid(cells, options);
  {
    std::ofstream f = open_out(dir / "grid.csv");
    write_grid_csv(grid, f);
  }

  nlohmann::ordered_json manifest;
  manifest["config_hash"] = hash_hex(config_hash(c));
  manifest["seeds"] = {c.seed, c.seed + 1, c.seed + 2};
  manifest["axes"] = nlohmann::ordered_json::array();
  for (AblationAxis a : axes) manifest["axes"].push_back(axis_name(a));
  manifest["layout"] = {"grid.csv", "manifest.json", "runs/<axis>-<cell>/seed<N>/"};
  manifest["runs"] = nlohmann::ordered_json::array();
  std::size_t failed = 0, total = 0;
  for (const CellSummary& s : grid) {
    for (const SeedRun& r : s.runs) {
      ++total;
      nlohmann::ordered_json entry = {{"axis", s.cell.axis},
                                      {"cell", s.cell.name},
                                      {"config_hash", hash_hex(config_hash(s.cell.config))},
                                      {"seed", r.seed},
                                      {"status", r.ok ? "ok" : "failed"}};
      if (!r.ok) {
        entry["error"] = r.error;
        ++failed;
        err << "warning: " << s.cell.axis << '/' << s.cell.name << " seed " << r.seed << " failed: " << r.error
            << '\n';
      }
      manifest["runs"].push_back(entry);
    }
  }
  write_json(dir / "manifest.json", manifest);
  if (level != LogLevel::quiet) write_grid_csv(grid, out);
  return failed == total && total > 0 ? kExitNumerical : kExitOk;
}

int cmd_gradcheck(const Options& o, std::ostream& out, LogLevel) {
  const ExperimentConfig c = load(o);
  const std::vector<GradCheckRow> rows = run_gradcheck(loss_gradcheck_cases(c, c.seed));
  write_gradcheck_table(rows, out);
  if (o.out_given) {
    make_dir(o.out);
    std::ofstream f = open_out(fs::path(o.out) / "gradcheck.csv");
    write_gradcheck_table(rows, f);
  }
  for (const GradCheckRow& r : rows) {
    if (!r.pass) return kExitNumerical;
  }
  return kExitOk;
}

int cmd_plot(const Options& o, std::ostream& out, LogLevel level) {
  std::ifstream in(o.plot_input, std::ios::binary);
  if (!in) throw InputError("cannot open '" + o.plot_input + "'");
  const std::string svg = render_svg(in);
  fs::path target(o.out);
  if (target.extension() != ".svg") {
    make_dir(target);
    target /= fs::path(o.plot_input).stem().string() + ".svg";
  } else if (target.has_parent_path()) {
    make_dir(target.parent_path());
  }
  open_out(target) << svg;
  if (level != LogLevel::quiet) out << "wrote " << target.string() << '\n';
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Novel category discovery lab on synthetic mixtures", "ncdlab"};
  app.require_subcommand(1, 1);
  Options o;

  auto add_common = [&](CLI::App* sub, bool with_config) {
    if (with_config) sub->add_option("--config", o.config_path, "Experiment config file")->check(CLI::ExistingFile);
    sub->add_option("--out", o.out, "Output directory");
    if (with_config) {
      sub->add_option_function<std::uint64_t>(
          "--seed", [&](const std::uint64_t& s) { o.seed = s, o.seed_given = true; }, "Override run.seed");
    }
  };
  CLI::App* gen = app.add_subcommand("generate", "Write the training pools and a test split as CSV");
  add_common(gen, true);
  CLI::App* tr = app.add_subcommand("train", "Train, evaluate on a fresh test split, write artifacts");
  add_common(tr, true);
  CLI::App* ab = app.add_subcommand("ablate", "Run the ablation grid (3 seeds per cell)");
  add_common(ab, true);
  ab->add_option("--workers", o.workers, "Parallel runs")->check(CLI::PositiveNumber);
  ab->add_option("--axes", o.axes,
                 "Comma-separated subset of loss-components,distribution,augmentation,split,model");
  CLI::App* gc = app.add_subcommand("gradcheck", "Finite-difference check of every loss");
  add_common(gc, true);
  CLI::App* pl = app.add_subcommand("plot", "Render a history or grid CSV as SVG");
  pl->add_option("input", o.plot_input, "history.csv or grid.csv")->required();
  pl->add_option("--out", o.out, "Output .svg file or directory");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  if (!reversed.empty()) reversed.pop_back();
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitInputError;
  }

  for (CLI::App* sub : {gen, tr, ab, gc, pl}) {
    if (sub->parsed()) o.out_given = sub->get_option("--out")->count() > 0;
  }
  const LogLevel level = log_level(err);
  try {
    if (gen->parsed()) return cmd_generate(o, out, level);
    if (tr->parsed()) return cmd_train(o, out, err, level);
    if (ab->parsed()) return cmd_ablate(o, out, err, level);
    if (gc->parsed()) return cmd_gradcheck(o, out, level);
    if (pl->parsed()) return cmd_plot(o, out, level);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitInputError;
  } catch (const PlotInputError& e) {
    err << "input error: " << e.what() << '\n';
    return kExitInputError;
  } catch (const InputError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInputError;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  }
  return kExitInputError;
}

}  // namespace ncd
