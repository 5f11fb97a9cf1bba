// Copyright 2026 The ncdlab Authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "ncdlab/ablation.hpp"
#include "ncdlab/eval.hpp"
#include "ncdlab/gradcheck_suite.hpp"
#include "ncdlab/losses.hpp"
#include "ncdlab/multinoulli.hpp"
#include "ncdlab/trainer.hpp"

using namespace ncd;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Verdict {
  bool pass;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

ExperimentConfig reference_config() { return ExperimentConfig{}; }

const std::vector<std::vector<double>> kSkewedPriors = {
    {1.0 / 3, 1.0 / 6, 1.0 / 6, 1.0 / 6, 1.0 / 6},
    {3.0 / 7, 1.0 / 7, 1.0 / 7, 1.0 / 7, 1.0 / 7},
    {0.5, 0.125, 0.125, 0.125, 0.125},
};

Verdict gradient_suite() {
  const auto t0 = Clock::now();
  double worst = 0.0;
  bool ok = true;
  std::size_t rows = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    for (const GradCheckRow& r : run_gradcheck(loss_gradcheck_cases(reference_config(), seed))) {
      ok = ok && r.pass;
      worst = std::max(worst, std::isfinite(r.max_relative_error) ? r.max_relative_error : INFINITY);
      ++rows;
    }
  }
  const double t = seconds_since(t0);
  ok = ok && rows == 60 && t < 30.0;
  return {ok, std::to_string(rows) + " checks, max rel error " + fmt("%.3e", worst) + ", " + fmt("%.2f", t) + " s"};
}

double scalar_of(const std::function<ad::Var(ad::Tape&)>& f) {
  ad::Tape tape;
  return f(tape).scalar();
}

Matrix onehot(std::size_t k, const std::vector<std::size_t>& ids) {
  Matrix m(k, ids.size());
  for (std::size_t c = 0; c < ids.size(); ++c) m(ids[c], c) = 1.0;
  return m;
}

Verdict closed_form_losses() {
  const MultinoulliSpec half(2, {0.5, 0.5});
  const MultinoulliSpec pair(0, {0.5, 0.5});
  struct Case {
    const char* name;
    double got;
    double want;
  };
  const Case cases[] = {
      {"entropy", scalar_of([](ad::Tape& t) { return loss_entropy(t.leaf(Matrix(10, 7, 0.1))); }), std::log(10.0)},
      {"consistency",
       scalar_of([](ad::Tape& t) {
         return loss_consistency(t.leaf(Matrix::from_rows({{0.6}, {0.4}})), t.leaf(Matrix::from_rows({{0.5}, {0.5}})));
       }),
       0.141421},
      {"kl",
       scalar_of([&](ad::Tape& t) { return loss_kl_mean(t.leaf(Matrix::from_rows({{0}, {0}, {0.25}, {0.75}})), half); }),
       0.143841},
      {"var collapse", scalar_of([&](ad::Tape& t) { return loss_covariance(t.leaf(Matrix(2, 6, 0.5)), pair); }), 0.5},
      {"var clustered",
       scalar_of([&](ad::Tape& t) { return loss_covariance(t.leaf(onehot(2, {0, 1, 0, 1})), pair); }), 0.0},
  };
  bool ok = true;
  double worst = 0.0;
  for (const Case& c : cases) {
    const double err = std::abs(c.got - c.want);
    worst = std::max(worst, err);
    ok = ok && err <= 1e-6;
  }
  return {ok, "5 values, max abs error " + fmt("%.3e", worst)};
}

Verdict multinoulli_moments() {
  bool ok = true;
  double worst_cov = 0.0, worst_tv = 0.0;
  for (std::size_t i = 0; i < kSkewedPriors.size(); ++i) {
    const std::vector<double>& p = kSkewedPriors[i];
    const MultinoulliSpec spec(0, p);
    const Matrix sigma = target_covariance(spec);
    for (std::size_t a = 0; a < p.size(); ++a) {
      for (std::size_t b = 0; b < p.size(); ++b) {
        const double direct = (a == b ? p[a] : 0.0) - p[a] * p[b];
        worst_cov = std::max(worst_cov, std::abs(sigma(a, b) - direct));
      }
    }
    Rng rng = make_rng(600 + i, 0);
    std::vector<double> freq(p.size(), 0.0);
    const std::size_t draws = 100000;
    for (std::size_t n = 0; n < draws; ++n) freq[sample_category(spec, rng)] += 1.0 / double(draws);
    worst_tv = std::max(worst_tv, total_variation(freq, p));
  }
  ok = worst_cov <= 1e-12 && worst_tv < 0.01;
  return {ok, "max covariance error " + fmt("%.3e", worst_cov) + ", max TV " + fmt("%.4f", worst_tv)};
}

double exhaustive_best(const Matrix& c) {
  std::vector<std::size_t> perm(c.rows());
  std::iota(perm.begin(), perm.end(), 0);
  double best = -1.0;
  do {
    double s = 0.0;
    for (std::size_t i = 0; i < perm.size(); ++i) s += c(i, perm[i]);
    best = std::max(best, s);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

Verdict hungarian_oracle() {
  Rng rng = make_rng(700, 0);
  std::size_t mismatches = 0, trials = 0;
  for (std::size_t n = 2; n <= 7; ++n) {
    for (int t = 0; t < 1000; ++t, ++trials) {
      Matrix c(n, n);
      for (double& v : c.data()) v = static_cast<double>(rng() % 50);
      if (static_cast<double>(hungarian_match(c).matched) != exhaustive_best(c)) ++mismatches;
    }
  }
  return {mismatches == 0, std::to_string(trials) + " matrices, " + std::to_string(mismatches) + " mismatches"};
}

struct ReferenceRuns {
  std::vector<double> acc;
  std::string history_seed1;
  std::string checkpoint_seed1;
};

std::string history_bytes(const TrainResult& r) {
  std::ostringstream out;
  write_history_csv(r.history, out);
  return out.str();
}

std::string checkpoint_bytes(const TrainResult& r) {
  std::ostringstream out;
  save_checkpoint(r.model, out);
  return out.str();
}

Verdict end_to_end(ReferenceRuns& runs) {
  std::size_t good = 0;
  double slowest = 0.0;
  std::string detail;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    ExperimentConfig c = reference_config();
    c.seed = seed;
    const auto t0 = Clock::now();
    const ExperimentOutcome o = run_experiment(c);
    slowest = std::max(slowest, seconds_since(t0));
    runs.acc.push_back(o.report.novel_acc);
    if (seed == 1) {
      runs.history_seed1 = history_bytes(o.result);
      runs.checkpoint_seed1 = checkpoint_bytes(o.result);
    }
    if (o.report.labeled_accuracy >= 0.95 && o.report.novel_acc >= 0.90) ++good;
    detail += "seed " + std::to_string(seed) + " labeled " + fmt("%.4f", o.report.labeled_accuracy) + " ACC " +
              fmt("%.4f", o.report.novel_acc) + "; ";
  }
  detail += std::to_string(good) + "/3 meet thresholds, slowest run " + fmt("%.1f", slowest) + " s";
  return {good >= 2 && slowest < 300.0, detail};
}

std::vector<double> accs(const CellSummary& s) {
  std::vector<double> out;
  for (const SeedRun& r : s.runs) out.push_back(r.ok ? r.report.novel_acc : 0.0);
  return out;
}

Verdict ablation_directions(const ReferenceRuns& reference) {
  std::vector<AblationCell> cells;
  for (const AblationCell& cell : enumerate_grid(reference_config(), {AblationAxis::loss_components})) {
    if (cell.name == "ce-only" || cell.name == "H-only" || cell.name == "no-var" || cell.name == "no-kl") {
      cells.push_back(cell);
    }
  }
  GridOptions options;
  const std::vector<CellSummary> grid = run_grid(cells, options);
  const double full = median(reference.acc);
  bool ok = cells.size() == 4;
  std::string detail = "full " + fmt("%.4f", full);
  for (const CellSummary& s : grid) {
    const double m = median(accs(s));
    detail += ", " + s.cell.name + " " + fmt("%.4f", m);
    if (s.cell.name == "ce-only" || s.cell.name == "H-only") ok = ok && full - m >= 0.25;
    else ok = ok && full > m;
    ok = ok && s.failures == 0;
  }
  return {ok, detail + " (median ACC)"};
}

Verdict distribution_robustness() {
  std::vector<AblationCell> cells;
  for (const AblationCell& cell : enumerate_grid(reference_config(), {AblationAxis::distribution})) {
    if (cell.name != "uniform-5") cells.push_back(cell);
  }
  GridOptions options;
  const std::vector<CellSummary> grid = run_grid(cells, options);
  bool ok = grid.size() == kSkewedPriors.size();
  std::string detail;
  double previous = INFINITY;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    ok = ok && grid[i].cell.config.data.novel_prior == kSkewedPriors[i] && grid[i].failures == 0;
    const double m = median(accs(grid[i]));
    detail += grid[i].cell.name + " " + fmt("%.4f", m) + ", ";
    ok = ok && m < previous;
    previous = m;
  }
  const CellSummary& skewed = grid.back();
  std::vector<double> tv;
  for (const SeedRun& r : skewed.runs) {
    if (!r.ok) continue;
    const std::vector<double> novel(r.report.novel_mean.begin() + 5, r.report.novel_mean.end());
    tv.push_back(total_variation(novel, kSkewedPriors.back()));
  }
  const double tv_median = tv.empty() ? INFINITY : median(tv);
  ok = ok && tv_median < 0.05;
  return {ok, detail + "TV of novel mean under half-eighths " + fmt("%.4f", tv_median) + " (median ACC, median TV)"};
}

Verdict determinism(const ReferenceRuns& reference) {
  ExperimentConfig c = reference_config();
  c.seed = 1;
  const ExperimentOutcome again = run_experiment(c);
  const bool history = history_bytes(again.result) == reference.history_seed1;
  const bool checkpoint = checkpoint_bytes(again.result) == reference.checkpoint_seed1;
  return {history && checkpoint && !reference.history_seed1.empty(),
          std::string("history ") + (history ? "identical" : "differs") + ", checkpoint " +
              (checkpoint ? "identical" : "differs")};
}

}  // namespace

int main() {
  int failures = 0;
  const auto report = [&](int id, const char* name, const Verdict& v) {
    std::printf("%s %d %s: %s\n", v.pass ? "PASS" : "FAIL", id, name, v.detail.c_str());
    std::fflush(stdout);
    if (!v.pass) ++failures;
  };
  ReferenceRuns reference;
  report(1, "gradient suite", gradient_suite());
  report(2, "closed-form losses", closed_form_losses());
  report(3, "multinoulli moments", multinoulli_moments());
  report(4, "hungarian oracle", hungarian_oracle());
  report(5, "end-to-end reference", end_to_end(reference));
  report(6, "ablation directions", ablation_directions(reference));
  report(7, "distribution robustness", distribution_robustness());
  report(8, "determinism", determinism(reference));
  return failures == 0 ? 0 : 1;
}
