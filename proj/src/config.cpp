// Copyright 2026 The ncdlab Authors
// SPDX-License-Identifier: Apache-2.0

#include "ncdlab/config.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <sstream>
#include <type_traits>

#include "ncdlab/csv.hpp"

namespace ncd {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> items;
  if (trim(value).empty()) return items;
  for (const auto& part : csv::split_line(value)) items.push_back(trim(part));
  return items;
}

double to_real(const std::string& field, const std::string& text) {
  const auto slash = text.find('/');
  try {
    if (slash != std::string::npos) {
      const double num = csv::parse_real(trim(text.substr(0, slash)), field);
      const double den = csv::parse_real(trim(text.substr(slash + 1)), field);
      if (den == 0.0) throw ConfigError(field, "zero denominator in '" + text + "'");
      return num / den;
    }
    return csv::parse_real(text, field);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception&) {
    throw ConfigError(field, "expected a number, got '" + text + "'");
  }
}

std::size_t to_count(const std::string& field, const std::string& text) {
  long long v = 0;
  try {
    v = csv::parse_int(text, field);
  } catch (const std::exception&) {
    throw ConfigError(field, "expected a non-negative integer, got '" + text + "'");
  }
  if (v < 0) throw ConfigError(field, "expected a non-negative integer, got '" + text + "'");
  return static_cast<std::size_t>(v);
}

using Setter = std::function<void(ExperimentConfig&, const std::string& field, const std::string& value)>;

template <typename Section, typename T>
Setter bind(Section ExperimentConfig::*section, T Section::*member) {
  return [section, member](ExperimentConfig& c, const std::string& f, const std::string& v) {
    if constexpr (std::is_same_v<T, double>) {
      c.*section.*member = to_real(f, v);
    } else {
      c.*section.*member = to_count(f, v);
    }
  };
}

template <typename T>
Setter bind_weight(T LossWeights::*member) {
  return [member](ExperimentConfig& c, const std::string& f, const std::string& v) {
    c.loss.weights.*member = to_real(f, v);
  };
}

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"data.dim", bind(&ExperimentConfig::data, &DataConfig::dim)},
      {"data.labeled_classes", bind(&ExperimentConfig::data, &DataConfig::labeled_classes)},
      {"data.novel_prior",
       [](ExperimentConfig& c, const std::string& f, const std::string& v) {
         c.data.novel_prior.clear();
         for (const auto& item : split_list(v)) c.data.novel_prior.push_back(to_real(f, item));
       }},
      {"data.n_labeled", bind(&ExperimentConfig::data, &DataConfig::n_labeled)},
      {"data.n_unlabeled", bind(&ExperimentConfig::data, &DataConfig::n_unlabeled)},
      {"data.n_test_labeled", bind(&ExperimentConfig::data, &DataConfig::n_test_labeled)},
      {"data.n_test_unlabeled", bind(&ExperimentConfig::data, &DataConfig::n_test_unlabeled)},
      {"data.separation", bind(&ExperimentConfig::data, &DataConfig::separation)},
      {"data.scale", bind(&ExperimentConfig::data, &DataConfig::scale)},
      {"augmentation.kind",
       [](ExperimentConfig& c, const std::string& f, const std::string& v) {
         if (v == "weak") {
           c.augmentation.kind = AugmentationKind::weak;
         } else if (v == "strong") {
           c.augmentation.kind = AugmentationKind::strong;
         } else {
           throw ConfigError(f, "expected weak or strong, got '" + v + "'");
         }
       }},
      {"augmentation.noise", bind(&ExperimentConfig::augmentation, &AugmentationPolicy::noise_sigma)},
      {"augmentation.rotation", bind(&ExperimentConfig::augmentation, &AugmentationPolicy::max_rotation)},
      {"augmentation.dropout", bind(&ExperimentConfig::augmentation, &AugmentationPolicy::dropout_prob)},
      {"augmentation.jitter", bind(&ExperimentConfig::augmentation, &AugmentationPolicy::scale_jitter)},
      {"model.hidden",
       [](ExperimentConfig& c, const std::string& f, const std::string& v) {
         c.model.hidden.clear();
         for (const auto& item : split_list(v)) c.model.hidden.push_back(to_count(f, item));
       }},
      {"model.embedding", bind(&ExperimentConfig::model, &ModelConfig::embedding_dim)},
      {"optim.batch_labeled", bind(&ExperimentConfig::optim, &OptimConfig::batch_labeled)},
      {"optim.batch_unlabeled", bind(&ExperimentConfig::optim, &OptimConfig::batch_unlabeled)},
      {"optim.epochs", bind(&ExperimentConfig::optim, &OptimConfig::epochs)},
      {"optim.steps_per_epoch", bind(&ExperimentConfig::optim, &OptimConfig::steps_per_epoch)},
      {"optim.lr", bind(&ExperimentConfig::optim, &OptimConfig::lr)},
      {"optim.decay_every", bind(&ExperimentConfig::optim, &OptimConfig::decay_every)},
      {"optim.decay_factor", bind(&ExperimentConfig::optim, &OptimConfig::decay_factor)},
      {"optim.clip_norm", bind(&ExperimentConfig::optim, &OptimConfig::clip_norm)},
      {"loss.schedule",
       [](ExperimentConfig& c, const std::string& f, const std::string& v) {
         if (v == "fixed") {
           c.loss.weights.mode = ScheduleMode::fixed;
         } else if (v == "adaptive") {
           c.loss.weights.mode = ScheduleMode::adaptive;
         } else {
           throw ConfigError(f, "expected fixed or adaptive, got '" + v + "'");
         }
       }},
      {"loss.ce", bind_weight(&LossWeights::ce)},
      {"loss.entropy", bind_weight(&LossWeights::entropy)},
      {"loss.consistency", bind_weight(&LossWeights::consistency)},
      {"loss.kl", bind_weight(&LossWeights::kl)},
      {"loss.var", bind_weight(&LossWeights::var)},
      {"loss.unlabeled", bind_weight(&LossWeights::unlabeled)},
      {"loss.components",
       [](ExperimentConfig& c, const std::string& f, const std::string& v) {
         LossSwitches s{false, false, false, false, false};
         for (const auto& item : split_list(v)) {
           if (item == "ce") {
             s.ce = true;
           } else if (item == "H") {
             s.entropy = true;
           } else if (item == "mse") {
             s.consistency = true;
           } else if (item == "kl") {
             s.kl = true;
           } else if (item == "var") {
             s.var = true;
           } else {
             throw ConfigError(f, "unknown component '" + item + "' (expected ce, H, mse, kl, var)");
           }
         }
         c.loss.enabled = s;
       }},
      {"loss.tau", bind(&ExperimentConfig::loss, &LossConfig::tau)},
      {"loss.sharpen", bind(&ExperimentConfig::loss, &LossConfig::sharpen)},
      {"run.seed",
       [](ExperimentConfig& c, const std::string& f, const std::string& v) { c.seed = to_count(f, v); }},
  };
  return table;
}

std::string join_reals(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + csv::format_real(v[i]);
  return s;
}

std::string components_text(const LossSwitches& s) {
  std::vector<std::string> names;
  if (s.ce) names.push_back("ce");
  if (s.entropy) names.push_back("H");
  if (s.consistency) names.push_back("mse");
  if (s.kl) names.push_back("kl");
  if (s.var) names.push_back("var");
  std::string out;
  for (std::size_t i = 0; i < names.size(); ++i) out += (i ? ", " : "") + names[i];
  return out;
}

void require(bool ok, const char* field, const std::string& message) {
  if (!ok) throw ConfigError(field, message);
}

}  // namespace

MultinoulliSpec ExperimentConfig::spec() const { return MultinoulliSpec(data.labeled_classes, data.novel_prior); }

MixtureGeometry ExperimentConfig::geometry() const {
  return {data.dim, data.n_labeled, data.n_unlabeled, data.separation, data.scale};
}

MlpShape ExperimentConfig::shape() const {
  return {data.dim, model.hidden, model.embedding_dim, data.labeled_classes + data.novel_prior.size()};
}

ExperimentConfig parse_config(std::istream& in) {
  ExperimentConfig config;
  std::string section;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string text = trim(line);
    if (text.empty()) continue;
    if (text.front() == '[') {
      if (text.back() != ']') throw ConfigError("line " + std::to_string(line_no), "unterminated section header");
      section = trim(std::string_view(text).substr(1, text.size() - 2));
      continue;
    }
    const auto eq = text.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(line_no), "expected key = value");
    }
    const std::string field = section + "." + trim(std::string_view(text).substr(0, eq));
    const auto it = setters().find(field);
    if (it == setters().end()) throw ConfigError(field, "unknown key");
    it->second(config, field, trim(std::string_view(text).substr(eq + 1)));
  }
  validate(config);
  return config;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open '" + path + "'");
  return parse_config(in);
}

void validate(const ExperimentConfig& c) {
  require(c.data.dim > 0, "data.dim", "must be positive");
  require(!c.data.novel_prior.empty(), "data.novel_prior", "needs at least one novel class");
  for (double p : c.data.novel_prior) {
    require(p > 0.0 && std::isfinite(p), "data.novel_prior",
            "every entry must be strictly positive, got " + csv::format_real(p));
  }
  const double total = std::accumulate(c.data.novel_prior.begin(), c.data.novel_prior.end(), 0.0);
  require(std::abs(total - 1.0) <= 1e-9, "data.novel_prior",
          "entries must sum to 1, got " + csv::format_real(total));
  require(c.data.n_labeled > 0 || c.data.labeled_classes == 0, "data.n_labeled", "must be positive");
  require(c.data.n_unlabeled > 0, "data.n_unlabeled", "must be positive");
  require(c.data.n_test_unlabeled > 0, "data.n_test_unlabeled", "must be positive");
  require(c.data.separation > 0.0, "data.separation", "must be positive");
  require(c.data.scale >= 0.0, "data.scale", "must be non-negative");

  const auto& a = c.augmentation;
  require(a.noise_sigma >= 0.0, "augmentation.noise", "must be non-negative");
  require(a.max_rotation >= 0.0, "augmentation.rotation", "must be non-negative");
  require(a.dropout_prob >= 0.0 && a.dropout_prob < 1.0, "augmentation.dropout", "must lie in [0, 1)");
  require(a.scale_jitter >= 0.0 && a.scale_jitter < 1.0, "augmentation.jitter", "must lie in [0, 1)");

  for (std::size_t h : c.model.hidden) require(h > 0, "model.hidden", "widths must be positive");
  require(c.model.embedding_dim > 0, "model.embedding", "must be positive");

  const std::size_t U = c.data.novel_prior.size();
  require(c.optim.batch_labeled > 0, "optim.batch_labeled", "must be positive");
  require(c.optim.batch_unlabeled >= 10 * U, "optim.batch_unlabeled",
          "batch-size rule: unlabeled batches need at least 10 x U = " + std::to_string(10 * U) +
              " instances, got " + std::to_string(c.optim.batch_unlabeled));
  require(c.optim.batch_unlabeled <= c.data.n_unlabeled, "optim.batch_unlabeled",
          "exceeds the unlabeled pool size");
  require(c.optim.steps_per_epoch > 0, "optim.steps_per_epoch", "must be positive");
  require(c.optim.lr >= 0.0, "optim.lr", "must be non-negative");
  require(c.optim.decay_every > 0, "optim.decay_every", "must be positive");
  require(c.optim.decay_factor > 0.0 && c.optim.decay_factor <= 1.0, "optim.decay_factor",
          "must lie in (0, 1]");
  require(c.optim.clip_norm > 0.0, "optim.clip_norm", "must be positive");

  const auto& w = c.loss.weights;
  for (auto [value, name] : {std::pair{w.ce, "loss.ce"}, {w.entropy, "loss.entropy"},
                             {w.consistency, "loss.consistency"}, {w.kl, "loss.kl"},
                             {w.var, "loss.var"}, {w.unlabeled, "loss.unlabeled"}}) {
    require(value >= 0.0 && std::isfinite(value), name, "must be a non-negative number");
  }
}

std::string to_text(const ExperimentConfig& c) {
  std::ostringstream o;
  const auto r = csv::format_real;
  o << "[data]\n"
    << "dim = " << c.data.dim << '\n'
    << "labeled_classes = " << c.data.labeled_classes << '\n'
    << "novel_prior = " << join_reals(c.data.novel_prior) << '\n'
    << "n_labeled = " << c.data.n_labeled << '\n'
    << "n_unlabeled = " << c.data.n_unlabeled << '\n'
    << "n_test_labeled = " << c.data.n_test_labeled << '\n'
    << "n_test_unlabeled = " << c.data.n_test_unlabeled << '\n'
    << "separation = " << r(c.data.separation) << '\n'
    << "scale = " << r(c.data.scale) << '\n'
    << "\n[augmentation]\n"
    << "kind = " << (c.augmentation.kind == AugmentationKind::strong ? "strong" : "weak") << '\n'
    << "noise = " << r(c.augmentation.noise_sigma) << '\n'
    << "rotation = " << r(c.augmentation.max_rotation) << '\n'
    << "dropout = " << r(c.augmentation.dropout_prob) << '\n'
    << "jitter = " << r(c.augmentation.scale_jitter) << '\n'
    << "\n[model]\n"
    << "hidden = ";
  for (std::size_t i = 0; i < c.model.hidden.size(); ++i) o << (i ? ", " : "") << c.model.hidden[i];
  o << '\n'
    << "embedding = " << c.model.embedding_dim << '\n'
    << "\n[optim]\n"
    << "batch_labeled = " << c.optim.batch_labeled << '\n'
    << "batch_unlabeled = " << c.optim.batch_unlabeled << '\n'
    << "epochs = " << c.optim.epochs << '\n'
    << "steps_per_epoch = " << c.optim.steps_per_epoch << '\n'
    << "lr = " << r(c.optim.lr) << '\n'
    << "decay_every = " << c.optim.decay_every << '\n'
    << "decay_factor = " << r(c.optim.decay_factor) << '\n'
    << "clip_norm = " << r(c.optim.clip_norm) << '\n'
    << "\n[loss]\n"
    << "schedule = " << (c.loss.weights.mode == ScheduleMode::adaptive ? "adaptive" : "fixed") << '\n'
    << "ce = " << r(c.loss.weights.ce) << '\n'
    << "entropy = " << r(c.loss.weights.entropy) << '\n'
    << "consistency = " << r(c.loss.weights.consistency) << '\n'
    << "kl = " << r(c.loss.weights.kl) << '\n'
    << "var = " << r(c.loss.weights.var) << '\n'
    << "unlabeled = " << r(c.loss.weights.unlabeled) << '\n'
    << "components = " << components_text(c.loss.enabled) << '\n'
    << "tau = " << r(c.loss.tau) << '\n'
    << "sharpen = " << r(c.loss.sharpen) << '\n'
    << "\n[run]\n"
    << "seed = " << c.seed << '\n';
  return o.str();
}

std::uint64_t config_hash(const ExperimentConfig& config) {
  ExperimentConfig unseeded = config;
  unseeded.seed = 0;
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : to_text(unseeded)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

LossWeights effective_weights(const LossConfig& loss, std::size_t epoch) {
  LossWeights w = weights_at_epoch(loss.weights, epoch);
  if (!loss.enabled.ce) w.ce = 0.0;
  if (!loss.enabled.entropy) w.entropy = 0.0;
  if (!loss.enabled.consistency) w.consistency = 0.0;
  if (!loss.enabled.kl) w.kl = 0.0;
  if (!loss.enabled.var) w.var = 0.0;
  return w;
}

}  // namespace ncd
