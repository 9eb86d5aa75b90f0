/*
 * Copyright 2026 The opsrec Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *   http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "opsrec/train.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <fmt/format.h>

namespace opsrec {

Objective parse_objective(const std::string& s) {
  if (s == "pretrain") return Objective::kPretrain;
  if (s == "joint") return Objective::kJoint;
  if (s == "factorized") return Objective::kFactorized;
  if (s == "text_first") return Objective::kTextFirst;
  if (s == "dpo") return Objective::kDpo;
  throw InvalidArgument("unknown objective '" + s + "'");
}

std::string to_string(Objective o) {
  switch (o) {
    case Objective::kPretrain: return "pretrain";
    case Objective::kJoint: return "joint";
    case Objective::kFactorized: return "factorized";
    case Objective::kTextFirst: return "text_first";
    case Objective::kDpo: return "dpo";
  }
  return "?";
}

DecodeStrategy parse_decode_strategy(const std::string& s) {
  if (s == "action_first") return DecodeStrategy::kActionFirst;
  if (s == "text_first") return DecodeStrategy::kTextFirst;
  throw InvalidArgument("unknown decode strategy '" + s + "'");
}

std::string to_string(DecodeStrategy s) {
  return s == DecodeStrategy::kActionFirst ? "action_first" : "text_first";
}

void TrainConfig::validate() const {
  std::vector<std::string> errors;
  if (!(learning_rate >= 0) || !std::isfinite(learning_rate)) {
    errors.push_back("learning_rate must be a finite non-negative number");
  }
  if (epochs < 0) errors.push_back("epochs must be >= 0");
  if (!(beta > 0)) errors.push_back("beta must be > 0");
  if (batch_size < 1) errors.push_back("batch_size must be >= 1");
  if (!errors.empty()) {
    std::string msg = "invalid train config:";
    for (const auto& e : errors) msg += " " + e + ";";
    throw InvalidArgument(msg);
  }
}

namespace {

template <typename LossFn>
TrainReport run_sgd(ReferenceModel& model, std::size_t n, const TrainConfig& cfg,
                    const char* stage, LossFn&& loss_fn) {
  cfg.validate();
  if (n == 0) throw InvalidArgument(std::string(stage) + ": no training data");
  TrainReport report;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(cfg.seed);
  SparseGrad grad;
  const double step = cfg.learning_rate / cfg.batch_size;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0;
    std::size_t in_batch = 0;
    for (std::size_t k = 0; k < n; ++k) {
      const double l = loss_fn(order[k], &grad);
      if (!std::isfinite(l)) {
        throw DivergenceError(fmt::format("{}: loss became {} in epoch {}", stage, l, epoch));
      }
      total += l;
      if (++in_batch == static_cast<std::size_t>(cfg.batch_size) || k + 1 == n) {
        model.apply(grad, step);
        grad.clear();
        in_batch = 0;
      }
    }
    if (!model.all_finite()) {
      throw DivergenceError(fmt::format("{}: parameters diverged in epoch {}", stage, epoch));
    }
    report.epoch_loss.push_back(total / static_cast<double>(n));
  }
  return report;
}

}  // namespace

TrainReport train_pretrain(ReferenceModel& model, const std::vector<EncodedWindow>& data,
                           const TrainConfig& cfg) {
  cfg.validate();
  if (data.empty()) throw InvalidArgument("pretrain: no training data");
  // Windows are visited in shuffled order; inside a window every operation
  // (and every filler token) takes its own step.
  TrainReport report;
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(cfg.seed);
  SparseGrad grad;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0;
    for (std::size_t i : order) {
      const EncodedWindow& w = data[i];
      if (w.ops.empty() && w.filler.empty()) throw InvalidArgument("empty pre-training window");
      double window_loss = 0;
      int prev = -1;
      for (int word : w.filler) {
        window_loss += model.filler_nll(prev, word, &grad, 1.0);
        model.apply(grad, cfg.learning_rate);
        grad.clear();
        prev = word;
      }
      for (const auto& op : w.ops) {
        window_loss += sequence_nll(model, op.ctx, action_terms(model.space(), op.actions),
                                    &grad, 1.0);
        model.apply(grad, cfg.learning_rate);
        grad.clear();
      }
      if (!std::isfinite(window_loss)) {
        throw DivergenceError(
            fmt::format("pretrain: loss became {} in epoch {}", window_loss, epoch));
      }
      total += window_loss;
    }
    if (!model.all_finite()) {
      throw DivergenceError(fmt::format("pretrain: parameters diverged in epoch {}", epoch));
    }
    report.epoch_loss.push_back(total / static_cast<double>(data.size()));
  }
  return report;
}

TrainReport train_finetune(ReferenceModel& model, const std::vector<EncodedInstance>& data,
                           const TrainConfig& cfg) {
  switch (cfg.objective) {
    case Objective::kJoint:
      return run_sgd(model, data.size(), cfg, "finetune",
                     [&](std::size_t i, SparseGrad* g) { return joint_loss(model, data[i], g); });
    case Objective::kFactorized:
      return run_sgd(model, data.size(), cfg, "finetune", [&](std::size_t i, SparseGrad* g) {
        return factorized_loss(model, data[i], g);
      });
    case Objective::kTextFirst:
      return run_sgd(model, data.size(), cfg, "finetune", [&](std::size_t i, SparseGrad* g) {
        return text_first_loss(model, data[i], g);
      });
    default:
      throw InvalidArgument("train_finetune: objective must be joint, factorized or text_first");
  }
}

double mean_margin(const NextActionModel& model, const std::vector<EncodedPair>& data) {
  if (data.empty()) return 0.0;
  double total = 0;
  for (const auto& p : data) {
    total += action_logprob(model, p.ctx, p.positive) - action_logprob(model, p.ctx, p.negative);
  }
  return total / static_cast<double>(data.size());
}

TrainReport train_dpo(ReferenceModel& model, const NextActionModel& ref,
                      const std::vector<EncodedPair>& data, const TrainConfig& cfg) {
  cfg.validate();
  const double start = mean_margin(model, data);
  TrainConfig one = cfg;
  one.epochs = 1;
  TrainReport report;
  report.epoch_margin.push_back(start);
  std::mt19937_64 seeds(cfg.seed);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    one.seed = seeds();
    TrainReport r = run_sgd(model, data.size(), one, "dpo", [&](std::size_t i, SparseGrad* g) {
      return dpo_loss(model, ref, data[i], cfg.beta, g);
    });
    report.epoch_loss.push_back(r.epoch_loss.front());
    report.epoch_margin.push_back(mean_margin(model, data));
  }
  return report;
}

}  // namespace opsrec
