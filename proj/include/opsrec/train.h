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

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "opsrec/objectives.h"

namespace opsrec {

/// Raised when a loss or parameter becomes NaN or infinite.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

enum class Objective { kPretrain, kJoint, kFactorized, kTextFirst, kDpo };
enum class DecodeStrategy { kActionFirst, kTextFirst };

Objective parse_objective(const std::string& s);
std::string to_string(Objective o);
DecodeStrategy parse_decode_strategy(const std::string& s);
std::string to_string(DecodeStrategy s);

struct TrainConfig {
  double learning_rate = 0.1;
  int epochs = 2;
  std::uint64_t seed = 0;
  double beta = 0.1;
  Objective objective = Objective::kFactorized;
  DecodeStrategy decode = DecodeStrategy::kActionFirst;
  /// Examples per SGD step; the step uses the summed gradient divided by
  /// the batch size.
  int batch_size = 1;

  /// Throws InvalidArgument listing every violated constraint.
  void validate() const;
};

struct TrainReport {
  std::vector<double> epoch_loss;    // mean loss per example, per epoch
  std::vector<double> epoch_margin;  // DPO: mean log P(pos) - log P(neg)
};

/// Shuffled SGD on the pre-training objective.
TrainReport train_pretrain(ReferenceModel& model, const std::vector<EncodedWindow>& data,
                           const TrainConfig& cfg);

/// Shuffled SGD on a fine-tuning objective (joint, factorized or text-first).
TrainReport train_finetune(ReferenceModel& model, const std::vector<EncodedInstance>& data,
                           const TrainConfig& cfg);

/// DPO against a frozen reference. The margin trace is measured on `data`
/// after each epoch (index 0 holds the starting margin).
TrainReport train_dpo(ReferenceModel& model, const NextActionModel& ref,
                      const std::vector<EncodedPair>& data, const TrainConfig& cfg);

/// Mean log P(pos) - log P(neg).
double mean_margin(const NextActionModel& model, const std::vector<EncodedPair>& data);

}  // namespace opsrec
