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

// Training objectives. Every loss has a model-agnostic form (probabilities
// only) and a ReferenceModel form that also accumulates analytic gradients.

#include <vector>

#include "opsrec/corpus.h"
#include "opsrec/model.h"

namespace opsrec {

/// One factor of a sequence probability: a query and the class it must emit.
struct Term {
  Query query;
  int target = -1;
};

/// Factors of P(actions | P [, desc]): room, device, field, value per
/// action, then the stop class unless the action cap is reached.
std::vector<Term> action_terms(const FeatureSpace& space,
                               const std::vector<ActionRef>& actions,
                               const DescCode& cond = {});
/// Factors of P(desc | P [, actions]): template, room, device type.
std::vector<Term> desc_terms(const DescCode& desc,
                             const std::vector<ActionRef>& given = {});

double sequence_nll(const NextActionModel& model, const PromptContext& ctx,
                    const std::vector<Term>& terms);
/// Adds scale * gradient of the NLL to `grad` (when set).
double sequence_nll(const ReferenceModel& model, const PromptContext& ctx,
                    const std::vector<Term>& terms, SparseGrad* grad, double scale);

/// A fine-tuning instance resolved against the feature space.
struct EncodedInstance {
  PromptContext ctx;
  std::vector<ActionRef> actions;
  DescCode desc;
};
EncodedInstance encode_instance(const FeatureSpace& space, const FinetuneInstance& inst);

/// A pre-training window resolved against the feature space: each operation
/// is scored given the operations before it in its user segment.
struct EncodedOp {
  PromptContext ctx;
  std::vector<ActionRef> actions;
};
struct EncodedWindow {
  WindowKind kind = WindowKind::kOperations;
  std::vector<EncodedOp> ops;
  std::vector<int> filler;
};
EncodedWindow encode_window(const FeatureSpace& space, const PretrainWindow& w,
                            int history_limit);

/// Sum over the window's operations of -log P(actions | prefix, time, env),
/// or the filler NLL for filler windows. Throws on an empty window.
double pretrain_loss(const NextActionModel& model, const EncodedWindow& w);
double pretrain_loss(const ReferenceModel& model, const EncodedWindow& w,
                     SparseGrad* grad);

/// -log P(act | P) - log P(desc | P): the description is scored from the
/// prompt alone.
double joint_loss(const NextActionModel& model, const EncodedInstance& x);
double joint_loss(const ReferenceModel& model, const EncodedInstance& x,
                  SparseGrad* grad);

/// -log P(act | P) - log P(desc | P, act) with the ground-truth action fed
/// to the description heads.
double factorized_loss(const NextActionModel& model, const EncodedInstance& x);
double factorized_loss(const ReferenceModel& model, const EncodedInstance& x,
                       SparseGrad* grad);

/// Text-first ordering: -log P(desc | P) - log P(act | P, desc).
double text_first_loss(const NextActionModel& model, const EncodedInstance& x);
double text_first_loss(const ReferenceModel& model, const EncodedInstance& x,
                       SparseGrad* grad);

/// A preference pair resolved against the feature space.
struct EncodedPair {
  PromptContext ctx;
  std::vector<ActionRef> positive;
  std::vector<ActionRef> negative;
};

/// log sigma(x) and -log sigma(x), stable for large |x|.
double log_sigmoid(double x);

/// -log sigma(beta * [(log P_theta(pos) - log P_ref(pos)) -
///                    (log P_theta(neg) - log P_ref(neg))]).
double dpo_loss_from_logratios(double pos_logratio, double neg_logratio, double beta);
double dpo_loss(const NextActionModel& model, const NextActionModel& ref,
                const EncodedPair& pair, double beta);
/// Gradient flows into `model` only; `ref` is frozen.
double dpo_loss(const ReferenceModel& model, const NextActionModel& ref,
                const EncodedPair& pair, double beta, SparseGrad* grad);

/// log P(actions | P) under a model.
double action_logprob(const NextActionModel& model, const PromptContext& ctx,
                      const std::vector<ActionRef>& actions);

}  // namespace opsrec
