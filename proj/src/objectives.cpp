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

#include "opsrec/objectives.h"

#include <algorithm>
#include <cmath>

namespace opsrec {

std::vector<Term> action_terms(const FeatureSpace& space,
                               const std::vector<ActionRef>& actions,
                               const DescCode& cond) {
  if (actions.empty()) throw InvalidArgument("operation without actions");
  const int cap = space.config().max_actions;
  if (static_cast<int>(actions.size()) > cap) {
    throw InvalidArgument("operation exceeds the action cap");
  }
  std::vector<Term> terms;
  terms.reserve(actions.size() * 4 + 1);
  Query q;
  q.desc = cond;
  for (const auto& a : actions) {
    q.partial = ActionRef{};
    q.slot = Slot::kRoom;
    terms.push_back({q, a.room});
    q.partial.room = a.room;
    q.slot = Slot::kDevice;
    terms.push_back({q, a.instance});
    q.partial.instance = a.instance;
    q.partial.type = a.type;
    q.slot = Slot::kField;
    terms.push_back({q, a.field_class});
    q.partial.field_pos = a.field_pos;
    q.partial.field_class = a.field_class;
    q.slot = Slot::kValue;
    terms.push_back({q, a.value_class});
    q.done.push_back(a);
  }
  if (static_cast<int>(actions.size()) < cap) {
    q.partial = ActionRef{};
    q.slot = Slot::kRoom;
    terms.push_back({q, space.stop_class()});
  }
  return terms;
}

std::vector<Term> desc_terms(const DescCode& desc, const std::vector<ActionRef>& given) {
  std::vector<Term> terms(3);
  for (auto& t : terms) t.query.given = given;
  terms[0].query.slot = Slot::kDescTemplate;
  terms[0].target = desc.tpl;
  terms[1].query.slot = Slot::kDescRoom;
  terms[1].query.desc = {desc.tpl, -1, -1};
  terms[1].target = desc.room;
  terms[2].query.slot = Slot::kDescDevice;
  terms[2].query.desc = {desc.tpl, desc.room, -1};
  terms[2].target = desc.type;
  return terms;
}

double sequence_nll(const NextActionModel& model, const PromptContext& ctx,
                    const std::vector<Term>& terms) {
  double total = 0;
  for (const auto& t : terms) {
    const Distribution d = model.distribution(ctx, t.query);
    const double p = d.prob_of(t.target);
    if (p <= 0.0) {
      throw InvalidArgument(std::string("target outside the legal support at ") +
                            slot_name(t.query.slot));
    }
    total -= std::log(p);
  }
  return total;
}

double sequence_nll(const ReferenceModel& model, const PromptContext& ctx,
                    const std::vector<Term>& terms, SparseGrad* grad, double scale) {
  double total = 0;
  for (const auto& t : terms) total += model.nll(ctx, t.query, t.target, grad, scale);
  return total;
}

EncodedInstance encode_instance(const FeatureSpace& space, const FinetuneInstance& inst) {
  EncodedInstance x;
  x.ctx = space.context(inst.prompt, /*restrict_candidates=*/true);
  x.actions = encode_actions(inst.target_actions, space.catalog());
  x.desc = encode_description(inst.target_description, space.catalog());
  return x;
}

EncodedWindow encode_window(const FeatureSpace& space, const PretrainWindow& w,
                            int history_limit) {
  EncodedWindow out;
  out.kind = w.kind;
  if (w.kind == WindowKind::kFiller) {
    out.filler = parse_filler_window(w.tokens);
    return out;
  }
  for (const auto& seg : parse_operation_window(w.tokens, space.catalog())) {
    for (std::size_t i = 0; i < seg.size(); ++i) {
      Prompt p;
      const std::size_t lo =
          i > static_cast<std::size_t>(history_limit) ? i - history_limit : 0;
      p.history.assign(seg.begin() + static_cast<std::ptrdiff_t>(lo),
                       seg.begin() + static_cast<std::ptrdiff_t>(i));
      p.time = seg[i].timestamp;
      p.env = seg[i].env;
      EncodedOp op;
      op.ctx = space.context(p, /*restrict_candidates=*/false);
      op.actions = encode_actions(seg[i].actions, space.catalog());
      out.ops.push_back(std::move(op));
    }
  }
  return out;
}

namespace {

void require_nonempty(const EncodedWindow& w) {
  if (w.ops.empty() && w.filler.empty()) throw InvalidArgument("empty pre-training window");
}

}  // namespace

double pretrain_loss(const NextActionModel& model, const EncodedWindow& w) {
  require_nonempty(w);
  double total = 0;
  int prev = -1;
  for (int word : w.filler) {
    const auto p = model.filler_distribution(prev);
    total -= std::log(p.at(word));
    prev = word;
  }
  for (const auto& op : w.ops) {
    total += sequence_nll(model, op.ctx, action_terms(model.space(), op.actions));
  }
  return total;
}

double pretrain_loss(const ReferenceModel& model, const EncodedWindow& w,
                     SparseGrad* grad) {
  require_nonempty(w);
  double total = 0;
  int prev = -1;
  for (int word : w.filler) {
    total += model.filler_nll(prev, word, grad, 1.0);
    prev = word;
  }
  for (const auto& op : w.ops) {
    total += sequence_nll(model, op.ctx, action_terms(model.space(), op.actions), grad, 1.0);
  }
  return total;
}

double joint_loss(const NextActionModel& model, const EncodedInstance& x) {
  return sequence_nll(model, x.ctx, action_terms(model.space(), x.actions)) +
         sequence_nll(model, x.ctx, desc_terms(x.desc));
}

double joint_loss(const ReferenceModel& model, const EncodedInstance& x, SparseGrad* grad) {
  return sequence_nll(model, x.ctx, action_terms(model.space(), x.actions), grad, 1.0) +
         sequence_nll(model, x.ctx, desc_terms(x.desc), grad, 1.0);
}

double factorized_loss(const NextActionModel& model, const EncodedInstance& x) {
  return sequence_nll(model, x.ctx, action_terms(model.space(), x.actions)) +
         sequence_nll(model, x.ctx, desc_terms(x.desc, x.actions));
}

double factorized_loss(const ReferenceModel& model, const EncodedInstance& x,
                       SparseGrad* grad) {
  return sequence_nll(model, x.ctx, action_terms(model.space(), x.actions), grad, 1.0) +
         sequence_nll(model, x.ctx, desc_terms(x.desc, x.actions), grad, 1.0);
}

double text_first_loss(const NextActionModel& model, const EncodedInstance& x) {
  return sequence_nll(model, x.ctx, desc_terms(x.desc)) +
         sequence_nll(model, x.ctx, action_terms(model.space(), x.actions, x.desc));
}

double text_first_loss(const ReferenceModel& model, const EncodedInstance& x,
                       SparseGrad* grad) {
  return sequence_nll(model, x.ctx, desc_terms(x.desc), grad, 1.0) +
         sequence_nll(model, x.ctx, action_terms(model.space(), x.actions, x.desc), grad, 1.0);
}

double log_sigmoid(double x) {
  return x >= 0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
}

double dpo_loss_from_logratios(double pos_logratio, double neg_logratio, double beta) {
  if (!(beta > 0)) throw InvalidArgument("beta must be positive");
  return -log_sigmoid(beta * (pos_logratio - neg_logratio));
}

double action_logprob(const NextActionModel& model, const PromptContext& ctx,
                      const std::vector<ActionRef>& actions) {
  return -sequence_nll(model, ctx, action_terms(model.space(), actions));
}

double dpo_loss(const NextActionModel& model, const NextActionModel& ref,
                const EncodedPair& pair, double beta) {
  const double pos = action_logprob(model, pair.ctx, pair.positive) -
                     action_logprob(ref, pair.ctx, pair.positive);
  const double neg = action_logprob(model, pair.ctx, pair.negative) -
                     action_logprob(ref, pair.ctx, pair.negative);
  return dpo_loss_from_logratios(pos, neg, beta);
}

double dpo_loss(const ReferenceModel& model, const NextActionModel& ref,
                const EncodedPair& pair, double beta, SparseGrad* grad) {
  const auto pos_terms = action_terms(model.space(), pair.positive);
  const auto neg_terms = action_terms(model.space(), pair.negative);
  const double pos = -sequence_nll(model, pair.ctx, pos_terms, nullptr, 0.0) +
                     sequence_nll(ref, pair.ctx, pos_terms);
  const double neg = -sequence_nll(model, pair.ctx, neg_terms, nullptr, 0.0) +
                     sequence_nll(ref, pair.ctx, neg_terms);
  const double loss = dpo_loss_from_logratios(pos, neg, beta);
  if (grad) {
    // dL/dx = -(1 - sigma(x)) with x = beta (pos - neg); pos and neg are
    // log-probabilities, i.e. minus the NLLs the term gradients describe.
    const double x = beta * (pos - neg);
    const double coef = beta * std::exp(log_sigmoid(-x));
    sequence_nll(model, pair.ctx, pos_terms, grad, coef);
    sequence_nll(model, pair.ctx, neg_terms, grad, -coef);
  }
  return loss;
}

}  // namespace opsrec
