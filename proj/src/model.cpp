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

#include "opsrec/model.h"

#include <algorithm>
#include <cmath>

#include "opsrec/hash.h"

namespace opsrec {

using nlohmann::json;

namespace {

constexpr const char* kCheckpointFormat = "opsrec-reference-v1";

// Softmax over z, then the floor mixture p = (1 - n eps) q + eps.
void floored_softmax(const Eigen::VectorXd& z, Eigen::VectorXd& q, Eigen::VectorXd& p) {
  const double m = z.maxCoeff();
  q = (z.array() - m).exp();
  q /= q.sum();
  const double n = static_cast<double>(z.size());
  p = (1.0 - n * kProbFloor) * q.array() + kProbFloor;
}

}  // namespace

double Distribution::prob_of(int cls) const {
  auto it = std::lower_bound(classes.begin(), classes.end(), cls);
  if (it == classes.end() || *it != cls) return 0.0;
  return probs[it - classes.begin()];
}

int Distribution::argmax() const {
  if (classes.empty()) throw InvalidArgument("argmax of an empty distribution");
  std::size_t best = 0;
  for (std::size_t k = 1; k < probs.size(); ++k) {
    if (probs[k] > probs[best]) best = k;
  }
  return classes[best];
}

ReferenceModel::ReferenceModel(const DeviceCatalog& catalog, FeatureConfig cfg,
                               int filler_vocab)
    : space_(catalog, cfg) {
  if (filler_vocab < 1) throw InvalidArgument("filler vocabulary must be non-empty");
  for (int h = 0; h < kNumSlots; ++h) {
    const int C = space_.num_classes(static_cast<Slot>(h));
    heads_[h].W = Matrix::Zero(space_.num_features(), C);
    heads_[h].b = Eigen::VectorXd::Zero(C);
    heads_[h].u = Eigen::VectorXd::Zero(FeatureSpace::kClassFeatures);
  }
  filler_.W = Matrix::Zero(filler_vocab + 1, filler_vocab);
  filler_.b = Eigen::VectorXd::Zero(filler_vocab);
  filler_.u = Eigen::VectorXd::Zero(0);
}

namespace {

struct Scored {
  std::vector<int> support;
  std::vector<int> features;
  Eigen::MatrixXd phi;
  Eigen::VectorXd q;
  Eigen::VectorXd p;
};

Scored score(const FeatureSpace& space, const ReferenceModel::Head& head,
             const PromptContext& ctx, const Query& q) {
  Scored s;
  s.support = space.support(ctx, q);
  if (s.support.empty()) {
    throw InvalidArgument(std::string("no legal continuation at ") + slot_name(q.slot));
  }
  s.features = space.features(ctx, q);
  s.phi = space.class_features(ctx, q, s.support);
  const Eigen::Index n = static_cast<Eigen::Index>(s.support.size());
  Eigen::VectorXd z(n);
  const Eigen::VectorXd hist = s.phi * head.u;
  for (Eigen::Index k = 0; k < n; ++k) {
    const int c = s.support[k];
    double v = head.b[c] + hist[k];
    for (int f : s.features) v += head.W(f, c);
    z[k] = v;
  }
  floored_softmax(z, s.q, s.p);
  return s;
}

}  // namespace

Distribution ReferenceModel::distribution(const PromptContext& ctx, const Query& q) const {
  Scored s = score(space_, heads_[static_cast<int>(q.slot)], ctx, q);
  Distribution d;
  d.slot = q.slot;
  d.classes = std::move(s.support);
  d.probs.assign(s.p.data(), s.p.data() + s.p.size());
  return d;
}

double ReferenceModel::nll(const PromptContext& ctx, const Query& q, int target,
                           SparseGrad* grad, double scale) const {
  const int h = static_cast<int>(q.slot);
  Scored s = score(space_, heads_[h], ctx, q);
  auto it = std::lower_bound(s.support.begin(), s.support.end(), target);
  if (it == s.support.end() || *it != target) {
    throw InvalidArgument(std::string("target outside the legal support at ") +
                          slot_name(q.slot));
  }
  const Eigen::Index t = it - s.support.begin();
  const double pt = s.p[t];
  if (grad && scale != 0.0) {
    const double n = static_cast<double>(s.support.size());
    const double r = (1.0 - n * kProbFloor) * s.q[t] / pt;
    Eigen::VectorXd g = r * s.q;
    g[t] -= r;
    g *= scale;
    for (Eigen::Index k = 0; k < g.size(); ++k) {
      const int c = s.support[k];
      grad->add(h, ParamRef::kBiasRow, c, g[k]);
      for (int f : s.features) grad->add(h, f, c, g[k]);
    }
    const Eigen::VectorXd gu = s.phi.transpose() * g;
    for (Eigen::Index k = 0; k < gu.size(); ++k) {
      if (gu[k] != 0.0) grad->add(h, ParamRef::kClassFeatureRow, static_cast<int>(k), gu[k]);
    }
  }
  return -std::log(pt);
}

std::vector<double> ReferenceModel::filler_distribution(int prev) const {
  const int V = filler_vocab();
  if (prev < -1 || prev >= V) throw InvalidArgument("filler word out of range");
  const int row = prev < 0 ? V : prev;
  Eigen::VectorXd z = filler_.b + filler_.W.row(row).transpose();
  Eigen::VectorXd q, p;
  floored_softmax(z, q, p);
  return {p.data(), p.data() + p.size()};
}

double ReferenceModel::filler_nll(int prev, int next, SparseGrad* grad,
                                  double scale) const {
  const int V = filler_vocab();
  if (prev < -1 || prev >= V || next < 0 || next >= V) {
    throw InvalidArgument("filler word out of range");
  }
  const int row = prev < 0 ? V : prev;
  Eigen::VectorXd z = filler_.b + filler_.W.row(row).transpose();
  Eigen::VectorXd q, p;
  floored_softmax(z, q, p);
  if (grad && scale != 0.0) {
    const double r = (1.0 - V * kProbFloor) * q[next] / p[next];
    for (int c = 0; c < V; ++c) {
      const double g = scale * r * (q[c] - (c == next ? 1.0 : 0.0));
      grad->add(ParamRef::kFillerHead, row, c, g);
      grad->add(ParamRef::kFillerHead, ParamRef::kBiasRow, c, g);
    }
  }
  return -std::log(p[next]);
}

void ReferenceModel::apply(const SparseGrad& g, double lr) {
  if (lr == 0.0) return;
  for (const auto& [ref, v] : g.entries) {
    Head& h = head_at(ref.head);
    if (ref.row == ParamRef::kBiasRow) {
      h.b[ref.col] -= lr * v;
    } else if (ref.row == ParamRef::kClassFeatureRow) {
      h.u[ref.col] -= lr * v;
    } else {
      h.W(ref.row, ref.col) -= lr * v;
    }
  }
}

std::size_t ReferenceModel::num_parameters() const {
  std::size_t n = 0;
  for (int h = 0; h <= kNumSlots; ++h) {
    const Head& hd = head_at(h);
    n += hd.W.size() + hd.b.size() + hd.u.size();
  }
  return n;
}

std::size_t ReferenceModel::flat_index(const ParamRef& p) const {
  std::size_t base = 0;
  for (int h = 0; h < p.head; ++h) {
    const Head& hd = head_at(h);
    base += hd.W.size() + hd.b.size() + hd.u.size();
  }
  const Head& hd = head_at(p.head);
  if (p.row == ParamRef::kBiasRow) return base + hd.W.size() + p.col;
  if (p.row == ParamRef::kClassFeatureRow) return base + hd.W.size() + hd.b.size() + p.col;
  return base + static_cast<std::size_t>(p.row) * hd.W.cols() + p.col;
}

double& ReferenceModel::parameter(std::size_t k) {
  for (int h = 0; h <= kNumSlots; ++h) {
    Head& hd = head_at(h);
    const std::size_t w = hd.W.size();
    if (k < w) return hd.W.data()[k];  // row-major, matches flat_index
    k -= w;
    if (k < static_cast<std::size_t>(hd.b.size())) return hd.b[k];
    k -= hd.b.size();
    if (k < static_cast<std::size_t>(hd.u.size())) return hd.u[k];
    k -= hd.u.size();
  }
  throw InvalidArgument("parameter index out of range");
}

bool ReferenceModel::all_finite() const {
  for (int h = 0; h <= kNumSlots; ++h) {
    const Head& hd = head_at(h);
    if (!hd.W.allFinite() || !hd.b.allFinite() || !hd.u.allFinite()) return false;
  }
  return true;
}

json ReferenceModel::to_json(std::uint64_t vocab_fingerprint) const {
  json heads = json::array();
  for (int h = 0; h <= kNumSlots; ++h) {
    const Head& hd = head_at(h);
    json w = json::array();
    for (Eigen::Index r = 0; r < hd.W.rows(); ++r) {
      for (Eigen::Index c = 0; c < hd.W.cols(); ++c) {
        if (hd.W(r, c) != 0.0) w.push_back(json::array({r, c, hd.W(r, c)}));
      }
    }
    heads.push_back({{"name", h == kNumSlots ? "filler" : slot_name(static_cast<Slot>(h))},
                     {"rows", hd.W.rows()},
                     {"cols", hd.W.cols()},
                     {"W", std::move(w)},
                     {"b", std::vector<double>(hd.b.data(), hd.b.data() + hd.b.size())},
                     {"u", std::vector<double>(hd.u.data(), hd.u.data() + hd.u.size())}});
  }
  const auto& c = space_.config();
  return {{"format", kCheckpointFormat},
          {"vocab_fingerprint", hex64(vocab_fingerprint)},
          {"catalog_fingerprint", hex64(space_.catalog().fingerprint())},
          {"feature_config",
           {{"last_k", c.last_k},
            {"max_actions", c.max_actions},
            {"near_minutes", c.near_minutes},
            {"recent_minutes", c.recent_minutes},
            {"lately_minutes", c.lately_minutes}}},
          {"filler_vocab", filler_vocab()},
          {"heads", std::move(heads)}};
}

ReferenceModel ReferenceModel::from_json(const DeviceCatalog& catalog, const json& j) {
  if (j.value("format", "") != kCheckpointFormat) {
    throw InvalidArgument("not a reference-model checkpoint");
  }
  if (j.value("catalog_fingerprint", "") != hex64(catalog.fingerprint())) {
    throw InvalidArgument("checkpoint was trained on a different catalog");
  }
  FeatureConfig cfg;
  const auto& fc = j.at("feature_config");
  cfg.last_k = fc.at("last_k").get<int>();
  cfg.max_actions = fc.at("max_actions").get<int>();
  cfg.near_minutes = fc.at("near_minutes").get<int>();
  cfg.recent_minutes = fc.at("recent_minutes").get<int>();
  cfg.lately_minutes = fc.at("lately_minutes").get<int>();
  ReferenceModel m(catalog, cfg, j.at("filler_vocab").get<int>());
  const auto& heads = j.at("heads");
  if (heads.size() != kNumSlots + 1) throw InvalidArgument("checkpoint head count mismatch");
  for (int h = 0; h <= kNumSlots; ++h) {
    Head& hd = m.head_at(h);
    const auto& src = heads[h];
    if (src.at("rows").get<Eigen::Index>() != hd.W.rows() ||
        src.at("cols").get<Eigen::Index>() != hd.W.cols()) {
      throw InvalidArgument("checkpoint shape mismatch");
    }
    for (const auto& e : src.at("W")) {
      hd.W(e.at(0).get<Eigen::Index>(), e.at(1).get<Eigen::Index>()) = e.at(2).get<double>();
    }
    const auto b = src.at("b").get<std::vector<double>>();
    const auto u = src.at("u").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(b.size()) != hd.b.size() ||
        static_cast<Eigen::Index>(u.size()) != hd.u.size()) {
      throw InvalidArgument("checkpoint shape mismatch");
    }
    hd.b = Eigen::Map<const Eigen::VectorXd>(b.data(), hd.b.size());
    hd.u = Eigen::Map<const Eigen::VectorXd>(u.data(), hd.u.size());
  }
  return m;
}

TokenDistribution next_action_distribution(const NextActionModel& model,
                                           const Prompt& prompt,
                                           const TokenSequence& partial) {
  const FeatureSpace& space = model.space();
  const DeviceCatalog& cat = space.catalog();
  const PromptContext ctx = space.context(prompt, /*restrict_candidates=*/true);

  Query q;
  const std::size_t whole = partial.size() / 4;
  for (std::size_t k = 0; k < whole; ++k) {
    Action a{partial[4 * k], partial[4 * k + 1], partial[4 * k + 2],
             Value(partial[4 * k + 3])};
    auto ref = cat.resolve(a);
    if (!ref) throw InvalidArgument("illegal prefix action " + to_string(a));
    q.done.push_back(*ref);
  }
  const std::size_t rest = partial.size() % 4;
  static constexpr Slot kOrder[] = {Slot::kRoom, Slot::kDevice, Slot::kField, Slot::kValue};
  for (std::size_t k = 0; k < rest; ++k) {
    q.slot = kOrder[k];
    const auto legal = space.support(ctx, q);
    const int cls = space.class_of_symbol(q, partial[4 * whole + k]);
    if (cls < 0 || !std::binary_search(legal.begin(), legal.end(), cls) ||
        (q.slot == Slot::kRoom && cls == space.stop_class())) {
      throw InvalidArgument("illegal prefix token " + partial[4 * whole + k]);
    }
    switch (q.slot) {
      case Slot::kRoom:
        q.partial.room = cls;
        break;
      case Slot::kDevice:
        q.partial.instance = cls;
        q.partial.type = cat.instances()[cls].type;
        break;
      case Slot::kField:
        q.partial.field_class = cls;
        q.partial.field_pos = cat.field_class_owner(cls).second;
        break;
      default:
        break;
    }
  }
  q.slot = kOrder[rest];
  const Distribution d = model.distribution(ctx, q);
  TokenDistribution out;
  for (std::size_t k = 0; k < d.classes.size(); ++k) {
    out.symbols.push_back(space.class_symbol(q.slot, d.classes[k]));
    out.probs.push_back(d.probs[k]);
  }
  return out;
}

}  // namespace opsrec
