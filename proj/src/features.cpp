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

#include "opsrec/features.h"

#include <algorithm>
#include <cmath>

#include "opsrec/timeutil.h"

namespace opsrec {

namespace {

// Stat kinds.
constexpr int kRoomKind = 0;
constexpr int kInstanceKind = 1;
constexpr int kFieldKind = 2;
constexpr int kActionKind = 3;
constexpr int kTemplateKind = 4;
constexpr int kTypeKind = 5;
constexpr int kDescRoomKind = 6;

constexpr int kElapsedBuckets = 6;  // last bucket: no history

int elapsed_bucket(Timestamp minutes) {
  if (minutes <= 2) return 0;
  if (minutes <= 10) return 1;
  if (minutes <= 30) return 2;
  if (minutes <= 120) return 3;
  return 4;
}

}  // namespace

const char* slot_name(Slot s) {
  switch (s) {
    case Slot::kRoom: return "room";
    case Slot::kDevice: return "device";
    case Slot::kField: return "field";
    case Slot::kValue: return "value";
    case Slot::kDescTemplate: return "desc_template";
    case Slot::kDescRoom: return "desc_room";
    case Slot::kDescDevice: return "desc_device";
  }
  return "?";
}

DescCode encode_description(const Description& d, const DeviceCatalog& catalog) {
  DescCode c;
  auto tpl = catalog.template_index(d.template_id);
  auto room = catalog.room_index(d.room);
  auto type = catalog.type_index(d.device);
  if (!tpl || !room || !type) {
    throw InvalidArgument("description outside the catalog: " + d.template_id +
                          " " + d.room + " " + d.device);
  }
  c.tpl = *tpl;
  c.room = *room;
  c.type = *type;
  return c;
}

Description decode_description(const DescCode& d, const DeviceCatalog& catalog) {
  return {catalog.templates().at(d.tpl), catalog.rooms().at(d.room),
          catalog.type(d.type).name};
}

std::vector<ActionRef> encode_actions(const std::vector<Action>& actions,
                                      const DeviceCatalog& catalog) {
  std::vector<ActionRef> out;
  out.reserve(actions.size());
  for (const auto& a : actions) {
    auto r = catalog.resolve(a);
    if (!r) {
      throw InvalidArgument("invalid action " + to_string(a) + ": " +
                            validate_action(a, catalog).message);
    }
    out.push_back(*r);
  }
  return out;
}

FeatureSpace::FeatureSpace(const DeviceCatalog& catalog, FeatureConfig cfg)
    : catalog_(&catalog), cfg_(cfg) {
  if (cfg_.last_k < 0 || cfg_.max_actions < 1) {
    throw InvalidArgument("feature config: last_k >= 0 and max_actions >= 1");
  }
  const int R = static_cast<int>(catalog.rooms().size());
  const int Ty = static_cast<int>(catalog.device_types().size());
  const int I = static_cast<int>(catalog.instances().size());
  const int A = catalog.num_actions();
  const int T = static_cast<int>(catalog.templates().size());
  const int Ind = static_cast<int>(catalog.indicators().size());
  for (const auto& t : catalog.device_types()) {
    max_fields_ = std::max(max_fields_, static_cast<int>(t.fields.size()));
  }
  for (const auto& ind : catalog.indicators()) {
    max_buckets_ = std::max(max_buckets_, ind.feature_bucket_count());
  }
  room_instances_.assign(R, {});
  for (int i = 0; i < I; ++i) {
    room_instances_[catalog.instances()[i].room].push_back(i);
  }

  int off = 0;
  auto take = [&](int& slot, int n) {
    slot = off;
    off += n;
  };
  take(layout_.hour, 24);
  take(layout_.weekday, 7);
  take(layout_.hour_weekend, 48);
  take(layout_.env, R * Ind * max_buckets_);
  take(layout_.last, cfg_.last_k * A);
  take(layout_.elapsed, kElapsedBuckets);
  take(layout_.elapsed_last, (kElapsedBuckets - 1) * A);
  take(layout_.position, cfg_.max_actions + 1);
  take(layout_.prev, A);
  take(layout_.prefix_room, R);
  take(layout_.prefix_instance, I);
  take(layout_.prefix_field, I * max_fields_);
  take(layout_.desc_tpl, T);
  take(layout_.desc_room, R);
  take(layout_.desc_type, Ty);
  take(layout_.act_first, A);
  take(layout_.act_tpl, T);
  take(layout_.act_room, R);
  take(layout_.act_type, Ty);
  layout_.end = off;
  num_features_ = off;

  classes_[static_cast<int>(Slot::kRoom)] = R + 1;
  classes_[static_cast<int>(Slot::kDevice)] = I;
  classes_[static_cast<int>(Slot::kField)] = catalog.num_field_classes();
  classes_[static_cast<int>(Slot::kValue)] = catalog.num_value_classes();
  classes_[static_cast<int>(Slot::kDescTemplate)] = T;
  classes_[static_cast<int>(Slot::kDescRoom)] = R;
  classes_[static_cast<int>(Slot::kDescDevice)] = Ty;

  opposite_.assign(A, -1);
  action_template_.assign(A, -1);
  for (int a = 0; a < A; ++a) {
    const Action act = catalog.action_at(a);
    action_template_[a] = *catalog.template_index(catalog.template_for(act));
    if (auto opp = opposite_action(act, catalog)) {
      opposite_[a] = catalog.resolve(*opp)->action_id;
    }
  }
}

PromptContext FeatureSpace::context(const Prompt& p, bool restrict_candidates) const {
  const auto& cat = *catalog_;
  const int A = cat.num_actions();
  const int Ind = static_cast<int>(cat.indicators().size());
  PromptContext ctx;

  const int hour = hour_of_day(p.time);
  const int wd = weekday_of(p.time);
  const bool weekend = wd == 0 || wd == 6;
  ctx.base.push_back(layout_.hour + hour);
  ctx.base.push_back(layout_.weekday + wd);
  ctx.base.push_back(layout_.hour_weekend + (weekend ? 24 : 0) + hour);
  for (const auto& e : p.env) {
    auto room = cat.room_index(e.room);
    auto ind = cat.indicator_index(e.indicator);
    if (!room || !ind) {
      throw InvalidArgument("env reading outside the catalog: " + e.room + " " +
                            e.indicator);
    }
    const int b = cat.indicators()[*ind].feature_bucket(e.value);
    if (b < 0) throw InvalidArgument("env value outside domain: " + e.value.symbol());
    ctx.base.push_back(layout_.env + (*room * Ind + *ind) * max_buckets_ + b);
  }

  // Flattened history actions, most recent last.
  std::vector<int> recent_ids;
  const int now_minute = minute_of_day(p.time);
  for (const auto& op : p.history) {
    const bool near =
        circular_minute_distance(minute_of_day(op.timestamp), now_minute) <=
        cfg_.near_minutes;
    const bool recent = p.time - op.timestamp <= cfg_.recent_minutes;
    const bool lately = p.time - op.timestamp <= cfg_.lately_minutes;
    auto bump = [&](int kind, std::int64_t key) {
      auto& s = ctx.stats[stat_key(kind, key)];
      s.count += 1;
      if (near) s.near += 1;
      if (near && !lately) s.near_prior += 1;
      if (recent) s.recent = true;
      if (lately) s.lately = true;
    };
    for (const auto& a : op.actions) {
      auto r = cat.resolve(a);
      if (!r) throw InvalidArgument("invalid history action " + to_string(a));
      bump(kRoomKind, r->room);
      bump(kInstanceKind, r->instance);
      bump(kFieldKind, field_key(r->instance, r->field_pos));
      bump(kActionKind, r->action_id);
      ctx.state[field_key(r->instance, r->field_pos)] = r->value_pos;
      recent_ids.push_back(r->action_id);
    }
    const Description d = op.description ? *op.description
                                          : describe(op.actions.front(), cat);
    if (auto tpl = cat.template_index(d.template_id)) bump(kTemplateKind, *tpl);
    if (auto room = cat.room_index(d.room)) bump(kDescRoomKind, *room);
    if (auto type = cat.type_index(d.device)) bump(kTypeKind, *type);
  }
  for (const auto& [key, st] : ctx.stats) {
    if ((key >> 40) != kActionKind || st.near_prior == 0) continue;
    const ActionRef& a = cat.action_ref(static_cast<int>(key & ((std::int64_t{1} << 40) - 1)));
    const std::int64_t fk = field_key(a.instance, a.field_pos);
    auto cur = ctx.state.find(fk);
    if (cur != ctx.state.end() && cur->second == a.value_pos) continue;
    ctx.pending[stat_key(kRoomKind, a.room)] += st.near_prior;
    ctx.pending[stat_key(kInstanceKind, a.instance)] += st.near_prior;
    ctx.pending[stat_key(kFieldKind, fk)] += st.near_prior;
  }
  for (int k = 0; k < cfg_.last_k && k < static_cast<int>(recent_ids.size()); ++k) {
    ctx.base.push_back(layout_.last + k * A + recent_ids[recent_ids.size() - 1 - k]);
  }
  if (p.history.empty()) {
    ctx.base.push_back(layout_.elapsed + kElapsedBuckets - 1);
  } else {
    const int b = elapsed_bucket(p.time - p.history.back().timestamp);
    ctx.base.push_back(layout_.elapsed + b);
    ctx.base.push_back(layout_.elapsed_last + b * A + recent_ids.back());
  }

  const int I = static_cast<int>(cat.instances().size());
  if (restrict_candidates) {
    ctx.allowed.assign(I, 0);
    for (const auto& c : p.candidates) {
      auto i = cat.instance_index(c.room, c.device);
      if (!i) throw InvalidArgument("candidate outside the catalog: " + c.room + "/" + c.device);
      ctx.allowed[*i] = 1;
    }
  } else {
    ctx.allowed.assign(I, 1);
  }
  return ctx;
}

bool FeatureSpace::instance_has_free_field(int instance,
                                           const std::vector<ActionRef>& done) const {
  const auto& type = catalog_->type(catalog_->instances()[instance].type);
  int used = 0;
  for (const auto& d : done) {
    if (d.instance == instance) ++used;
  }
  return used < static_cast<int>(type.fields.size());
}

std::vector<int> FeatureSpace::features(const PromptContext& ctx, const Query& q) const {
  std::vector<int> f = ctx.base;
  if (is_action_slot(q.slot)) {
    const int j = std::min(static_cast<int>(q.done.size()), cfg_.max_actions);
    f.push_back(layout_.position + j);
    if (!q.done.empty()) f.push_back(layout_.prev + q.done.back().action_id);
    if (q.desc.tpl >= 0) {
      f.push_back(layout_.desc_tpl + q.desc.tpl);
      f.push_back(layout_.desc_room + q.desc.room);
      f.push_back(layout_.desc_type + q.desc.type);
    }
    switch (q.slot) {
      case Slot::kDevice:
        f.push_back(layout_.prefix_room + q.partial.room);
        break;
      case Slot::kField:
        f.push_back(layout_.prefix_instance + q.partial.instance);
        break;
      case Slot::kValue:
        f.push_back(layout_.prefix_field +
                    static_cast<int>(field_key(q.partial.instance, q.partial.field_pos)));
        break;
      default:
        break;
    }
    return f;
  }
  if (!q.given.empty()) {
    const auto& a = q.given.front();
    f.push_back(layout_.act_first + a.action_id);
    f.push_back(layout_.act_tpl + action_template_[a.action_id]);
    f.push_back(layout_.act_room + a.room);
    f.push_back(layout_.act_type + a.type);
  }
  if (q.slot == Slot::kDescRoom || q.slot == Slot::kDescDevice) {
    f.push_back(layout_.desc_tpl + q.desc.tpl);
  }
  if (q.slot == Slot::kDescDevice) {
    f.push_back(layout_.desc_room + q.desc.room);
  }
  return f;
}

std::vector<int> FeatureSpace::support(const PromptContext& ctx, const Query& q) const {
  const auto& cat = *catalog_;
  std::vector<int> s;
  auto usable = [&](int inst) {
    return ctx.allowed[inst] && instance_has_free_field(inst, q.done);
  };
  switch (q.slot) {
    case Slot::kRoom: {
      if (static_cast<int>(q.done.size()) >= cfg_.max_actions) {
        return {stop_class()};
      }
      for (int r = 0; r < static_cast<int>(room_instances_.size()); ++r) {
        if (std::any_of(room_instances_[r].begin(), room_instances_[r].end(), usable)) {
          s.push_back(r);
        }
      }
      if (!q.done.empty()) s.push_back(stop_class());
      return s;
    }
    case Slot::kDevice:
      for (int i : room_instances_.at(q.partial.room)) {
        if (usable(i)) s.push_back(i);
      }
      return s;
    case Slot::kField: {
      const auto& type = cat.type(cat.instances().at(q.partial.instance).type);
      for (int fp = 0; fp < static_cast<int>(type.fields.size()); ++fp) {
        const bool used = std::any_of(q.done.begin(), q.done.end(), [&](const ActionRef& d) {
          return d.instance == q.partial.instance && d.field_pos == fp;
        });
        if (!used) s.push_back(type.fields[fp].field_class);
      }
      std::sort(s.begin(), s.end());
      return s;
    }
    case Slot::kValue: {
      const auto& inst = cat.instances().at(q.partial.instance);
      const auto& f = cat.field(inst.type, q.partial.field_pos);
      for (int v = 0; v < static_cast<int>(f.domain.size()); ++v) {
        s.push_back(f.first_value_class + v);
      }
      return s;
    }
    case Slot::kDescTemplate:
      for (int t = 0; t < num_classes(Slot::kDescTemplate); ++t) s.push_back(t);
      return s;
    case Slot::kDescRoom:
      for (int r = 0; r < static_cast<int>(room_instances_.size()); ++r) {
        if (std::any_of(room_instances_[r].begin(), room_instances_[r].end(),
                        [&](int i) { return ctx.allowed[i] != 0; })) {
          s.push_back(r);
        }
      }
      return s;
    case Slot::kDescDevice:
      for (int i : room_instances_.at(q.desc.room)) {
        if (ctx.allowed[i]) s.push_back(cat.instances()[i].type);
      }
      std::sort(s.begin(), s.end());
      return s;
  }
  return s;
}

Eigen::MatrixXd FeatureSpace::class_features(const PromptContext& ctx, const Query& q,
                                             const std::vector<int>& support) const {
  const auto& cat = *catalog_;
  Eigen::MatrixXd phi = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(support.size()),
                                              kClassFeatures);
  auto lookup = [&](int kind, std::int64_t key) -> const ClassStat* {
    auto it = ctx.stats.find(stat_key(kind, key));
    return it == ctx.stats.end() ? nullptr : &it->second;
  };
  auto pending = [&](int kind, std::int64_t key) {
    auto it = ctx.pending.find(stat_key(kind, key));
    return it == ctx.pending.end() ? 0.0 : std::log1p(it->second);
  };
  for (std::size_t k = 0; k < support.size(); ++k) {
    const int c = support[k];
    const ClassStat* s = nullptr;
    switch (q.slot) {
      case Slot::kRoom:
        if (c != stop_class()) {
          s = lookup(kRoomKind, c);
          phi(k, 6) = pending(kRoomKind, c);
        }
        break;
      case Slot::kDevice:
        s = lookup(kInstanceKind, c);
        phi(k, 6) = pending(kInstanceKind, c);
        break;
      case Slot::kField: {
        const int fp = cat.field_class_owner(c).second;
        s = lookup(kFieldKind, field_key(q.partial.instance, fp));
        phi(k, 6) = pending(kFieldKind, field_key(q.partial.instance, fp));
        break;
      }
      case Slot::kValue: {
        const auto [type, fp, vp] = cat.value_class_owner(c);
        const int aid = cat.action_id(q.partial.instance, fp, vp);
        s = lookup(kActionKind, aid);
        auto st = ctx.state.find(field_key(q.partial.instance, fp));
        if (st != ctx.state.end() && st->second == vp) phi(k, 3) = 1.0;
        if (opposite_[aid] >= 0) {
          const ClassStat* o = lookup(kActionKind, opposite_[aid]);
          if (o && o->recent) phi(k, 4) = 1.0;
        }
        if (s && phi(k, 3) == 0.0) phi(k, 6) = std::log1p(s->near_prior);
        break;
      }
      case Slot::kDescTemplate:
        s = lookup(kTemplateKind, c);
        break;
      case Slot::kDescRoom:
        s = lookup(kDescRoomKind, c);
        break;
      case Slot::kDescDevice:
        s = lookup(kTypeKind, c);
        break;
    }
    if (s) {
      phi(k, 0) = std::log1p(s->count);
      phi(k, 1) = std::log1p(s->near);
      phi(k, 2) = s->recent ? 1.0 : 0.0;
      phi(k, 5) = s->lately ? 1.0 : 0.0;
    }
  }
  return phi;
}

std::string FeatureSpace::class_symbol(Slot slot, int cls) const {
  const auto& cat = *catalog_;
  switch (slot) {
    case Slot::kRoom:
      return cls == stop_class() ? std::string(tok::kStop) : cat.rooms().at(cls);
    case Slot::kDevice:
      return cat.type(cat.instances().at(cls).type).name;
    case Slot::kField: {
      const auto [type, fp] = cat.field_class_owner(cls);
      return cat.field(type, fp).name;
    }
    case Slot::kValue: {
      const auto [type, fp, vp] = cat.value_class_owner(cls);
      return cat.field(type, fp).domain.symbols.at(vp);
    }
    case Slot::kDescTemplate:
      return cat.templates().at(cls);
    case Slot::kDescRoom:
      return cat.rooms().at(cls);
    case Slot::kDescDevice:
      return cat.type(cls).name;
  }
  return {};
}

int FeatureSpace::class_of_symbol(const Query& q, const std::string& symbol) const {
  const auto& cat = *catalog_;
  switch (q.slot) {
    case Slot::kRoom:
      if (symbol == tok::kStop) return stop_class();
      return cat.room_index(symbol).value_or(-1);
    case Slot::kDevice: {
      auto t = cat.type_index(symbol);
      if (!t) return -1;
      return cat.instance_index(q.partial.room, *t).value_or(-1);
    }
    case Slot::kField: {
      const auto& inst = cat.instances().at(q.partial.instance);
      const int fp = cat.type(inst.type).field_position(symbol);
      return fp < 0 ? -1 : cat.field(inst.type, fp).field_class;
    }
    case Slot::kValue: {
      const auto& inst = cat.instances().at(q.partial.instance);
      const auto& f = cat.field(inst.type, q.partial.field_pos);
      const auto& syms = f.domain.symbols;
      auto it = std::find(syms.begin(), syms.end(), symbol);
      if (it == syms.end()) return -1;
      return f.first_value_class + static_cast<int>(it - syms.begin());
    }
    case Slot::kDescTemplate:
      return cat.template_index(symbol).value_or(-1);
    case Slot::kDescRoom:
      return cat.room_index(symbol).value_or(-1);
    case Slot::kDescDevice:
      return cat.type_index(symbol).value_or(-1);
  }
  return -1;
}

int FeatureSpace::target_class(const Query& q, const ActionRef& a) const {
  switch (q.slot) {
    case Slot::kRoom: return a.room;
    case Slot::kDevice: return a.instance;
    case Slot::kField: return a.field_class;
    case Slot::kValue: return a.value_class;
    default: break;
  }
  throw InvalidArgument("target_class: not an action slot");
}

int FeatureSpace::target_class(Slot s, const DescCode& d) const {
  switch (s) {
    case Slot::kDescTemplate: return d.tpl;
    case Slot::kDescRoom: return d.room;
    case Slot::kDescDevice: return d.type;
    default: break;
  }
  throw InvalidArgument("target_class: not a description slot");
}

}  // namespace opsrec
