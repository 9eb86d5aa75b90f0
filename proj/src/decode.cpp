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

#include "opsrec/decode.h"

#include "opsrec/serialization.h"

namespace opsrec {

using nlohmann::json;

std::vector<Action> Recommendation::plain_actions() const {
  std::vector<Action> out;
  out.reserve(actions.size());
  for (const auto& a : actions) out.push_back(a.action);
  return out;
}

double Recommendation::first_token() const {
  if (actions.empty()) throw InvalidArgument("recommendation without actions");
  return actions.front().device.prob;
}

namespace {

json score_to_json(const AttributeScore& s) {
  return {{"p", s.prob}, {"support", s.support}, {"numeric", s.numeric}};
}

AttributeScore score_from_json(const json& j) {
  return {j.at("p").get<double>(), j.at("support").get<int>(), j.at("numeric").get<bool>()};
}

}  // namespace

json Recommendation::to_json() const {
  json acts = json::array();
  for (const auto& a : actions) {
    acts.push_back({{"action", opsrec::to_json(a.action)},
                    {"room", score_to_json(a.room)},
                    {"device", score_to_json(a.device)},
                    {"field", score_to_json(a.field)},
                    {"value", score_to_json(a.value)}});
  }
  return {{"user_id", user_id},
          {"time", time},
          {"actions", acts},
          {"description",
           json::array({description.template_id, description.room, description.device})}};
}

Recommendation Recommendation::from_json(const json& j) {
  Recommendation r;
  r.user_id = j.at("user_id").get<std::string>();
  r.time = j.at("time").get<Timestamp>();
  for (const auto& a : j.at("actions")) {
    ScoredAction s;
    s.action = action_from_json(a.at("action"));
    s.room = score_from_json(a.at("room"));
    s.device = score_from_json(a.at("device"));
    s.field = score_from_json(a.at("field"));
    s.value = score_from_json(a.at("value"));
    r.actions.push_back(std::move(s));
  }
  const auto& d = j.at("description");
  r.description = {d.at(0).get<std::string>(), d.at(1).get<std::string>(),
                   d.at(2).get<std::string>()};
  return r;
}

namespace {

AttributeScore pick(const Distribution& d, int& cls) {
  cls = d.argmax();
  return {d.prob_of(cls), static_cast<int>(d.classes.size()), false};
}

void decode_actions(const NextActionModel& model, const PromptContext& ctx,
                    const DescCode& cond, Recommendation& rec) {
  const FeatureSpace& space = model.space();
  const DeviceCatalog& cat = space.catalog();
  Query q;
  q.desc = cond;
  for (int j = 0; j < space.config().max_actions; ++j) {
    ScoredAction out;
    int cls = -1;
    q.partial = ActionRef{};
    q.slot = Slot::kRoom;
    out.room = pick(model.distribution(ctx, q), cls);
    if (cls == space.stop_class()) break;
    q.partial.room = cls;

    q.slot = Slot::kDevice;
    out.device = pick(model.distribution(ctx, q), cls);
    q.partial.instance = cls;
    q.partial.type = cat.instances()[cls].type;

    q.slot = Slot::kField;
    out.field = pick(model.distribution(ctx, q), cls);
    q.partial.field_class = cls;
    q.partial.field_pos = cat.field_class_owner(cls).second;

    q.slot = Slot::kValue;
    out.value = pick(model.distribution(ctx, q), cls);
    const int vp = std::get<2>(cat.value_class_owner(cls));
    out.value.numeric = cat.field(q.partial.type, q.partial.field_pos).numeric();

    const int aid = cat.action_id(q.partial.instance, q.partial.field_pos, vp);
    out.action = cat.action_at(aid);
    q.done.push_back(cat.action_ref(aid));
    rec.actions.push_back(std::move(out));
  }
  if (rec.actions.empty()) throw InvalidArgument("decoding produced no action");
}

}  // namespace

Recommendation decode_recommendation(const NextActionModel& model, const PromptContext& ctx,
                                     DecodeStrategy strategy) {
  const DeviceCatalog& cat = model.space().catalog();
  Recommendation rec;
  if (strategy == DecodeStrategy::kActionFirst) {
    decode_actions(model, ctx, DescCode{}, rec);
    rec.description = describe(rec.actions.front().action, cat);
    return rec;
  }
  Query q;
  q.slot = Slot::kDescTemplate;
  DescCode desc;
  desc.tpl = model.distribution(ctx, q).argmax();
  q.slot = Slot::kDescRoom;
  q.desc = {desc.tpl, -1, -1};
  desc.room = model.distribution(ctx, q).argmax();
  q.slot = Slot::kDescDevice;
  q.desc = {desc.tpl, desc.room, -1};
  desc.type = model.distribution(ctx, q).argmax();
  decode_actions(model, ctx, desc, rec);
  rec.description = decode_description(desc, cat);
  return rec;
}

Recommendation decode_recommendation(const NextActionModel& model, const Prompt& prompt,
                                     DecodeStrategy strategy) {
  if (prompt.candidates.empty()) throw InvalidArgument("prompt without candidate devices");
  const PromptContext ctx = model.space().context(prompt, /*restrict_candidates=*/true);
  Recommendation rec = decode_recommendation(model, ctx, strategy);
  rec.time = prompt.time;
  return rec;
}

}  // namespace opsrec
