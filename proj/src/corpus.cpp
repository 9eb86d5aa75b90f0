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

#include "opsrec/corpus.h"

#include <algorithm>
#include <set>

#include <fmt/format.h>

#include "opsrec/hash.h"
#include "opsrec/timeutil.h"

namespace opsrec {

using nlohmann::json;

namespace {

constexpr std::string_view kTemplatePrefix = "tpl:";

const std::vector<std::string_view>& marker_tokens() {
  static const std::vector<std::string_view> m = {
      tok::kPad,     tok::kUser,     tok::kFiller,     tok::kStop,
      tok::kOp,      tok::kOpEnd,    tok::kTime,       tok::kTimeEnd,
      tok::kEnv,     tok::kEnvEnd,   tok::kAct,        tok::kActEnd,
      tok::kDesc,    tok::kDescEnd,  tok::kPrompt,     tok::kPromptEnd,
      tok::kHistory, tok::kHistoryEnd, tok::kNow,      tok::kNowEnd,
      tok::kCand,    tok::kCandEnd,  tok::kTarget,     tok::kTargetEnd};
  return m;
}

class TokenReader {
 public:
  explicit TokenReader(const TokenSequence& t, std::size_t pos = 0)
      : tokens_(t), pos_(pos) {}

  bool done() const { return pos_ >= tokens_.size(); }
  std::size_t pos() const { return pos_; }
  const std::string& peek() const {
    if (done()) throw ParseError("unexpected end of token sequence");
    return tokens_[pos_];
  }
  const std::string& next() {
    const auto& t = peek();
    ++pos_;
    return t;
  }
  void expect(std::string_view want) {
    const auto& got = next();
    if (got != want) {
      throw ParseError(fmt::format("expected '{}' at {}, got '{}'", want,
                                   pos_ - 1, got));
    }
  }
  bool accept(std::string_view want) {
    if (!done() && tokens_[pos_] == want) {
      ++pos_;
      return true;
    }
    return false;
  }

 private:
  const TokenSequence& tokens_;
  std::size_t pos_;
};

int parse_prefixed_int(const std::string& token, std::string_view prefix) {
  if (token.rfind(prefix, 0) != 0) {
    throw ParseError(fmt::format("expected {}.. token, got '{}'", prefix, token));
  }
  try {
    return std::stoi(token.substr(prefix.size()));
  } catch (const std::exception&) {
    throw ParseError("malformed time token '" + token + "'");
  }
}

Value parse_value(const std::string& token, const ValueDomain& domain) {
  Value v(token);
  if (domain.numeric()) {
    try {
      std::size_t used = 0;
      const double x = std::stod(token, &used);
      if (used != token.size()) throw ParseError("trailing characters");
      v = Value(x);
    } catch (const std::exception&) {
      throw ParseError("malformed numeric token '" + token + "'");
    }
  }
  if (!domain.index_of(v)) {
    throw ParseError("value '" + token + "' outside its domain");
  }
  return v;
}

void append_time(TokenSequence& out, Timestamp t) {
  const CivilTime c = to_civil(t);
  if (c.year < 2000 || c.year > 2099) {
    throw InvalidArgument("timestamps must fall in 2000-2099");
  }
  out.emplace_back(tok::kTime);
  out.push_back(fmt::format("yy:{:02d}", c.year - 2000));
  out.push_back(fmt::format("mm:{:02d}", c.month));
  out.push_back(fmt::format("dd:{:02d}", c.day));
  out.push_back(fmt::format("wd:{}", kWeekdayNames[c.weekday]));
  out.push_back(fmt::format("hh:{:02d}", c.hour));
  out.push_back(fmt::format("mi:{:02d}", c.minute));
  out.emplace_back(tok::kTimeEnd);
}

Timestamp parse_time(TokenReader& r) {
  r.expect(tok::kTime);
  const int yy = parse_prefixed_int(r.next(), "yy:");
  const int mm = parse_prefixed_int(r.next(), "mm:");
  const int dd = parse_prefixed_int(r.next(), "dd:");
  const std::string wd = r.next();
  const int hh = parse_prefixed_int(r.next(), "hh:");
  const int mi = parse_prefixed_int(r.next(), "mi:");
  r.expect(tok::kTimeEnd);
  const Timestamp t = from_civil(2000 + yy, mm, dd, hh, mi);
  if (wd != fmt::format("wd:{}", kWeekdayNames[weekday_of(t)])) {
    throw ParseError("weekday token '" + wd + "' disagrees with the date");
  }
  return t;
}

void append_env(TokenSequence& out, const std::vector<EnvReading>& env) {
  if (env.empty()) return;
  out.emplace_back(tok::kEnv);
  for (const auto& e : env) {
    out.push_back(e.room);
    out.push_back(e.indicator);
    out.push_back(e.value.symbol());
  }
  out.emplace_back(tok::kEnvEnd);
}

std::vector<EnvReading> parse_env(TokenReader& r, const DeviceCatalog& c) {
  std::vector<EnvReading> env;
  if (!r.accept(tok::kEnv)) return env;
  while (!r.accept(tok::kEnvEnd)) {
    EnvReading e;
    e.room = r.next();
    if (!c.room_index(e.room)) throw ParseError("unknown room '" + e.room + "'");
    e.indicator = r.next();
    auto ind = c.indicator_index(e.indicator);
    if (!ind) throw ParseError("unknown indicator '" + e.indicator + "'");
    e.value = parse_value(r.next(), c.indicators()[*ind].domain);
    env.push_back(std::move(e));
  }
  return env;
}

void append_actions(TokenSequence& out, const std::vector<Action>& actions) {
  out.emplace_back(tok::kAct);
  for (const auto& a : actions) {
    out.push_back(a.room);
    out.push_back(a.device);
    out.push_back(a.field);
    out.push_back(a.value.symbol());
  }
  out.emplace_back(tok::kActEnd);
}

std::vector<Action> parse_actions(TokenReader& r, const DeviceCatalog& c) {
  r.expect(tok::kAct);
  std::vector<Action> actions;
  while (!r.accept(tok::kActEnd)) {
    Action a;
    a.room = r.next();
    a.device = r.next();
    a.field = r.next();
    auto type = c.type_index(a.device);
    const FieldSpec* f = type ? c.type(*type).field(a.field) : nullptr;
    if (!f) {
      throw ParseError("unknown device field " + a.device + "." + a.field);
    }
    a.value = parse_value(r.next(), f->domain);
    if (auto v = validate_action(a, c); !v) {
      throw ParseError(v.message);
    }
    actions.push_back(std::move(a));
  }
  return actions;
}

void append_description(TokenSequence& out, const Description& d) {
  out.emplace_back(tok::kDesc);
  out.push_back(std::string(kTemplatePrefix) + d.template_id);
  out.push_back(d.room);
  out.push_back(d.device);
  out.emplace_back(tok::kDescEnd);
}

Description parse_description(TokenReader& r) {
  r.expect(tok::kDesc);
  Description d;
  const auto& t = r.next();
  if (t.rfind(kTemplatePrefix, 0) != 0) {
    throw ParseError("expected template token, got '" + t + "'");
  }
  d.template_id = t.substr(kTemplatePrefix.size());
  d.room = r.next();
  d.device = r.next();
  r.expect(tok::kDescEnd);
  return d;
}

void append_operation(TokenSequence& out, const Operation& op,
                      SerializeMode mode) {
  out.emplace_back(tok::kOp);
  append_time(out, op.timestamp);
  append_env(out, op.env);
  append_actions(out, op.actions);
  if (mode == SerializeMode::kTarget && op.description) {
    append_description(out, *op.description);
  }
  out.emplace_back(tok::kOpEnd);
}

Operation parse_op(TokenReader& r, const DeviceCatalog& c) {
  r.expect(tok::kOp);
  Operation op;
  op.timestamp = parse_time(r);
  op.env = parse_env(r, c);
  op.actions = parse_actions(r, c);
  if (r.peek() == tok::kDesc) {
    op.description = parse_description(r);
  }
  r.expect(tok::kOpEnd);
  return op;
}

void append_candidates(TokenSequence& out, const std::vector<DeviceRef>& cands) {
  out.emplace_back(tok::kCand);
  for (const auto& d : cands) {
    out.push_back(d.room);
    out.push_back(d.device);
  }
  out.emplace_back(tok::kCandEnd);
}

Prompt parse_prompt_block(TokenReader& r, const DeviceCatalog& c) {
  Prompt p;
  r.expect(tok::kPrompt);
  r.expect(tok::kHistory);
  while (!r.accept(tok::kHistoryEnd)) {
    p.history.push_back(parse_op(r, c));
  }
  r.expect(tok::kNow);
  p.time = parse_time(r);
  p.env = parse_env(r, c);
  r.expect(tok::kNowEnd);
  r.expect(tok::kCand);
  while (!r.accept(tok::kCandEnd)) {
    DeviceRef d;
    d.room = r.next();
    d.device = r.next();
    if (!c.instance_index(d.room, d.device)) {
      throw ParseError("unknown candidate " + d.room + "/" + d.device);
    }
    p.candidates.push_back(std::move(d));
  }
  r.expect(tok::kPromptEnd);
  return p;
}

}  // namespace

std::string filler_symbol(int i) { return fmt::format("w:{}", i); }

Vocabulary Vocabulary::for_catalog(const DeviceCatalog& catalog,
                                   int filler_size) {
  Vocabulary v;
  for (auto m : marker_tokens()) {
    v.symbols_.emplace_back(m);
  }
  std::set<std::string> rest;
  for (int y = 0; y < 100; ++y) rest.insert(fmt::format("yy:{:02d}", y));
  for (int m = 1; m <= 12; ++m) rest.insert(fmt::format("mm:{:02d}", m));
  for (int d = 1; d <= 31; ++d) rest.insert(fmt::format("dd:{:02d}", d));
  for (auto w : kWeekdayNames) rest.insert(fmt::format("wd:{}", w));
  for (int h = 0; h < 24; ++h) rest.insert(fmt::format("hh:{:02d}", h));
  for (int m = 0; m < 60; ++m) rest.insert(fmt::format("mi:{:02d}", m));
  for (const auto& r : catalog.rooms()) rest.insert(r);
  for (const auto& t : catalog.device_types()) {
    rest.insert(t.name);
    for (const auto& f : t.fields) {
      rest.insert(f.name);
      rest.insert(f.domain.symbols.begin(), f.domain.symbols.end());
    }
  }
  for (const auto& ind : catalog.indicators()) {
    rest.insert(ind.name);
    rest.insert(ind.domain.symbols.begin(), ind.domain.symbols.end());
  }
  for (const auto& t : catalog.templates()) {
    rest.insert(std::string(kTemplatePrefix) + t);
  }
  for (int i = 0; i < filler_size; ++i) rest.insert(filler_symbol(i));
  for (auto m : marker_tokens()) rest.erase(std::string(m));
  v.symbols_.insert(v.symbols_.end(), rest.begin(), rest.end());
  v.index();
  return v;
}

Vocabulary Vocabulary::from_json(const json& j) {
  Vocabulary v;
  v.symbols_ = j.at("symbols").get<std::vector<std::string>>();
  v.index();
  return v;
}

json Vocabulary::to_json() const {
  return {{"symbols", symbols_}, {"fingerprint", hex64(fingerprint())}};
}

void Vocabulary::index() {
  ids_.clear();
  for (std::size_t i = 0; i < symbols_.size(); ++i) {
    if (!ids_.emplace(symbols_[i], static_cast<int>(i)).second) {
      throw InvalidArgument("duplicate vocabulary symbol " + symbols_[i]);
    }
  }
}

bool Vocabulary::contains(std::string_view s) const {
  return ids_.count(std::string(s)) > 0;
}

int Vocabulary::id(std::string_view s) const {
  auto it = ids_.find(std::string(s));
  if (it == ids_.end()) {
    throw ParseError("symbol '" + std::string(s) + "' is not in the vocabulary");
  }
  return it->second;
}

std::vector<int> Vocabulary::encode(const TokenSequence& tokens) const {
  std::vector<int> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(id(t));
  return out;
}

TokenSequence Vocabulary::decode(const std::vector<int>& ids) const {
  TokenSequence out;
  out.reserve(ids.size());
  for (int i : ids) {
    if (i < 0 || i >= static_cast<int>(symbols_.size())) {
      throw ParseError(fmt::format("token id {} out of range", i));
    }
    out.push_back(symbols_[i]);
  }
  return out;
}

std::uint64_t Vocabulary::fingerprint() const {
  std::uint64_t h = fnv1a64("");
  for (const auto& s : symbols_) {
    h = fnv1a64(s, h);
    h = fnv1a64(std::string_view("\0", 1), h);
  }
  return h;
}

TokenSequence serialize_operation(const Operation& op, SerializeMode mode,
                                  const DeviceCatalog& catalog) {
  if (auto v = validate_operation(op, catalog); !v) {
    throw InvalidArgument("serialize_operation: " + v.message);
  }
  TokenSequence out;
  append_operation(out, op, mode);
  return out;
}

Operation parse_operation(const TokenSequence& tokens,
                          const DeviceCatalog& catalog) {
  TokenReader r(tokens);
  Operation op = parse_op(r, catalog);
  if (!r.done()) {
    throw ParseError("trailing tokens after operation");
  }
  return op;
}

Prompt build_prompt(const History& history, std::size_t cutoff,
                    const DeviceCatalog& catalog, int history_limit) {
  const auto& ops = history.operations;
  if (cutoff < 1 || cutoff >= ops.size()) {
    throw InvalidArgument(fmt::format(
        "cutoff {} outside [1, {}] for a history of {} operations", cutoff,
        ops.size() == 0 ? 0 : ops.size() - 1, ops.size()));
  }
  if (history_limit <= 0) {
    throw InvalidArgument("history limit must be positive");
  }
  Prompt p;
  const std::size_t begin =
      cutoff > static_cast<std::size_t>(history_limit) ? cutoff - history_limit
                                                       : 0;
  p.history.assign(ops.begin() + begin, ops.begin() + cutoff);
  p.time = ops[cutoff].timestamp;
  p.env = ops[cutoff].env;
  if (!history.devices.empty()) {
    p.candidates = history.devices;
  } else {
    std::set<DeviceRef> seen;
    for (const auto& op : ops) {
      for (const auto& a : op.actions) seen.insert({a.room, a.device});
    }
    p.candidates.assign(seen.begin(), seen.end());
  }
  for (const auto& d : p.candidates) {
    if (!catalog.instance_index(d.room, d.device)) {
      throw InvalidArgument("candidate " + d.room + "/" + d.device +
                            " is not in the catalog");
    }
  }
  return p;
}

TokenSequence serialize_prompt(const Prompt& p, const DeviceCatalog& catalog) {
  TokenSequence out;
  out.emplace_back(tok::kPrompt);
  out.emplace_back(tok::kHistory);
  for (const auto& op : p.history) {
    auto t = serialize_operation(op, SerializeMode::kHistory, catalog);
    out.insert(out.end(), t.begin(), t.end());
  }
  out.emplace_back(tok::kHistoryEnd);
  out.emplace_back(tok::kNow);
  append_time(out, p.time);
  append_env(out, p.env);
  out.emplace_back(tok::kNowEnd);
  append_candidates(out, p.candidates);
  out.emplace_back(tok::kPromptEnd);
  return out;
}

Prompt parse_prompt(const TokenSequence& tokens, const DeviceCatalog& catalog) {
  TokenReader r(tokens);
  Prompt p = parse_prompt_block(r, catalog);
  if (!r.done()) throw ParseError("trailing tokens after prompt");
  return p;
}

FinetuneInstance build_finetune_instance_at(const History& history,
                                            std::size_t cutoff,
                                            const DeviceCatalog& catalog,
                                            int history_limit) {
  FinetuneInstance inst;
  inst.user_id = history.user_id;
  inst.prompt = build_prompt(history, cutoff, catalog, history_limit);
  const Operation& target = history.operations[cutoff];
  if (auto v = validate_operation(target, catalog); !v) {
    throw InvalidArgument("target operation invalid: " + v.message);
  }
  inst.target_actions = target.actions;
  inst.target_description =
      target.description ? *target.description
                         : describe(target.actions.front(), catalog);
  for (const auto& a : inst.target_actions) {
    const DeviceRef d{a.room, a.device};
    if (std::find(inst.prompt.candidates.begin(), inst.prompt.candidates.end(),
                  d) == inst.prompt.candidates.end()) {
      throw InvalidArgument("target device " + a.room + "/" + a.device +
                            " is not a candidate");
    }
  }
  return inst;
}

FinetuneInstance build_finetune_instance(const History& history,
                                         const DeviceCatalog& catalog,
                                         int history_limit) {
  if (history.operations.size() < 2) {
    throw InvalidArgument("history too short for a fine-tuning instance");
  }
  return build_finetune_instance_at(history, history.operations.size() - 1,
                                    catalog, history_limit);
}

TokenSequence serialize_instance(const FinetuneInstance& inst,
                                 const DeviceCatalog& catalog) {
  TokenSequence out = serialize_prompt(inst.prompt, catalog);
  out.emplace_back(tok::kTarget);
  append_actions(out, inst.target_actions);
  append_description(out, inst.target_description);
  out.emplace_back(tok::kTargetEnd);
  return out;
}

FinetuneInstance parse_instance(const TokenSequence& tokens,
                                const DeviceCatalog& catalog) {
  TokenReader r(tokens);
  FinetuneInstance inst;
  inst.prompt = parse_prompt_block(r, catalog);
  r.expect(tok::kTarget);
  inst.target_actions = parse_actions(r, catalog);
  inst.target_description = parse_description(r);
  r.expect(tok::kTargetEnd);
  if (!r.done()) throw ParseError("trailing tokens after instance");
  return inst;
}

FillerCorpus::FillerCorpus(int vocab_size, std::uint64_t seed)
    : vocab_size_(vocab_size) {
  if (vocab_size < 2) {
    throw InvalidArgument("filler vocabulary needs at least two words");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  transitions_.assign(vocab_size, std::vector<double>(vocab_size, 0.0));
  for (int i = 0; i < vocab_size; ++i) {
    double total = 0;
    for (int k = 0; k < vocab_size; ++k) {
      // A few strongly preferred successors over a thin uniform floor.
      const double w = unit(rng);
      transitions_[i][k] = 0.05 + (w > 0.85 ? 8.0 * w : 0.0);
      total += transitions_[i][k];
    }
    for (auto& p : transitions_[i]) p /= total;
  }
}

double FillerCorpus::transition(int prev, int next) const {
  return transitions_.at(prev).at(next);
}

std::vector<int> FillerCorpus::sample(std::size_t n, std::mt19937_64& rng) const {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<int> out;
  out.reserve(n);
  int prev = static_cast<int>(unit(rng) * vocab_size_) % vocab_size_;
  for (std::size_t i = 0; i < n; ++i) {
    if (i == 0) {
      out.push_back(prev);
      continue;
    }
    const double u = unit(rng);
    double acc = 0;
    int next = vocab_size_ - 1;
    for (int k = 0; k < vocab_size_; ++k) {
      acc += transitions_[prev][k];
      if (u < acc) {
        next = k;
        break;
      }
    }
    out.push_back(next);
    prev = next;
  }
  return out;
}

std::vector<PretrainWindow> build_pretrain_stream(const Dataset& data,
                                                  const FillerCorpus& filler,
                                                  const CorpusConfig& cfg,
                                                  const DeviceCatalog& catalog,
                                                  std::uint64_t seed) {
  if (cfg.max_len <= 0) {
    throw InvalidArgument("max_len must be positive");
  }
  if (cfg.mix_operations <= 0 || cfg.mix_filler < 0) {
    throw InvalidArgument("mix ratio needs a positive operation share");
  }
  const std::size_t max_len = static_cast<std::size_t>(cfg.max_len);

  std::vector<TokenSequence> op_windows;
  TokenSequence cur;
  const std::string* cur_user = nullptr;
  auto flush = [&] {
    if (cur.empty()) return;
    cur.resize(max_len, std::string(tok::kPad));
    op_windows.push_back(std::move(cur));
    cur.clear();
    cur_user = nullptr;
  };
  std::size_t total_ops = 0;
  for (const auto& h : data) {
    for (const auto& op : h.operations) {
      ++total_ops;
      TokenSequence t = serialize_operation(op, SerializeMode::kHistory, catalog);
      const bool new_segment = cur_user == nullptr || *cur_user != h.user_id;
      std::size_t need = t.size() + (new_segment ? 1 : 0);
      if (cur.size() + need > max_len) {
        flush();
        need = t.size() + 1;
      }
      if (need > max_len) {
        throw InvalidArgument(fmt::format(
            "operation of {} tokens does not fit a window of {}", t.size(),
            max_len));
      }
      if (cur_user == nullptr || *cur_user != h.user_id) {
        cur.emplace_back(tok::kUser);
        cur_user = &h.user_id;
      }
      cur.insert(cur.end(), t.begin(), t.end());
    }
  }
  flush();
  if (total_ops == 0) {
    throw InvalidArgument("empty dataset");
  }

  std::mt19937_64 rng(seed);
  std::vector<PretrainWindow> out;
  for (std::size_t i = 0; i < op_windows.size(); ++i) {
    out.push_back({WindowKind::kOperations, std::move(op_windows[i])});
    if ((i + 1) % static_cast<std::size_t>(cfg.mix_operations) == 0 ||
        i + 1 == op_windows.size()) {
      for (int f = 0; f < cfg.mix_filler; ++f) {
        PretrainWindow w;
        w.kind = WindowKind::kFiller;
        w.tokens.reserve(max_len);
        w.tokens.emplace_back(tok::kFiller);
        for (int id : filler.sample(max_len - 1, rng)) {
          w.tokens.push_back(filler_symbol(id));
        }
        out.push_back(std::move(w));
      }
    }
  }
  return out;
}

std::vector<std::vector<Operation>> parse_operation_window(
    const TokenSequence& window, const DeviceCatalog& catalog) {
  std::vector<std::vector<Operation>> segments;
  TokenReader r(window);
  while (!r.done()) {
    const auto& t = r.peek();
    if (t == tok::kPad) break;
    if (t == tok::kUser) {
      r.next();
      segments.emplace_back();
      continue;
    }
    if (segments.empty()) {
      throw ParseError("operation window must open with <user>");
    }
    segments.back().push_back(parse_op(r, catalog));
  }
  while (!r.done()) {
    if (r.next() != tok::kPad) throw ParseError("tokens after padding");
  }
  return segments;
}

std::vector<int> parse_filler_window(const TokenSequence& window) {
  TokenReader r(window);
  r.expect(tok::kFiller);
  std::vector<int> ids;
  while (!r.done()) {
    ids.push_back(parse_prefixed_int(r.next(), "w:"));
  }
  return ids;
}

}  // namespace opsrec
