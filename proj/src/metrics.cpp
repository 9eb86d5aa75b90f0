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

#include "opsrec/metrics.h"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <optional>
#include <set>

#include <fmt/format.h>

namespace opsrec {

namespace {

std::optional<double> numeric_value(const Action& a, const DeviceCatalog& catalog) {
  auto type = catalog.type_index(a.device);
  if (!type) return std::nullopt;
  const FieldSpec* f = catalog.type(*type).field(a.field);
  if (!f || !f->numeric()) return std::nullopt;
  if (a.value.is_numeric()) return a.value.number();
  const std::string& s = a.value.symbol();
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) return std::nullopt;
  return v;
}

}  // namespace

bool exact_match(const Action& pred, const Action& label) { return pred == label; }

bool loose_match(const Action& pred, const Action& label, const DeviceCatalog& catalog,
                 double eps) {
  if (exact_match(pred, label)) return true;
  if (pred.room != label.room || pred.device != label.device) return false;
  if (pred.field == label.field) {
    const auto p = numeric_value(pred, catalog);
    const auto y = numeric_value(label, catalog);
    if (!p || !y || *y == 0) return false;
    return std::abs(*p - *y) / std::abs(*y) <= eps;
  }
  const auto a = catalog.equivalence_class_of(pred);
  const auto b = catalog.equivalence_class_of(label);
  return a && b && *a == *b;
}

std::size_t loose_matching_size(const std::vector<Action>& predicted,
                                const std::vector<Action>& label,
                                const DeviceCatalog& catalog) {
  const std::size_t n = predicted.size(), m = label.size();
  std::vector<std::vector<int>> adj(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      if (loose_match(predicted[i], label[j], catalog)) adj[i].push_back(static_cast<int>(j));
    }
  }
  // Greedy seed, then augmenting paths until none remain.
  std::vector<int> owner(m, -1), match(n, -1);
  for (std::size_t i = 0; i < n; ++i) {
    for (int j : adj[i]) {
      if (owner[j] < 0) {
        owner[j] = static_cast<int>(i);
        match[i] = j;
        break;
      }
    }
  }
  std::vector<char> seen;
  auto augment = [&](auto&& self, int i) -> bool {
    for (int j : adj[i]) {
      if (seen[j]) continue;
      seen[j] = 1;
      if (owner[j] < 0 || self(self, owner[j])) {
        owner[j] = i;
        match[i] = j;
        return true;
      }
    }
    return false;
  };
  for (std::size_t i = 0; i < n; ++i) {
    if (match[i] >= 0) continue;
    seen.assign(m, 0);
    augment(augment, static_cast<int>(i));
  }
  return static_cast<std::size_t>(std::count_if(match.begin(), match.end(),
                                                [](int j) { return j >= 0; }));
}

double F1Counts::precision() const {
  return predicted == 0 ? 0.0 : static_cast<double>(matched) / static_cast<double>(predicted);
}

double F1Counts::recall() const {
  return labels == 0 ? 0.0 : static_cast<double>(matched) / static_cast<double>(labels);
}

double F1Counts::f1() const {
  const double p = precision(), r = recall();
  return p + r == 0 ? 0.0 : 2 * p * r / (p + r);
}

F1Counts lm_counts(const std::vector<EvalRecord>& records, const DeviceCatalog& catalog) {
  F1Counts c;
  for (const auto& r : records) {
    c.matched += loose_matching_size(r.predicted, r.label, catalog);
    c.predicted += r.predicted.size();
    c.labels += r.label.size();
  }
  return c;
}

double lm_f1(const std::vector<EvalRecord>& records, const DeviceCatalog& catalog) {
  if (records.empty()) throw InvalidArgument("lm_f1 over no records");
  return lm_counts(records, catalog).f1();
}

std::string to_string(RuleCase c) {
  switch (c) {
    case RuleCase::kIdentical: return "identical";
    case RuleCase::kOpposite: return "opposite";
    case RuleCase::kContaining: return "containing";
    case RuleCase::kIntersecting: return "intersecting";
    case RuleCase::kDisjoint: return "disjoint";
  }
  return "?";
}

RuleCase rule_case(const std::vector<Action>& predicted, const std::vector<Action>& label,
                   const DeviceCatalog& catalog) {
  if (predicted.empty() || label.empty()) throw InvalidArgument("rule score over an empty set");
  const std::set<Action> y(predicted.begin(), predicted.end());
  const std::set<Action> truth(label.begin(), label.end());
  if (y == truth) return RuleCase::kIdentical;
  std::set<Action> flipped;
  bool all_flip = true;
  for (const auto& a : truth) {
    auto o = opposite_action(a, catalog);
    if (!o) {
      all_flip = false;
      break;
    }
    flipped.insert(*o);
  }
  if (all_flip && flipped.size() == truth.size() && flipped == y) return RuleCase::kOpposite;
  std::size_t common = 0;
  for (const auto& a : truth) common += y.count(a);
  if (common == truth.size()) return RuleCase::kContaining;
  return common > 0 ? RuleCase::kIntersecting : RuleCase::kDisjoint;
}

double rule_score(const std::vector<Action>& predicted, const std::vector<Action>& label,
                  const DeviceCatalog& catalog) {
  switch (rule_case(predicted, label, catalog)) {
    case RuleCase::kIdentical: return 1.0;
    case RuleCase::kOpposite: return -0.1;
    case RuleCase::kContaining: return 0.9;
    case RuleCase::kIntersecting: {
      const std::set<Action> y(predicted.begin(), predicted.end());
      std::size_t common = 0;
      for (const auto& a : std::set<Action>(label.begin(), label.end())) common += y.count(a);
      return 1.0 / static_cast<double>(common);
    }
    case RuleCase::kDisjoint: return 0.0;
  }
  return 0.0;
}

double corpus_rule_score(const std::vector<EvalRecord>& records, const DeviceCatalog& catalog) {
  if (records.empty()) throw InvalidArgument("rule score over no records");
  double num = 0, quads = 0;
  for (const auto& r : records) {
    const double n = static_cast<double>(r.predicted.size());
    num += n * rule_score(r.predicted, r.label, catalog);
    quads += n;
  }
  return num / quads;
}

bool record_exact_match(const EvalRecord& r) {
  return r.predicted.size() == r.label.size() &&
         std::equal(r.predicted.begin(), r.predicted.end(), r.label.begin(), exact_match);
}

double em_accuracy(const std::vector<EvalRecord>& records) {
  if (records.empty()) throw InvalidArgument("EM over no records");
  const auto hits = std::count_if(records.begin(), records.end(), record_exact_match);
  return static_cast<double>(hits) / static_cast<double>(records.size());
}

namespace {

GroupMetrics summarize(const std::string& name, const std::vector<EvalRecord>& records,
                       const DeviceCatalog& catalog) {
  GroupMetrics g;
  g.group = name;
  g.records = records.size();
  if (records.empty()) return g;
  g.em = em_accuracy(records);
  g.lm_f1 = lm_f1(records, catalog);
  g.rule = corpus_rule_score(records, catalog);
  return g;
}

}  // namespace

EvalReport evaluate(const std::vector<std::vector<Action>>& predictions,
                    const LabeledSplit& split, const DeviceCatalog& catalog) {
  if (predictions.size() != split.instances.size()) {
    throw InvalidArgument(fmt::format("{} predictions for {} labeled instances",
                                      predictions.size(), split.instances.size()));
  }
  std::map<std::string, std::vector<EvalRecord>> by_tag;
  std::vector<EvalRecord> whole;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    EvalRecord r{predictions[i], split.instances[i].instance.target_actions};
    for (const auto& t : split.instances[i].tags) by_tag[t].push_back(r);
    whole.push_back(std::move(r));
  }
  EvalReport report;
  for (const char* bucket : {"1-5", "6-10", "11-20", "20+"}) {
    report.groups.push_back(summarize(bucket, by_tag[bucket], catalog));
  }
  std::set<std::string> categories;
  for (const auto& t : catalog.device_types()) categories.insert(t.category);
  for (const auto& c : categories) report.groups.push_back(summarize(c, by_tag[c], catalog));
  report.groups.push_back(summarize("Whole", whole, catalog));
  return report;
}

std::string EvalReport::to_csv() const {
  std::string out = "group,records,em_acc,lm_f1,rule\n";
  for (const auto& g : groups) {
    out += fmt::format("{},{},{:.6f},{:.6f},{:.6f}\n", g.group, g.records, g.em, g.lm_f1, g.rule);
  }
  return out;
}

std::string EvalReport::to_table(const std::string& title) const {
  std::string out = title + "\n";
  out += fmt::format("{:<14}{:>9}{:>10}{:>10}{:>10}\n", "Group", "Records", "EM-Acc", "LM-F1",
                     "Rule");
  for (const auto& g : groups) {
    out += fmt::format("{:<14}{:>9}{:>10.4f}{:>10.4f}{:>10.4f}\n", g.group, g.records, g.em,
                       g.lm_f1, g.rule);
  }
  return out;
}

}  // namespace opsrec
