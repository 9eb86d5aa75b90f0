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

// Offline recommendation metrics: exact match, loose-match F1, Rule score.

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "opsrec/catalog.h"
#include "opsrec/simulator.h"

namespace opsrec {

/// Room, device, field and value all equal.
bool exact_match(const Action& pred, const Action& label);

/// Exact match, or the same numeric field with relative error <= eps, or a
/// different field of the same device in the same room sharing an
/// equivalence class.
bool loose_match(const Action& pred, const Action& label, const DeviceCatalog& catalog,
                 double eps = 0.2);

struct EvalRecord {
  std::vector<Action> predicted;
  std::vector<Action> label;
};

/// Size of a maximum one-to-one loose matching between the two lists.
std::size_t loose_matching_size(const std::vector<Action>& predicted,
                                const std::vector<Action>& label,
                                const DeviceCatalog& catalog);

struct F1Counts {
  std::size_t matched = 0;
  std::size_t predicted = 0;
  std::size_t labels = 0;

  double precision() const;
  double recall() const;
  double f1() const;
};

F1Counts lm_counts(const std::vector<EvalRecord>& records, const DeviceCatalog& catalog);
double lm_f1(const std::vector<EvalRecord>& records, const DeviceCatalog& catalog);

enum class RuleCase { kIdentical, kOpposite, kContaining, kIntersecting, kDisjoint };
std::string to_string(RuleCase c);

/// Set comparison in precedence order identical, opposite, containing,
/// intersecting, disjoint.
RuleCase rule_case(const std::vector<Action>& predicted, const std::vector<Action>& label,
                   const DeviceCatalog& catalog);
/// 1, -0.1, 0.9, 1/|E| or 0 by case.
double rule_score(const std::vector<Action>& predicted, const std::vector<Action>& label,
                  const DeviceCatalog& catalog);
/// Per-quadruple average: each record weighs by its predicted set size.
double corpus_rule_score(const std::vector<EvalRecord>& records, const DeviceCatalog& catalog);

/// The whole predicted list equals the label list.
bool record_exact_match(const EvalRecord& r);
double em_accuracy(const std::vector<EvalRecord>& records);

struct GroupMetrics {
  std::string group;
  std::size_t records = 0;
  double em = 0;
  double lm_f1 = 0;
  double rule = 0;
};

struct EvalReport {
  /// Device-count buckets, device categories, then "Whole".
  std::vector<GroupMetrics> groups;

  const GroupMetrics& whole() const { return groups.back(); }
  std::string to_csv() const;
  std::string to_table(const std::string& title) const;
};

/// predictions[i] is the decoded action list for split.instances[i].
EvalReport evaluate(const std::vector<std::vector<Action>>& predictions,
                    const LabeledSplit& split, const DeviceCatalog& catalog);

}  // namespace opsrec
