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

#include <array>
#include <cstdint>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "opsrec/corpus.h"
#include "opsrec/features.h"

namespace opsrec {

/// Every emitted probability is at least this large.
inline constexpr double kProbFloor = 1e-8;

/// A conditional distribution over a head's legal support. Classes outside
/// `classes` have probability exactly zero.
struct Distribution {
  Slot slot = Slot::kRoom;
  std::vector<int> classes;  // sorted
  std::vector<double> probs;

  double prob_of(int cls) const;
  /// Most probable class; ties go to the smallest class id.
  int argmax() const;
};

/// Interface the objectives, decoder and exposure gate are written against.
class NextActionModel {
 public:
  virtual ~NextActionModel() = default;

  virtual const FeatureSpace& space() const = 0;
  virtual Distribution distribution(const PromptContext& ctx,
                                    const Query& q) const = 0;
  virtual int filler_vocab() const = 0;
  /// Next filler word distribution; prev = -1 at the start of a window.
  virtual std::vector<double> filler_distribution(int prev) const = 0;
};

/// Parameter address used by sparse gradients. `row` >= 0 addresses W,
/// kBiasRow the bias vector, kClassFeatureRow the class-feature weights.
struct ParamRef {
  static constexpr int kBiasRow = -1;
  static constexpr int kClassFeatureRow = -2;
  static constexpr int kFillerHead = kNumSlots;

  int head = 0;
  int row = 0;
  int col = 0;
};

/// List of (parameter, partial derivative) contributions; duplicates add.
struct SparseGrad {
  std::vector<std::pair<ParamRef, double>> entries;

  void add(int head, int row, int col, double v) {
    entries.push_back({ParamRef{head, row, col}, v});
  }
  void clear() { entries.clear(); }
};

/// Log-linear factorized categorical model. Each head scores class c as
///   z_c = b_c + sum_{f active} W(f, c) + u . phi(c)
/// over its legal support, softmax-normalizes, and mixes in the floor.
class ReferenceModel : public NextActionModel {
 public:
  using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  struct Head {
    Matrix W;
    Eigen::VectorXd b;
    Eigen::VectorXd u;
  };

  ReferenceModel(const DeviceCatalog& catalog, FeatureConfig cfg, int filler_vocab);

  const FeatureSpace& space() const override { return space_; }
  Distribution distribution(const PromptContext& ctx, const Query& q) const override;
  int filler_vocab() const override { return static_cast<int>(filler_.b.size()); }
  std::vector<double> filler_distribution(int prev) const override;

  /// -log p(target) for one head; when `grad` is set, adds
  /// scale * d(-log p)/d(theta). Throws when target is outside the support.
  double nll(const PromptContext& ctx, const Query& q, int target,
             SparseGrad* grad, double scale) const;
  double filler_nll(int prev, int next, SparseGrad* grad, double scale) const;

  /// theta -= lr * g.
  void apply(const SparseGrad& g, double lr);

  Head& head(Slot s) { return heads_[static_cast<int>(s)]; }
  const Head& head(Slot s) const { return heads_[static_cast<int>(s)]; }
  Head& filler_head() { return filler_; }

  /// Flat parameter view for finite-difference checks.
  std::size_t num_parameters() const;
  double& parameter(std::size_t k);
  std::size_t flat_index(const ParamRef& p) const;

  bool all_finite() const;

  nlohmann::json to_json(std::uint64_t vocab_fingerprint) const;
  /// Throws InvalidArgument when the checkpoint does not fit the catalog.
  static ReferenceModel from_json(const DeviceCatalog& catalog, const nlohmann::json& j);

 private:
  Head& head_at(int h) { return h == ParamRef::kFillerHead ? filler_ : heads_[h]; }
  const Head& head_at(int h) const {
    return h == ParamRef::kFillerHead ? filler_ : heads_[h];
  }

  FeatureSpace space_;
  std::array<Head, kNumSlots> heads_;
  Head filler_;  // rows: previous word (last row = window start)
};

/// Token-level view: `partial` holds whole action quadruples followed by the
/// room/device/field prefix of the next one. The result lists legal next
/// symbols (the stop symbol at a room position after the first action).
struct TokenDistribution {
  std::vector<std::string> symbols;
  std::vector<double> probs;
};
TokenDistribution next_action_distribution(const NextActionModel& model,
                                           const Prompt& prompt,
                                           const TokenSequence& partial);

}  // namespace opsrec
