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
#include <random>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "opsrec/catalog.h"
#include "opsrec/domain.h"

namespace opsrec {

class ParseError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

namespace tok {
inline constexpr std::string_view kUser = "<user>";
inline constexpr std::string_view kPad = "<pad>";
inline constexpr std::string_view kFiller = "<filler>";
inline constexpr std::string_view kStop = "<stop>";
inline constexpr std::string_view kOp = "<op>";
inline constexpr std::string_view kOpEnd = "</op>";
inline constexpr std::string_view kTime = "<time>";
inline constexpr std::string_view kTimeEnd = "</time>";
inline constexpr std::string_view kEnv = "<env>";
inline constexpr std::string_view kEnvEnd = "</env>";
inline constexpr std::string_view kAct = "<act>";
inline constexpr std::string_view kActEnd = "</act>";
inline constexpr std::string_view kDesc = "<desc>";
inline constexpr std::string_view kDescEnd = "</desc>";
inline constexpr std::string_view kPrompt = "<prompt>";
inline constexpr std::string_view kPromptEnd = "</prompt>";
inline constexpr std::string_view kHistory = "<history>";
inline constexpr std::string_view kHistoryEnd = "</history>";
inline constexpr std::string_view kNow = "<now>";
inline constexpr std::string_view kNowEnd = "</now>";
inline constexpr std::string_view kCand = "<cand>";
inline constexpr std::string_view kCandEnd = "</cand>";
inline constexpr std::string_view kTarget = "<target>";
inline constexpr std::string_view kTargetEnd = "</target>";
}  // namespace tok

using TokenSequence = std::vector<std::string>;

/// Closed symbol vocabulary with stable integer ids.
class Vocabulary {
 public:
  Vocabulary() = default;
  /// Every symbol the serializers can emit for this catalog, plus
  /// `filler_size` filler words.
  static Vocabulary for_catalog(const DeviceCatalog& catalog, int filler_size);
  static Vocabulary from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;

  std::size_t size() const { return symbols_.size(); }
  bool contains(std::string_view s) const;
  int id(std::string_view s) const;  // throws ParseError when absent
  const std::string& symbol(int id) const { return symbols_.at(id); }

  std::vector<int> encode(const TokenSequence& tokens) const;
  TokenSequence decode(const std::vector<int>& ids) const;

  std::uint64_t fingerprint() const;

 private:
  void index();

  std::vector<std::string> symbols_;
  std::unordered_map<std::string, int> ids_;
};

std::string filler_symbol(int i);

enum class SerializeMode { kHistory, kTarget };

/// Time tokens (yy mm dd weekday hh mi), env triplets, then action
/// quadruples; target mode appends the description after the actions.
TokenSequence serialize_operation(const Operation& op, SerializeMode mode,
                                  const DeviceCatalog& catalog);
/// Inverse of serialize_operation for a full `<op> ... </op>` block.
Operation parse_operation(const TokenSequence& tokens,
                          const DeviceCatalog& catalog);

/// Conditioning context for one recommendation.
struct Prompt {
  std::vector<Operation> history;  // most recent last
  Timestamp time = 0;
  std::vector<EnvReading> env;
  std::vector<DeviceRef> candidates;

  friend bool operator==(const Prompt&, const Prompt&) = default;
};

struct FinetuneInstance {
  std::string user_id;
  Prompt prompt;
  std::vector<Action> target_actions;
  Description target_description;
};

struct CorpusConfig {
  int history_limit = 20;   // H
  int max_len = 2048;
  int mix_operations = 1;   // operation windows per cycle
  int mix_filler = 1;       // filler windows per cycle
  int filler_vocab = 32;
};

/// Prompt for predicting operation `cutoff` (0-based) from the operations
/// before it. Requires 1 <= cutoff <= size-1.
Prompt build_prompt(const History& history, std::size_t cutoff,
                    const DeviceCatalog& catalog, int history_limit = 20);

TokenSequence serialize_prompt(const Prompt& p, const DeviceCatalog& catalog);
Prompt parse_prompt(const TokenSequence& tokens, const DeviceCatalog& catalog);

/// Instance targeting the final operation; requires at least two operations.
FinetuneInstance build_finetune_instance(const History& history,
                                         const DeviceCatalog& catalog,
                                         int history_limit = 20);
/// Instance targeting operation `cutoff`.
FinetuneInstance build_finetune_instance_at(const History& history,
                                            std::size_t cutoff,
                                            const DeviceCatalog& catalog,
                                            int history_limit = 20);

TokenSequence serialize_instance(const FinetuneInstance& inst,
                                 const DeviceCatalog& catalog);
FinetuneInstance parse_instance(const TokenSequence& tokens,
                                const DeviceCatalog& catalog);

/// Synthetic general-domain stand-in: a seeded Markov chain over a disjoint
/// filler vocabulary.
class FillerCorpus {
 public:
  FillerCorpus(int vocab_size, std::uint64_t seed);

  int vocab_size() const { return vocab_size_; }
  std::vector<int> sample(std::size_t n, std::mt19937_64& rng) const;
  /// Transition probability of word `next` after `prev`.
  double transition(int prev, int next) const;

 private:
  int vocab_size_;
  std::vector<std::vector<double>> transitions_;
};

enum class WindowKind { kOperations, kFiller };

struct PretrainWindow {
  WindowKind kind = WindowKind::kOperations;
  TokenSequence tokens;  // exactly max_len tokens
};

/// Packs serialized histories into fixed-length windows (whole operations
/// only, `<user>` opens every window's user segment, `<pad>` fills the tail)
/// and interleaves filler windows at mix_operations:mix_filler.
std::vector<PretrainWindow> build_pretrain_stream(const Dataset& data,
                                                  const FillerCorpus& filler,
                                                  const CorpusConfig& cfg,
                                                  const DeviceCatalog& catalog,
                                                  std::uint64_t seed);

/// Segments of an operations window: each inner vector is the ordered
/// operations of one `<user>` segment.
std::vector<std::vector<Operation>> parse_operation_window(
    const TokenSequence& window, const DeviceCatalog& catalog);

/// Filler word ids of a filler window.
std::vector<int> parse_filler_window(const TokenSequence& window);

}  // namespace opsrec
