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

#include "opsrec/pipeline.h"

#include <fstream>
#include <random>

#include <fmt/format.h>

#include "opsrec/hash.h"
#include "opsrec/preference.h"
#include "opsrec/simulator.h"
#include "opsrec/timeutil.h"
#include "opsrec/train.h"

namespace opsrec {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kArtifactVersion = 1;

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

json tokens_to_json(const TokenSequence& tokens) { return json(tokens); }

}  // namespace

MissingArtifact::MissingArtifact(std::string stage, const fs::path& path)
    : Error(fmt::format("missing artifact {}: run the `{}` stage first", path.string(), stage)),
      stage_(std::move(stage)) {}

Pipeline::Pipeline(PipelineConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  try {
    catalog_ = DeviceCatalog::load(cfg_.catalog);
  } catch (const Error& e) {
    throw ConfigError(std::string("catalog: ") + e.what());
  }
  hash_ = hex64(mix_seed(fnv1a64(cfg_.hash()), catalog_.fingerprint()));
}

fs::path Pipeline::path(const std::string& name) const { return fs::path(cfg_.out) / name; }

const std::vector<std::string>& Pipeline::stage_names() {
  static const std::vector<std::string> names = {
      "simulate", "build-corpus", "pretrain", "finetune", "mine-pairs", "dpo",
      "recommend", "gate", "evaluate", "sweep", "ablate", "all"};
  return names;
}

void Pipeline::run(const std::string& stage) {
  if (stage == "simulate") return simulate();
  if (stage == "build-corpus") return build_corpus();
  if (stage == "pretrain") return pretrain();
  if (stage == "finetune") return finetune();
  if (stage == "mine-pairs") return mine_pairs();
  if (stage == "dpo") return static_cast<void>(dpo());
  if (stage == "recommend") return recommend();
  if (stage == "gate") return gate();
  if (stage == "evaluate") return static_cast<void>(evaluate());
  if (stage == "sweep") return static_cast<void>(sweep());
  if (stage == "ablate") return static_cast<void>(ablate());
  if (stage == "all") return static_cast<void>(all());
  throw ConfigError("unknown stage '" + stage + "'");
}

void Pipeline::log(const std::string& msg) const {
  if (log_) log_(msg);
}

ArtifactHeader Pipeline::header(const std::string& stage) const {
  return {stage, hash_, cfg_.seed, kArtifactVersion};
}

std::uint64_t Pipeline::stage_seed(const std::string& stage) const {
  return mix_seed(cfg_.seed, fnv1a64(stage));
}

Timestamp Pipeline::split_time() const {
  return PopulationConfig::default_start() +
         static_cast<Timestamp>(cfg_.simulation.split_day) * kMinutesPerDay;
}

JsonlFile Pipeline::read_artifact(const std::string& file, const std::string& stage) const {
  const fs::path p = path(file);
  if (!fs::exists(p)) throw MissingArtifact(stage, p);
  return read_jsonl(p);
}

json Pipeline::read_json_artifact(const std::string& file, const std::string& stage) const {
  const fs::path p = path(file);
  if (!fs::exists(p)) throw MissingArtifact(stage, p);
  return read_json(p);
}

void Pipeline::write_model(const std::string& file, const std::string& stage,
                           const ReferenceModel& model) const {
  if (!model.all_finite()) throw DivergenceError(stage + ": parameters are not finite");
  const auto vocab = Vocabulary::for_catalog(catalog_, cfg_.corpus.filler_vocab);
  write_json(path(file), {{"header", header(stage).to_json()},
                          {"model", model.to_json(vocab.fingerprint())}});
}

ReferenceModel Pipeline::read_model(const std::string& file, const std::string& stage) const {
  const json j = read_json_artifact(file, stage);
  return ReferenceModel::from_json(catalog_, j.at("model"));
}

ReferenceModel Pipeline::load_model(const std::string& file) const {
  static const std::map<std::string, std::string> producers = {
      {"model_pretrain.json", "pretrain"},
      {"model_finetune.json", "finetune"},
      {"model_finetune_only.json", "finetune"},
      {"model_dpo.json", "dpo"}};
  const auto it = producers.find(file);
  if (it == producers.end()) throw ConfigError("unknown model artifact '" + file + "'");
  return read_model(file, it->second);
}

ReferenceModel Pipeline::fresh_model() const {
  return ReferenceModel(catalog_, cfg_.features, cfg_.corpus.filler_vocab);
}

Dataset Pipeline::histories() const {
  return histories_from_records(read_artifact("histories.jsonl", "simulate").records);
}

Dataset Pipeline::training_histories(const Dataset& full) const {
  Dataset train;
  const Timestamp cut = split_time();
  for (const auto& h : full) {
    History t{h.user_id, h.devices, {}};
    for (const auto& op : h.operations) {
      if (op.timestamp < cut) t.operations.push_back(op);
    }
    train.push_back(std::move(t));
  }
  return train;
}

namespace {

std::map<std::string, const History*> index_users(const Dataset& data) {
  std::map<std::string, const History*> by_user;
  for (const auto& h : data) by_user[h.user_id] = &h;
  return by_user;
}

const History& user_history(const std::map<std::string, const History*>& by_user,
                            const std::string& user) {
  auto it = by_user.find(user);
  if (it == by_user.end()) throw InvalidArgument("artifact names unknown user " + user);
  return *it->second;
}

}  // namespace

LabeledSplit Pipeline::test_split(const Dataset& full) const {
  const auto file = read_artifact("split.jsonl", "build-corpus");
  const auto by_user = index_users(full);
  LabeledSplit split;
  for (const auto& r : file.records) {
    const History& h = user_history(by_user, r.at("user_id").get<std::string>());
    LabeledInstance li;
    li.op_index = r.at("op_index").get<std::size_t>();
    li.instance =
        build_finetune_instance_at(h, li.op_index, catalog_, cfg_.corpus.history_limit);
    li.tags = r.at("tags").get<std::vector<std::string>>();
    split.instances.push_back(std::move(li));
  }
  return split;
}

std::vector<FinetuneInstance> Pipeline::finetune_instances(const Dataset& full) const {
  const auto file = read_artifact("finetune.jsonl", "build-corpus");
  const Dataset train = training_histories(full);
  const auto by_user = index_users(train);
  std::vector<FinetuneInstance> out;
  for (const auto& r : file.records) {
    const History& h = user_history(by_user, r.at("user_id").get<std::string>());
    out.push_back(build_finetune_instance_at(h, r.at("op_index").get<std::size_t>(), catalog_,
                                             cfg_.corpus.history_limit));
  }
  return out;
}

void Pipeline::simulate() {
  fs::create_directories(cfg_.out);
  PopulationConfig pc;
  pc.households = cfg_.simulation.households;
  pc.days = cfg_.simulation.days;
  pc.noise_rate = cfg_.simulation.noise_rate;
  pc.start = PopulationConfig::default_start();
  const auto profiles = generate_profiles(catalog_, pc, cfg_.seed);
  Dataset data;
  std::vector<json> profile_records;
  std::size_t ops = 0;
  for (std::size_t h = 0; h < profiles.size(); ++h) {
    data.push_back(
        generate_household(mix_seed(cfg_.seed, 1000 + h), profiles[h], pc.days, catalog_, pc.start));
    ops += data.back().operations.size();
    profile_records.push_back(profiles[h].to_json());
  }
  write_jsonl(path("profiles.jsonl"), header("simulate"), profile_records);
  write_jsonl(path("histories.jsonl"), header("simulate"), histories_to_records(data));
  log(fmt::format("simulate: {} households, {} operations", data.size(), ops));
}

void Pipeline::build_corpus() {
  const Dataset full = histories();
  const int H = cfg_.corpus.history_limit;
  const SplitResult split =
      make_splits(full, split_time(), catalog_, H, cfg_.simulation.test_stride);

  std::vector<json> test;
  for (const auto& li : split.test.instances) {
    test.push_back({{"user_id", li.instance.user_id},
                    {"op_index", li.op_index},
                    {"tags", li.tags}});
  }
  write_jsonl(path("split.jsonl"), header("build-corpus"), test);

  std::mt19937_64 rng(stage_seed("finetune-sample"));
  std::vector<json> ft;
  const std::size_t lo = cfg_.finetune_data.min_history;
  for (const auto& h : split.train) {
    if (h.operations.size() <= lo) continue;
    std::uniform_int_distribution<std::size_t> pick(lo, h.operations.size() - 1);
    for (int k = 0; k < cfg_.finetune_data.per_user; ++k) {
      ft.push_back({{"user_id", h.user_id}, {"op_index", pick(rng)}});
    }
  }
  write_jsonl(path("finetune.jsonl"), header("build-corpus"), ft);

  FillerCorpus filler(cfg_.corpus.filler_vocab, stage_seed("filler"));
  const auto windows =
      build_pretrain_stream(split.train, filler, cfg_.corpus, catalog_, stage_seed("pretrain-stream"));
  std::vector<json> pw;
  for (const auto& w : windows) {
    pw.push_back({{"kind", w.kind == WindowKind::kFiller ? "filler" : "operations"},
                  {"tokens", tokens_to_json(w.tokens)}});
  }
  write_jsonl(path("pretrain.jsonl"), header("build-corpus"), pw);
  log(fmt::format("build-corpus: {} test instances, {} fine-tuning instances, {} windows",
                  test.size(), ft.size(), pw.size()));
}

void Pipeline::pretrain() {
  const auto file = read_artifact("pretrain.jsonl", "build-corpus");
  ReferenceModel model = fresh_model();
  std::vector<EncodedWindow> windows;
  for (const auto& r : file.records) {
    PretrainWindow w;
    w.kind = r.at("kind").get<std::string>() == "filler" ? WindowKind::kFiller
                                                          : WindowKind::kOperations;
    w.tokens = r.at("tokens").get<TokenSequence>();
    windows.push_back(encode_window(model.space(), w, cfg_.corpus.history_limit));
  }
  TrainConfig tc = cfg_.pretrain;
  tc.seed = stage_seed("pretrain");
  const auto report = train_pretrain(model, windows, tc);
  write_model("model_pretrain.json", "pretrain", model);
  log(fmt::format("pretrain: {} windows, final loss {:.4f}", windows.size(),
                  report.epoch_loss.empty() ? 0.0 : report.epoch_loss.back()));
}

void Pipeline::finetune() {
  const Dataset full = histories();
  const auto instances = finetune_instances(full);
  ReferenceModel pretrained = read_model("model_pretrain.json", "pretrain");
  std::vector<EncodedInstance> data;
  for (const auto& inst : instances) data.push_back(encode_instance(pretrained.space(), inst));
  TrainConfig tc = cfg_.finetune;
  tc.seed = stage_seed("finetune");
  const auto report = train_finetune(pretrained, data, tc);
  write_model("model_finetune.json", "finetune", pretrained);

  // Same recipe without pre-training, kept for the comparison report.
  ReferenceModel scratch = fresh_model();
  train_finetune(scratch, data, tc);
  write_model("model_finetune_only.json", "finetune", scratch);
  log(fmt::format("finetune: {} instances, final loss {:.4f}", data.size(),
                  report.epoch_loss.empty() ? 0.0 : report.epoch_loss.back()));
}

void Pipeline::mine_pairs() {
  const Dataset full = histories();
  PreferenceConfig pc = cfg_.preference;
  pc.seed = stage_seed("mine-pairs");
  const Timestamp cut = split_time();
  const Timestamp from = cut - static_cast<Timestamp>(cfg_.dpo_window_days) * kMinutesPerDay;
  const auto train = build_dpo_dataset(training_histories(full), catalog_, pc, from, cut);
  const auto held = build_dpo_dataset(full, catalog_, pc, cut);
  std::vector<json> a, b;
  for (const auto& p : train) a.push_back(p.to_json());
  for (const auto& p : held) b.push_back(p.to_json());
  write_jsonl(path("pairs.jsonl"), header("mine-pairs"), a);
  write_jsonl(path("pairs_heldout.jsonl"), header("mine-pairs"), b);
  log(fmt::format("mine-pairs: {} training pairs, {} held-out pairs", a.size(), b.size()));
}

namespace {

std::vector<EncodedPair> encode_pairs(const std::vector<PreferencePair>& pairs,
                                      const FeatureSpace& space) {
  std::vector<EncodedPair> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.push_back(encode_pair(space, p));
  return out;
}

double pair_accuracy(const NextActionModel& m, const std::vector<EncodedPair>& pairs) {
  if (pairs.empty()) return 0;
  std::size_t ok = 0;
  for (const auto& e : pairs) {
    ok += action_logprob(m, e.ctx, e.positive) > action_logprob(m, e.ctx, e.negative);
  }
  return static_cast<double>(ok) / static_cast<double>(pairs.size());
}

}  // namespace

std::vector<PreferencePair> Pipeline::load_pairs(bool heldout) const {
  const auto file = heldout ? read_artifact("pairs_heldout.jsonl", "mine-pairs")
                            : read_artifact("pairs.jsonl", "mine-pairs");
  const Dataset full = histories();
  const Dataset source = heldout ? full : training_histories(full);
  const auto by_user = index_users(source);
  std::vector<PreferencePair> out;
  out.reserve(file.records.size());
  for (const auto& r : file.records) {
    PreferencePair p = PreferencePair::from_json(r);
    p.prompt = build_prompt(user_history(by_user, p.user_id), p.op_index, catalog_,
                            cfg_.corpus.history_limit);
    out.push_back(std::move(p));
  }
  return out;
}

DpoSummary Pipeline::dpo() {
  ReferenceModel ref = read_model("model_finetune.json", "finetune");
  const auto pairs = encode_pairs(load_pairs(false), ref.space());
  const auto held = encode_pairs(load_pairs(true), ref.space());
  DpoSummary s;
  s.pairs = pairs.size();
  s.heldout_pairs = held.size();
  s.heldout_accuracy_before = pair_accuracy(ref, held);
  ReferenceModel model = ref;
  TrainConfig tc = cfg_.dpo;
  tc.seed = stage_seed("dpo");
  const auto report = train_dpo(model, ref, pairs, tc);
  s.margin = report.epoch_margin;
  s.heldout_accuracy_after = pair_accuracy(model, held);
  write_model("model_dpo.json", "dpo", model);
  write_json(path("dpo_report.json"),
             {{"header", header("dpo").to_json()},
              {"pairs", s.pairs},
              {"heldout_pairs", s.heldout_pairs},
              {"margin", s.margin},
              {"heldout_accuracy_before", s.heldout_accuracy_before},
              {"heldout_accuracy_after", s.heldout_accuracy_after}});
  log(fmt::format("dpo: {} pairs, held-out preference accuracy {:.4f} -> {:.4f}", s.pairs,
                  s.heldout_accuracy_before, s.heldout_accuracy_after));
  return s;
}

std::vector<std::vector<Action>> Pipeline::predict(const NextActionModel& model,
                                                   const LabeledSplit& split,
                                                   DecodeStrategy strategy) const {
  std::vector<std::vector<Action>> out;
  out.reserve(split.instances.size());
  for (const auto& li : split.instances) {
    out.push_back(decode_recommendation(model, li.instance.prompt, strategy).plain_actions());
  }
  return out;
}

void Pipeline::recommend() {
  const ReferenceModel model = read_model("model_dpo.json", "dpo");
  const Dataset full = histories();
  const LabeledSplit split = test_split(full);
  std::vector<json> recs;
  for (const auto& li : split.instances) {
    Recommendation r = decode_recommendation(model, li.instance.prompt, cfg_.finetune.decode);
    r.user_id = li.instance.user_id;
    recs.push_back(r.to_json());
  }
  write_jsonl(path("recommendations.jsonl"), header("recommend"), recs);
  log(fmt::format("recommend: {} recommendations", recs.size()));
}

std::vector<Recommendation> Pipeline::read_recommendations() const {
  const auto file = read_artifact("recommendations.jsonl", "recommend");
  std::vector<Recommendation> out;
  for (const auto& r : file.records) out.push_back(Recommendation::from_json(r));
  return out;
}

std::vector<bool> Pipeline::acceptance(const std::vector<Recommendation>& recs,
                                       const LabeledSplit& split) const {
  if (recs.size() != split.instances.size()) {
    throw ArtifactMismatch("recommendations do not align with the test split");
  }
  std::map<std::string, HouseholdProfile> profiles;
  for (const auto& r : read_artifact("profiles.jsonl", "simulate").records) {
    HouseholdProfile p = HouseholdProfile::from_json(r);
    profiles.emplace(p.user_id, std::move(p));
  }
  std::vector<bool> out;
  for (std::size_t i = 0; i < recs.size(); ++i) {
    const Prompt& prompt = split.instances[i].instance.prompt;
    auto it = profiles.find(recs[i].user_id);
    if (it == profiles.end()) throw ArtifactMismatch("no profile for " + recs[i].user_id);
    out.push_back(simulate_acceptance(recs[i].plain_actions(), it->second, prompt.time,
                                      prompt.env, prompt.history, catalog_,
                                      cfg_.acceptance_conflict_minutes));
  }
  return out;
}

void Pipeline::gate() {
  const auto recs = read_recommendations();
  const Dataset full = histories();
  const LabeledSplit split = test_split(full);
  const auto accepted = acceptance(recs, split);
  std::vector<json> out;
  std::size_t exposed = 0;
  for (std::size_t i = 0; i < recs.size(); ++i) {
    const GateDecision d = cascade_gate(recs[i], cfg_.exposure);
    exposed += d.exposed;
    out.push_back({{"user_id", recs[i].user_id},
                   {"time", recs[i].time},
                   {"exposed", d.exposed},
                   {"reason", to_string(d.reason)},
                   {"action_index", d.action_index},
                   {"confidence", d.confidence},
                   {"fused", d.fused},
                   {"accepted", static_cast<bool>(accepted[i])}});
  }
  write_jsonl(path("decisions.jsonl"), header("gate"), out);
  log(fmt::format("gate: exposed {} of {} at tau {}", exposed, recs.size(), cfg_.exposure.tau));
}

std::vector<SweepRow> Pipeline::sweep() {
  const auto recs = read_recommendations();
  const Dataset full = histories();
  const LabeledSplit split = test_split(full);
  const auto accepted = acceptance(recs, split);
  const auto rows = threshold_sweep(recs, accepted, cfg_.exposure);
  write_text(path("sweep.csv"), sweep_to_csv(rows));
  log(fmt::format("sweep: {} thresholds over {} recommendations", rows.size(), recs.size()));
  return rows;
}

std::vector<VariantReport> Pipeline::evaluate() {
  const Dataset full = histories();
  const LabeledSplit split = test_split(full);
  std::vector<std::string> hashes = {
      read_artifact("split.jsonl", "build-corpus").header.config_hash,
      read_artifact("recommendations.jsonl", "recommend").header.config_hash};
  for (const char* f : {"model_finetune.json", "model_finetune_only.json"}) {
    hashes.push_back(
        ArtifactHeader::from_json(read_json_artifact(f, "finetune").at("header")).config_hash);
  }
  for (const auto& h : hashes) {
    if (h != hash_) {
      throw ArtifactMismatch(fmt::format(
          "evaluate: inputs carry config hash {} but the current config hashes to {}", h, hash_));
    }
  }
  const DecodeStrategy strategy = cfg_.finetune.decode;
  std::vector<VariantReport> reports;
  reports.push_back({"Base", opsrec::evaluate(predict(fresh_model(), split, strategy), split,
                                              catalog_)});
  reports.push_back({"FT", opsrec::evaluate(
                               predict(read_model("model_finetune_only.json", "finetune"),
                                       split, strategy),
                               split, catalog_)});
  reports.push_back({"PT+FT", opsrec::evaluate(
                                  predict(read_model("model_finetune.json", "finetune"), split,
                                          strategy),
                                  split, catalog_)});
  std::vector<std::vector<Action>> dpo_preds;
  for (const auto& r : read_recommendations()) dpo_preds.push_back(r.plain_actions());
  reports.push_back({"PT+FT+DPO", opsrec::evaluate(dpo_preds, split, catalog_)});
  write_text(path("report.csv"), variant_reports_to_csv(reports));
  write_text(path("report.txt"),
             variant_reports_to_text(
                 reports, fmt::format("Evaluation (seed {}, config {})", cfg_.seed, hash_)));
  log(fmt::format("evaluate: whole-set EM {:.4f} / {:.4f} / {:.4f} / {:.4f}",
                  reports[0].report.whole().em, reports[1].report.whole().em,
                  reports[2].report.whole().em, reports[3].report.whole().em));
  return reports;
}

std::vector<VariantReport> Pipeline::ablate() {
  const Dataset full = histories();
  const LabeledSplit split = test_split(full);
  const auto instances = finetune_instances(full);
  ReferenceModel text_first = read_model("model_pretrain.json", "pretrain");
  const ReferenceModel action_first = read_model("model_finetune.json", "finetune");
  std::vector<EncodedInstance> data;
  for (const auto& inst : instances) data.push_back(encode_instance(text_first.space(), inst));
  TrainConfig tc = cfg_.finetune;
  tc.objective = Objective::kTextFirst;
  tc.seed = stage_seed("finetune");
  train_finetune(text_first, data, tc);
  std::vector<VariantReport> reports;
  reports.push_back({"action_first",
                     opsrec::evaluate(predict(action_first, split, DecodeStrategy::kActionFirst),
                                      split, catalog_)});
  reports.push_back({"text_first",
                     opsrec::evaluate(predict(text_first, split, DecodeStrategy::kTextFirst),
                                      split, catalog_)});
  write_text(path("ablation.csv"), variant_reports_to_csv(reports));
  log(fmt::format("ablate: EM action-first {:.4f}, text-first {:.4f}",
                  reports[0].report.whole().em, reports[1].report.whole().em));
  return reports;
}

std::vector<VariantReport> Pipeline::all() {
  simulate();
  build_corpus();
  pretrain();
  finetune();
  mine_pairs();
  dpo();
  recommend();
  gate();
  auto reports = evaluate();
  sweep();
  ablate();
  return reports;
}

std::string variant_reports_to_csv(const std::vector<VariantReport>& reports) {
  std::string out = "variant,group,records,em_acc,lm_f1,rule\n";
  for (const auto& v : reports) {
    for (const auto& g : v.report.groups) {
      out += fmt::format("{},{},{},{:.6f},{:.6f},{:.6f}\n", v.variant, g.group, g.records, g.em,
                         g.lm_f1, g.rule);
    }
  }
  return out;
}

std::string variant_reports_to_text(const std::vector<VariantReport>& reports,
                                    const std::string& title) {
  std::string out = title + "\n\n";
  if (reports.empty()) return out;
  // One row per variant and metric, one column per group.
  out += fmt::format("{:<12}{:<8}", "Method", "Metric");
  for (const auto& g : reports.front().report.groups) out += fmt::format("{:>10}", g.group);
  out += "\n";
  out += fmt::format("{:<12}{:<8}", "", "n");
  for (const auto& g : reports.front().report.groups) out += fmt::format("{:>10}", g.records);
  out += "\n";
  for (const auto& v : reports) {
    const std::pair<const char*, double GroupMetrics::*> metrics[] = {
        {"EM", &GroupMetrics::em}, {"LM-F1", &GroupMetrics::lm_f1}, {"Rule", &GroupMetrics::rule}};
    for (const auto& [name, field] : metrics) {
      out += fmt::format("{:<12}{:<8}", name == std::string("EM") ? v.variant : "", name);
      for (const auto& g : v.report.groups) out += fmt::format("{:>10.4f}", g.*field);
      out += "\n";
    }
  }
  return out;
}

}  // namespace opsrec
