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

#include "opsrec/model.h"
#include "opsrec/recommendation.h"
#include "opsrec/train.h"

namespace opsrec {

/// Greedy decoding over the legal support.
///
/// Action-first emits up to max_actions quadruples (stopping at the stop
/// class) and realizes the description from the first action's template.
/// Text-first decodes the description template, room and device type first
/// and then the actions conditioned on it.
Recommendation decode_recommendation(const NextActionModel& model, const Prompt& prompt,
                                     DecodeStrategy strategy);
Recommendation decode_recommendation(const NextActionModel& model, const PromptContext& ctx,
                                     DecodeStrategy strategy);

}  // namespace opsrec
