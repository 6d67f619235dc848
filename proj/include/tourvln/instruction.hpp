// Copyright 2026 The tourvln Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Instruction generation: fill-in-the-blank templates, node captions and
// action words placed at the verb blank nearest each filled noun blank.

#include <cmath>
#include <cstdint>
#include <istream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tourvln/annotation.hpp"
#include "tourvln/errors.hpp"
#include "tourvln/format.hpp"
#include "tourvln/rng.hpp"
#include "tourvln/trajectory.hpp"

namespace tourvln {

inline constexpr std::string_view kNounPlaceholder = "{NP}";
inline constexpr std::string_view kVerbPlaceholder = "{VP}";

enum class BlankKind { noun, verb };

struct Blank {
  std::size_t position = 0;  // byte offset of the placeholder in the template text
  BlankKind kind = BlankKind::noun;
};

struct InstructionTemplate {
  std::string template_id;
  std::string text;
  std::vector<Blank> blanks;  // textual order
  int noun_count = 0;
  int verb_count = 0;
};

struct TemplateReject {
  std::size_t line = 0;
  std::string text;
  std::string reason;
};

struct TemplateSet {
  std::vector<InstructionTemplate> templates;
  std::vector<TemplateReject> rejected;
};

/// Locates {NP}/{VP} placeholders. No validation of the noun/verb balance.
inline InstructionTemplate scan_template(std::string id, std::string text) {
  InstructionTemplate t;
  t.template_id = std::move(id);
  t.text = std::move(text);
  for (std::size_t pos = t.text.find('{'); pos != std::string::npos; pos = t.text.find('{', pos + 1)) {
    std::string_view rest(t.text.data() + pos, t.text.size() - pos);
    if (rest.starts_with(kNounPlaceholder)) {
      t.blanks.push_back({pos, BlankKind::noun});
      ++t.noun_count;
    } else if (rest.starts_with(kVerbPlaceholder)) {
      t.blanks.push_back({pos, BlankKind::verb});
      ++t.verb_count;
    }
  }
  return t;
}

/// One template per line. Lines that break verb_count == noun_count - 1 are
/// collected in `rejected`; only a file without any template line is an error.
inline TemplateSet parse_templates(std::istream& in) {
  TemplateSet set;
  std::string line;
  std::size_t lineno = 0;
  std::size_t nonblank = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    ++nonblank;
    auto t = scan_template("t" + std::to_string(lineno), line);
    if (t.noun_count < 1) {
      set.rejected.push_back({lineno, line, "no noun blank"});
    } else if (t.verb_count != t.noun_count - 1) {
      set.rejected.push_back({lineno, line,
                              "verb blanks " + std::to_string(t.verb_count) + " != noun blanks - 1 (" +
                                  std::to_string(t.noun_count - 1) + ")"});
    } else {
      set.templates.push_back(std::move(t));
    }
  }
  if (nonblank == 0) throw InputError("template file is empty");
  return set;
}

inline TemplateSet load_templates(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open templates " + path.string());
  return parse_templates(in);
}

enum class CaptionForm { room_with_object, room_only, object_only };

inline std::string_view to_string(CaptionForm f) {
  switch (f) {
    case CaptionForm::room_with_object: return "room_with_object";
    case CaptionForm::room_only: return "room_only";
    case CaptionForm::object_only: return "object_only";
  }
  return "room_only";
}

struct NodeCaption {
  std::string room;
  std::optional<std::string> object;
  CaptionForm form = CaptionForm::room_only;
  std::string text;
};

inline std::string render_caption(CaptionForm form, const std::string& room, const std::optional<std::string>& object) {
  switch (form) {
    case CaptionForm::room_with_object: return room + " with " + object.value();
    case CaptionForm::room_only: return room;
    case CaptionForm::object_only: return object.value();
  }
  return room;
}

/// Highest-scoring object of the merged view; ties go to the smaller label.
inline std::optional<std::string> top_object(const MergedView& view) {
  const DetectedObject* best = nullptr;
  for (const auto& o : view.objects) {
    if (!best || o.score > best->score || (o.score == best->score && o.label < best->label)) best = &o;
  }
  if (!best) return std::nullopt;
  return best->label;
}

inline NodeCaption caption_node(const TrajectoryNode& node, const RoomTypeRegistry& registry, Rng& rng) {
  if (node.kind != NodeKind::room) throw DomainError("caption_node: transition nodes are not captioned");
  NodeCaption c;
  c.room = registry.label(node.view.room_type);
  c.object = top_object(node.view);
  if (!c.object) {
    c.form = CaptionForm::room_only;
  } else {
    static constexpr CaptionForm kForms[] = {CaptionForm::room_with_object, CaptionForm::room_only,
                                             CaptionForm::object_only};
    c.form = kForms[rng.uniform_index(3)];
  }
  c.text = render_caption(c.form, c.room, c.object);
  return c;
}

inline std::string_view action_text(Action a) {
  switch (a) {
    case Action::forward: return "go forward";
    case Action::left: return "turn left";
    case Action::right: return "turn right";
  }
  return "go forward";
}

inline std::optional<Action> action_from_text(std::string_view text) {
  if (text == "go forward") return Action::forward;
  if (text == "turn left") return Action::left;
  if (text == "turn right") return Action::right;
  return std::nullopt;
}

class UnactionablePair : public GenerationError {
 public:
  using GenerationError::GenerationError;
};

inline constexpr double kTurnThresholdDeg = 30.0;

/// Wraps an angle difference into (-180, 180].
inline double wrap_degrees(double delta) {
  delta = std::fmod(delta, 360.0);
  if (delta <= -180.0) delta += 360.0;
  if (delta > 180.0) delta -= 360.0;
  return delta;
}

/// Action from node a to node b: the annotated action if present, otherwise the
/// yaw change thresholded at +-30 degrees.
inline Action infer_action(const TrajectoryNode& a, const TrajectoryNode& b) {
  if (a.action_to_next) return *a.action_to_next;
  if (a.yaw_deg && b.yaw_deg) {
    double delta = wrap_degrees(*b.yaw_deg - *a.yaw_deg);
    if (delta < -kTurnThresholdDeg) return Action::left;
    if (delta > kTurnThresholdDeg) return Action::right;
    return Action::forward;
  }
  throw UnactionablePair("no action label and no yaw on keyframe " + std::to_string(a.view.keyframe.frame_index) +
                         " -> " + std::to_string(b.view.keyframe.frame_index));
}

/// For each noun blank but the last, the index (into tpl.blanks) of the verb
/// blank that receives the action leaving that node. Distances are measured
/// between placeholder offsets in the original text.
inline std::vector<std::size_t> assign_verb_blanks(const InstructionTemplate& tpl) {
  std::vector<std::size_t> nouns, verbs;
  for (std::size_t i = 0; i < tpl.blanks.size(); ++i) {
    (tpl.blanks[i].kind == BlankKind::noun ? nouns : verbs).push_back(i);
  }
  std::vector<bool> used(verbs.size(), false);
  std::vector<std::size_t> out;
  for (std::size_t n = 0; n + 1 < nouns.size(); ++n) {
    const auto np = static_cast<std::int64_t>(tpl.blanks[nouns[n]].position);
    std::optional<std::size_t> best;
    std::int64_t best_d = 0;
    for (std::size_t v = 0; v < verbs.size(); ++v) {
      if (used[v]) continue;
      std::int64_t d = std::abs(static_cast<std::int64_t>(tpl.blanks[verbs[v]].position) - np);
      if (!best || d < best_d) {
        best = v;
        best_d = d;
      }
    }
    if (!best) throw GenerationError("template " + tpl.template_id + " has too few verb blanks");
    used[*best] = true;
    out.push_back(verbs[*best]);
  }
  return out;
}

inline std::string fill_template(const InstructionTemplate& tpl, std::span<const std::string> captions,
                                 std::span<const std::string> actions) {
  if (static_cast<int>(captions.size()) != tpl.noun_count) {
    throw GenerationError("template " + tpl.template_id + " has " + std::to_string(tpl.noun_count) +
                          " noun blanks, got " + std::to_string(captions.size()) + " captions");
  }
  if (static_cast<int>(actions.size()) != tpl.verb_count || tpl.verb_count != tpl.noun_count - 1) {
    throw GenerationError("template " + tpl.template_id + " has " + std::to_string(tpl.verb_count) +
                          " verb blanks, got " + std::to_string(actions.size()) + " actions");
  }
  std::vector<const std::string*> fill(tpl.blanks.size(), nullptr);
  std::size_t noun = 0;
  for (std::size_t i = 0; i < tpl.blanks.size(); ++i) {
    if (tpl.blanks[i].kind == BlankKind::noun) fill[i] = &captions[noun++];
  }
  auto verb_slots = assign_verb_blanks(tpl);
  for (std::size_t a = 0; a < verb_slots.size(); ++a) fill[verb_slots[a]] = &actions[a];

  std::string out;
  std::size_t cursor = 0;
  for (std::size_t i = 0; i < tpl.blanks.size(); ++i) {
    out.append(tpl.text, cursor, tpl.blanks[i].position - cursor);
    out += *fill[i];
    cursor = tpl.blanks[i].position + kNounPlaceholder.size();  // both placeholders are 4 bytes
  }
  out.append(tpl.text, cursor, std::string::npos);
  return out;
}

struct PathInstructionPair {
  std::string pair_id;
  std::string trajectory_id;
  std::string template_id;
  std::string instruction;
  std::vector<NodeCaption> captions;  // one per room node
  std::vector<Action> actions;        // one per consecutive room-node pair
};

/// Captions every room node, labels the moves between consecutive room nodes
/// and fills a uniformly drawn template with R noun blanks.
inline PathInstructionPair generate_pair(const Trajectory& traj, std::span<const InstructionTemplate> templates,
                                         const RoomTypeRegistry& registry, Rng& rng) {
  const int r = traj.room_node_count;
  std::vector<const InstructionTemplate*> matching;
  for (const auto& t : templates) {
    if (t.noun_count == r && t.verb_count == r - 1) matching.push_back(&t);
  }
  if (matching.empty()) throw GenerationError("no template with R=" + std::to_string(r) + " noun blanks");
  const auto& tpl = *matching[rng.uniform_index(matching.size())];

  std::vector<const TrajectoryNode*> rooms;
  for (const auto& n : traj.nodes) {
    if (n.kind == NodeKind::room) rooms.push_back(&n);
  }
  if (static_cast<int>(rooms.size()) != r) throw DomainError("trajectory room count differs from R");

  PathInstructionPair pair;
  pair.trajectory_id = traj.trajectory_id;
  pair.pair_id = traj.trajectory_id + "-p0";
  pair.template_id = tpl.template_id;
  std::vector<std::string> caption_text, action_words;
  for (const auto* n : rooms) {
    pair.captions.push_back(caption_node(*n, registry, rng));
    caption_text.push_back(pair.captions.back().text);
  }
  for (std::size_t i = 0; i + 1 < rooms.size(); ++i) {
    pair.actions.push_back(infer_action(*rooms[i], *rooms[i + 1]));
    action_words.emplace_back(action_text(pair.actions.back()));
  }
  pair.instruction = fill_template(tpl, caption_text, action_words);
  return pair;
}

inline Json pair_to_json(const PathInstructionPair& p) {
  Json j;
  j["pair_id"] = p.pair_id;
  j["trajectory_id"] = p.trajectory_id;
  j["template_id"] = p.template_id;
  j["instruction"] = p.instruction;
  Json caps = Json::array();
  for (const auto& c : p.captions) {
    Json jc;
    jc["room"] = c.room;
    if (c.object) jc["object"] = *c.object;
    jc["form"] = std::string(to_string(c.form));
    jc["text"] = c.text;
    caps.push_back(std::move(jc));
  }
  j["captions"] = std::move(caps);
  Json acts = Json::array();
  for (auto a : p.actions) acts.push_back(std::string(action_text(a)));
  j["actions"] = std::move(acts);
  return j;
}

inline PathInstructionPair pair_from_json(const Json& j) {
  try {
    PathInstructionPair p;
    p.pair_id = j.at("pair_id").get<std::string>();
    p.trajectory_id = j.at("trajectory_id").get<std::string>();
    p.template_id = j.at("template_id").get<std::string>();
    p.instruction = j.at("instruction").get<std::string>();
    for (const auto& jc : j.at("captions")) {
      NodeCaption c;
      c.room = jc.at("room").get<std::string>();
      if (jc.contains("object")) c.object = jc.at("object").get<std::string>();
      auto form = jc.at("form").get<std::string>();
      c.form = form == "room_with_object" ? CaptionForm::room_with_object
               : form == "object_only"    ? CaptionForm::object_only
                                          : CaptionForm::room_only;
      c.text = jc.at("text").get<std::string>();
      p.captions.push_back(std::move(c));
    }
    for (const auto& ja : j.at("actions")) {
      auto a = action_from_text(ja.get<std::string>());
      if (!a) throw InputError("unknown action word " + ja.get<std::string>());
      p.actions.push_back(*a);
    }
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed pair record: ") + e.what());
  }
}

}  // namespace tourvln
