/* Copyright 2026 The Freecat Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include <string>

#include "freecat/error.hpp"
#include "freecat/model.hpp"
#include "json.hpp"

namespace freecat::model {

using nlohmann::json;

namespace {

json section_json(const Section& s) {
  json out = json::object();
  for (const auto& [owner, blocks] : s)
    for (const auto& [name, b] : blocks)
      out[owner][name] = {{"rows", b.rows}, {"cols", b.cols}, {"values", b.values}};
  return out;
}

Section section_from(const json& j, const char* which) {
  Section s;
  if (!j.is_object()) throw SpecError(std::string("checkpoint section '") + which + "' must be an object");
  for (const auto& [owner, blocks] : j.items()) {
    for (const auto& [name, b] : blocks.items()) {
      Block block;
      try {
        block.rows = b.at("rows").get<std::size_t>();
        block.cols = b.at("cols").get<std::size_t>();
        block.values = b.at("values").get<std::vector<double>>();
      } catch (const json::exception& e) {
        throw SpecError("bad checkpoint block " + owner + "." + name + ": " + e.what());
      }
      if (block.values.size() != block.rows * block.cols)
        throw SpecError("checkpoint block " + owner + "." + name + " has inconsistent shape");
      s[owner][name] = std::move(block);
    }
  }
  return s;
}

std::string hex64(std::uint64_t v) {
  char buf[19];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

std::string write_checkpoint(const Checkpoint& c) {
  json root = {{"format", "freecat-checkpoint-1"},
               {"spec_hash", hex64(c.spec_hash)},
               {"seed", c.seed},
               {"steps", c.steps},
               {"baseline", c.baseline},
               {"baseline_ready", c.baseline_ready},
               {"theta", section_json(c.params.theta)},
               {"phi", {{"dagger", section_json(c.params.dagger)}, {"hyper", section_json(c.params.hyper)}}}};
  return root.dump(1) + "\n";
}

Checkpoint read_checkpoint(std::string_view text) {
  json root;
  try {
    root = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw SpecError(std::string("checkpoint is not valid JSON: ") + e.what());
  }
  Checkpoint c;
  try {
    if (root.at("format") != "freecat-checkpoint-1") throw SpecError("unknown checkpoint format");
    c.spec_hash = std::stoull(root.at("spec_hash").get<std::string>(), nullptr, 16);
    c.seed = root.at("seed").get<std::uint64_t>();
    c.steps = root.at("steps").get<std::size_t>();
    c.baseline = root.at("baseline").get<double>();
    c.baseline_ready = root.at("baseline_ready").get<bool>();
    c.params.theta = section_from(root.at("theta"), "theta");
    c.params.dagger = section_from(root.at("phi").at("dagger"), "dagger");
    c.params.hyper = section_from(root.at("phi").at("hyper"), "hyper");
  } catch (const json::exception& e) {
    throw SpecError(std::string("malformed checkpoint: ") + e.what());
  }
  return c;
}

}  // namespace freecat::model
