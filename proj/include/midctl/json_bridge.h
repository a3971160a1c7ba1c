// Copyright 2026 The midctl Authors
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


#ifndef MIDCTL_JSON_BRIDGE_H_
#define MIDCTL_JSON_BRIDGE_H_

#include <string>
#include <string_view>

#include "json.hpp"
#include "midctl/proto.h"

namespace midctl {

// JSON form of the wire messages for the browser UI. Every object carries a
// "type" key naming the message; reals print as the shortest decimal that
// reads back to the same double. Non-finite reals cannot be represented and
// throw ProtocolError.
nlohmann::json ToJson(const Message& msg);
// strict: unknown keys, missing fields and bad enum names throw ProtocolError
// with the JSON path of the offending field
Message MessageFromJson(const nlohmann::json& j);

std::string EncodeJson(const Message& msg);
Message DecodeJson(std::string_view text);

nlohmann::json ToJson(const Command& cmd);
Command CommandFromJson(const nlohmann::json& j);
nlohmann::json ToJson(const WorldState& world);
nlohmann::json ToJson(const Task& task);

// {"type": "HudState", "parts": [[...], [...]], "guides": [...]}
nlohmann::json ToJson(const HudState& hud);
HudState HudFromJson(const nlohmann::json& j);

}  // namespace midctl

#endif  // MIDCTL_JSON_BRIDGE_H_
