// Copyright 2026 The rescue-mfbo Authors. All Rights Reserved.
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
// =============================================================================

#ifndef RESCUE_LOG_HPP
#define RESCUE_LOG_HPP

#include <string_view>

namespace rescue::log {

enum class Level { kDebug = 0, kInfo = 1, kWarn = 2, kSilent = 3 };

void set_level(Level level);
Level level();

void debug(std::string_view msg);
void info(std::string_view msg);
void warn(std::string_view msg);

/// Number of warnings emitted since process start (used by tests).
long warning_count();

}  // namespace rescue::log

#endif  // RESCUE_LOG_HPP
