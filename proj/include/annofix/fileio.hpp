// Copyright 2026 The annofix Authors
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

#include <filesystem>
#include <string>
#include <string_view>

namespace annofix {

/// Whole file as bytes; throws std::runtime_error naming the path on failure.
std::string read_file(const std::filesystem::path& path);

/// Plain write, creating parent directories.
void write_file(const std::filesystem::path& path, std::string_view bytes);

/// Writes to a sibling temporary and renames it over `path`, so readers see
/// either the old or the new content.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);

}  // namespace annofix
