#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>

namespace tonepipe {

// Writes through a temporary file in the target directory and renames on
// success, so a failed run never leaves a partial artifact at `path`.
void atomic_write_file(const std::filesystem::path& path,
                       const std::function<void(std::ostream&)>& writer);

std::string read_file(const std::filesystem::path& path);

}  // namespace tonepipe
