#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>

namespace tonepipe {

// Flat "section.key=value" settings ("train.epochs=3"). Blank lines and
// '#' comments are skipped; a repeated key keeps the last assignment.
struct ConfigMap {
    std::map<std::string, std::string> values;

    std::optional<std::string> get(std::string_view key) const {
        auto it = values.find(std::string(key));
        if (it == values.end()) return std::nullopt;
        return it->second;
    }
};

ConfigMap parse_config(std::istream& in);
ConfigMap load_config(const std::filesystem::path& path);

}  // namespace tonepipe
