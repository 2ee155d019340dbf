#include "tonepipe/config.hpp"

#include <fstream>
#include <stdexcept>

namespace tonepipe {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r'))
        s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

}  // namespace

ConfigMap parse_config(std::istream& in) {
    ConfigMap cfg;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string_view v = trim(line);
        if (v.empty() || v.front() == '#') continue;
        const auto eq = v.find('=');
        if (eq == std::string_view::npos)
            throw std::runtime_error("config line " + std::to_string(line_no) +
                                     ": expected key=value");
        const std::string key{trim(v.substr(0, eq))};
        if (key.empty())
            throw std::runtime_error("config line " + std::to_string(line_no) + ": empty key");
        cfg.values[key] = std::string{trim(v.substr(eq + 1))};
    }
    return cfg;
}

ConfigMap load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open config file: " + path.string());
    return parse_config(in);
}

}  // namespace tonepipe
