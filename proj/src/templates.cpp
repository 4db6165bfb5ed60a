#include "mathgen/templates.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "mathgen/error.hpp"

namespace mathgen {

namespace detail {
const std::map<std::string, std::string>& embedded_templates();
}

std::string render_template(std::string_view text, const TemplateVars& vars) {
    std::string out;
    out.reserve(text.size());
    std::size_t i = 0;
    while (i < text.size()) {
        if (text[i] == '{') {
            const auto close = text.find('}', i + 1);
            if (close != std::string_view::npos) {
                auto it = vars.find(text.substr(i + 1, close - i - 1));
                if (it != vars.end()) {
                    out += it->second;
                    i = close + 1;
                    continue;
                }
            }
        }
        out.push_back(text[i++]);
    }
    return out;
}

TemplateSet TemplateSet::defaults() {
    TemplateSet set;
    for (const auto& [name, text] : detail::embedded_templates()) set.templates_[name] = text;
    return set;
}

TemplateSet TemplateSet::with_overrides(const std::string& directory) {
    namespace fs = std::filesystem;
    auto set = defaults();
    if (!fs::is_directory(directory)) throw ConfigError("template directory not found: " + directory);
    for (const auto& entry : fs::directory_iterator(directory)) {
        if (!entry.is_regular_file() || entry.path().extension() != ".txt") continue;
        std::ifstream in(entry.path(), std::ios::binary);
        std::ostringstream buf;
        buf << in.rdbuf();
        set.templates_[entry.path().stem().string()] = buf.str();
    }
    return set;
}

const std::string& TemplateSet::get(std::string_view name) const {
    auto it = templates_.find(name);
    if (it == templates_.end()) throw ConfigError("unknown prompt template '" + std::string(name) + "'");
    return it->second;
}

}  // namespace mathgen
