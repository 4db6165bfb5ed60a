#pragma once

#include <map>
#include <string>
#include <string_view>

namespace mathgen {

using TemplateVars = std::map<std::string, std::string, std::less<>>;

// Replaces `{name}` for every name present in `vars`; other braces are left as-is.
std::string render_template(std::string_view text, const TemplateVars& vars);

/// Named prompt templates. Starts from the copies compiled into the library;
/// a directory override replaces any template whose `<name>.txt` it contains.
class TemplateSet {
public:
    static TemplateSet defaults();
    static TemplateSet with_overrides(const std::string& directory);

    // Throws ConfigError for an unknown name.
    const std::string& get(std::string_view name) const;
    bool contains(std::string_view name) const { return templates_.find(name) != templates_.end(); }
    void set(std::string name, std::string text) { templates_[std::move(name)] = std::move(text); }

    std::string render(std::string_view name, const TemplateVars& vars) const {
        return render_template(get(name), vars);
    }

private:
    std::map<std::string, std::string, std::less<>> templates_;
};

}  // namespace mathgen
