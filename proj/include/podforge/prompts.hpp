#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace podforge {

// Plain-text template with `{placeholder}` slots. `{{` and `}}` are literal
// braces.
class PromptTemplate {
public:
    PromptTemplate(std::string name, int version, std::string text);

    const std::string& name() const noexcept { return name_; }
    int version() const noexcept { return version_; }
    const std::string& text() const noexcept { return text_; }
    const std::set<std::string>& placeholders() const noexcept { return placeholders_; }

    /// "name.vN"
    std::string id() const;

    /// Throws PreconditionError if any placeholder lacks a value. Extra
    /// values are ignored.
    std::string render(const std::map<std::string, std::string>& values) const;

private:
    std::string name_;
    int version_;
    std::string text_;
    std::set<std::string> placeholders_;
};

// Named set of templates; the newest version of each name wins.
class PromptLibrary {
public:
    /// Templates compiled into the library from prompts/.
    static PromptLibrary builtin();

    /// Builtins overridden by every `<name>.v<N>.txt` file found in `dir`.
    static PromptLibrary with_overrides(const std::filesystem::path& dir);

    void add(PromptTemplate tmpl);
    const PromptTemplate& get(const std::string& name) const;
    bool contains(const std::string& name) const;
    std::vector<std::string> ids() const;

private:
    std::map<std::string, PromptTemplate> templates_;
};

// Placeholders each builtin template must declare.
const std::map<std::string, std::set<std::string>>& required_placeholders();

}  // namespace podforge
