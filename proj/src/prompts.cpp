#include "podforge/prompts.hpp"

#include <fstream>
#include <regex>
#include <sstream>

#include "podforge/errors.hpp"

namespace podforge {

// Generated at build time from prompts/*.txt.
namespace embedded {
struct PromptFile {
    const char* filename;
    const char* text;
};
extern const PromptFile kPromptFiles[];
extern const std::size_t kPromptFileCount;
}  // namespace embedded

namespace {

std::set<std::string> scan_placeholders(const std::string& text, const std::string& name) {
    std::set<std::string> found;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (c == '{') {
            if (i + 1 < text.size() && text[i + 1] == '{') {
                ++i;
                continue;
            }
            const auto close = text.find('}', i);
            if (close == std::string::npos) {
                throw FormatError("template " + name + ": unterminated placeholder");
            }
            std::string key = text.substr(i + 1, close - i - 1);
            if (key.empty() || key.find_first_not_of("abcdefghijklmnopqrstuvwxyz_0123456789") !=
                                   std::string::npos) {
                throw FormatError("template " + name + ": bad placeholder {" + key + "}");
            }
            found.insert(std::move(key));
            i = close;
        } else if (c == '}') {
            if (i + 1 < text.size() && text[i + 1] == '}') {
                ++i;
                continue;
            }
            throw FormatError("template " + name + ": stray '}'");
        }
    }
    return found;
}

bool parse_filename(const std::string& filename, std::string& name, int& version) {
    static const std::regex pattern(R"(^([a-z_]+)\.v([0-9]+)\.txt$)");
    std::smatch m;
    if (!std::regex_match(filename, m, pattern)) return false;
    name = m[1];
    version = std::stoi(m[2]);
    return true;
}

}  // namespace

PromptTemplate::PromptTemplate(std::string name, int version, std::string text)
    : name_(std::move(name)), version_(version), text_(std::move(text)) {
    placeholders_ = scan_placeholders(text_, name_);
}

std::string PromptTemplate::id() const { return name_ + ".v" + std::to_string(version_); }

std::string PromptTemplate::render(const std::map<std::string, std::string>& values) const {
    std::string out;
    out.reserve(text_.size() * 2);
    for (std::size_t i = 0; i < text_.size(); ++i) {
        const char c = text_[i];
        if (c == '{' && i + 1 < text_.size() && text_[i + 1] == '{') {
            out += '{';
            ++i;
        } else if (c == '}' && i + 1 < text_.size() && text_[i + 1] == '}') {
            out += '}';
            ++i;
        } else if (c == '{') {
            const auto close = text_.find('}', i);
            const std::string key = text_.substr(i + 1, close - i - 1);
            const auto it = values.find(key);
            if (it == values.end()) {
                throw PreconditionError("template " + id() + ": no value for {" + key + "}");
            }
            out += it->second;
            i = close;
        } else {
            out += c;
        }
    }
    return out;
}

const std::map<std::string, std::set<std::string>>& required_placeholders() {
    static const std::map<std::string, std::set<std::string>> required = {
        {"host_profiles", {"topic", "n_guests"}},
        {"host_outline", {"topic", "profiles", "n_questions"}},
        {"guest_response", {"topic", "profile", "outline"}},
        {"guest_response_no_outline", {"topic", "profile"}},
        {"writer_script", {"topic", "n_guests", "profiles", "outline", "responses"}},
        {"direct_baseline", {"topic", "n_guests"}},
        {"single_agent", {"topic", "n_guests", "n_questions_word"}},
        {"voice_match", {"voices", "profiles", "host_name", "host_descriptor", "outline"}},
        {"audio_script", {"script", "line_count"}},
        {"judge", {"dialogue_a", "dialogue_b"}},
        {"repair", {"error"}},
    };
    return required;
}

void PromptLibrary::add(PromptTemplate tmpl) {
    const auto req = required_placeholders().find(tmpl.name());
    if (req != required_placeholders().end()) {
        for (const auto& key : req->second) {
            if (!tmpl.placeholders().contains(key)) {
                throw FormatError("template " + tmpl.id() + " lacks required {" + key + "}");
            }
        }
    }
    const auto it = templates_.find(tmpl.name());
    if (it != templates_.end()) {
        if (it->second.version() > tmpl.version()) return;
        it->second = std::move(tmpl);
    } else {
        templates_.emplace(tmpl.name(), std::move(tmpl));
    }
}

const PromptTemplate& PromptLibrary::get(const std::string& name) const {
    const auto it = templates_.find(name);
    if (it == templates_.end()) throw PreconditionError("no prompt template named " + name);
    return it->second;
}

bool PromptLibrary::contains(const std::string& name) const { return templates_.contains(name); }

std::vector<std::string> PromptLibrary::ids() const {
    std::vector<std::string> out;
    for (const auto& [_, t] : templates_) out.push_back(t.id());
    return out;
}

PromptLibrary PromptLibrary::builtin() {
    static const PromptLibrary lib = [] {
        PromptLibrary l;
        for (std::size_t i = 0; i < embedded::kPromptFileCount; ++i) {
            std::string name;
            int version = 0;
            if (parse_filename(embedded::kPromptFiles[i].filename, name, version)) {
                l.add(PromptTemplate(name, version, embedded::kPromptFiles[i].text));
            }
        }
        return l;
    }();
    return lib;
}

PromptLibrary PromptLibrary::with_overrides(const std::filesystem::path& dir) {
    PromptLibrary lib = builtin();
    if (!std::filesystem::is_directory(dir)) {
        throw IOError("prompt directory not found: " + dir.string());
    }
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        std::string name;
        int version = 0;
        if (!entry.is_regular_file() ||
            !parse_filename(entry.path().filename().string(), name, version)) {
            continue;
        }
        std::ifstream in(entry.path(), std::ios::binary);
        std::ostringstream ss;
        ss << in.rdbuf();
        lib.add(PromptTemplate(name, version, ss.str()));
    }
    return lib;
}

}  // namespace podforge
