#pragma once

// Strict field access for model payloads. Every failure is a SchemaError so
// the caller's repair round-trip can quote it back to the model.

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "podforge/errors.hpp"

namespace podforge::payload {

using Json = nlohmann::ordered_json;

inline const Json& field(const Json& obj, const char* key, const std::string& where) {
    if (!obj.is_object()) throw SchemaError(where + ": expected a JSON object");
    const auto it = obj.find(key);
    if (it == obj.end()) throw SchemaError(where + ": missing field \"" + key + "\"");
    return *it;
}

inline std::string text(const Json& obj, const char* key, const std::string& where) {
    const Json& v = field(obj, key, where);
    if (!v.is_string()) throw SchemaError(where + ": field \"" + key + "\" must be a string");
    auto s = v.get<std::string>();
    if (s.find_first_not_of(" \t\r\n") == std::string::npos) {
        throw SchemaError(where + ": field \"" + key + "\" is empty");
    }
    return s;
}

inline std::string optional_text(const Json& obj, const char* key) {
    const auto it = obj.find(key);
    if (it == obj.end() || !it->is_string()) return {};
    return it->get<std::string>();
}

inline const Json& array(const Json& obj, const char* key, const std::string& where) {
    const Json& v = field(obj, key, where);
    if (!v.is_array()) throw SchemaError(where + ": field \"" + key + "\" must be an array");
    return v;
}

inline std::vector<std::string> text_array(const Json& obj, const char* key,
                                           const std::string& where) {
    std::vector<std::string> out;
    const Json& arr = array(obj, key, where);
    for (std::size_t i = 0; i < arr.size(); ++i) {
        const std::string at = where + "." + key + "[" + std::to_string(i) + "]";
        if (!arr[i].is_string()) throw SchemaError(at + " must be a string");
        auto s = arr[i].get<std::string>();
        if (s.find_first_not_of(" \t\r\n") == std::string::npos) throw SchemaError(at + " is empty");
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace podforge::payload
