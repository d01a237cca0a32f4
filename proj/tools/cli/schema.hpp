#pragma once

#include <cmath>
#include <map>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "fraclap_schemas.hpp"

namespace fraclap::cli {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

/// Config or parameter block that does not match its schema.
class SchemaError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline const json& schema(const std::string& name) {
    static const std::map<std::string, json> parsed = [] {
        std::map<std::string, json> m;
        for (const auto& [k, v] : embedded_schemas()) m.emplace(k, json::parse(v));
        return m;
    }();
    const auto it = parsed.find(name);
    if (it == parsed.end()) throw std::logic_error("unknown schema " + name);
    return it->second;
}

namespace detail {

inline bool type_matches(const json& v, const std::string& t) {
    if (t == "object") return v.is_object();
    if (t == "array") return v.is_array();
    if (t == "string") return v.is_string();
    if (t == "boolean") return v.is_boolean();
    if (t == "null") return v.is_null();
    if (t == "integer") return v.is_number_integer();
    if (t == "number") return v.is_number();
    return false;
}

// JSON-Schema subset: type, enum, anyOf, properties, required, additionalProperties,
// items, minItems, maxItems, minimum, maximum, exclusiveMinimum.
inline void validate(const json& v, const json& s, const std::string& path) {
    if (s.contains("type")) {
        bool ok = false;
        if (s["type"].is_array()) {
            for (const auto& t : s["type"]) ok = ok || type_matches(v, t.get<std::string>());
        } else ok = type_matches(v, s["type"].get<std::string>());
        if (!ok) throw SchemaError(path + ": expected type " + s["type"].dump());
    }
    if (s.contains("enum")) {
        bool ok = false;
        for (const auto& e : s["enum"]) ok = ok || e == v;
        if (!ok) throw SchemaError(path + ": value " + v.dump() + " not in " + s["enum"].dump());
    }
    if (s.contains("anyOf")) {
        bool ok = false;
        for (const auto& sub : s["anyOf"]) {
            try {
                validate(v, sub, path);
                ok = true;
                break;
            } catch (const SchemaError&) {
            }
        }
        if (!ok) throw SchemaError(path + ": matches none of the allowed forms");
    }
    if (v.is_number()) {
        const double x = v.get<double>();
        if (!std::isfinite(x)) throw SchemaError(path + ": non-finite number");
        if (s.contains("minimum") && x < s["minimum"].get<double>()) throw SchemaError(path + ": below minimum " + s["minimum"].dump());
        if (s.contains("maximum") && x > s["maximum"].get<double>()) throw SchemaError(path + ": above maximum " + s["maximum"].dump());
        if (s.contains("exclusiveMinimum") && x <= s["exclusiveMinimum"].get<double>())
            throw SchemaError(path + ": must exceed " + s["exclusiveMinimum"].dump());
    }
    if (v.is_array()) {
        if (s.contains("minItems") && v.size() < s["minItems"].get<std::size_t>()) throw SchemaError(path + ": too few items");
        if (s.contains("maxItems") && v.size() > s["maxItems"].get<std::size_t>()) throw SchemaError(path + ": too many items");
        if (s.contains("items"))
            for (std::size_t i = 0; i < v.size(); ++i) validate(v[i], s["items"], path + "[" + std::to_string(i) + "]");
    }
    if (v.is_object()) {
        const json empty = json::object();
        const json& props = s.contains("properties") ? s["properties"] : empty;
        if (s.contains("required"))
            for (const auto& k : s["required"])
                if (!v.contains(k.get<std::string>())) throw SchemaError(path + ": missing required key '" + k.get<std::string>() + "'");
        for (auto it = v.begin(); it != v.end(); ++it) {
            if (props.contains(it.key())) validate(it.value(), props[it.key()], path + "." + it.key());
            else if (s.contains("additionalProperties") && s["additionalProperties"] == false)
                throw SchemaError(path + ": unknown key '" + it.key() + "'");
        }
    }
}

} // namespace detail

inline void validate(const json& v, const std::string& schema_name, const std::string& root = "$") {
    detail::validate(v, schema(schema_name), root);
}

inline void validate(const ojson& v, const std::string& schema_name, const std::string& root = "$") {
    validate(json::parse(v.dump()), schema_name, root);
}

} // namespace fraclap::cli
