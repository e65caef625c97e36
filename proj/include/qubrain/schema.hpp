#pragma once

#include <string>
#include <vector>

#include "json.hpp"

// Minimal structural validator covering the subset of JSON Schema used by
// the schemas shipped in schemas/: type, required, properties, items, enum,
// minimum, minItems and local $ref ("#/definitions/...").

namespace qubrain::bench {

using nlohmann::json;

namespace detail {

inline bool type_matches(const json& doc, const std::string& type) {
    if (type == "object") return doc.is_object();
    if (type == "array") return doc.is_array();
    if (type == "string") return doc.is_string();
    if (type == "number") return doc.is_number();
    if (type == "integer") return doc.is_number_integer() || doc.is_number_unsigned();
    if (type == "boolean") return doc.is_boolean();
    if (type == "null") return doc.is_null();
    return false;
}

inline const json& resolve_ref(const json& root, const std::string& ref) {
    if (ref.rfind("#/", 0) != 0) throw std::invalid_argument("schema: unsupported $ref " + ref);
    const json* node = &root;
    std::size_t start = 2;
    while (start < ref.size()) {
        const std::size_t slash = ref.find('/', start);
        const std::string key = ref.substr(start, slash == std::string::npos ? std::string::npos : slash - start);
        node = &node->at(key);
        if (slash == std::string::npos) break;
        start = slash + 1;
    }
    return *node;
}

inline void schema_walk(const json& doc, const json& schema, const json& root, const std::string& path,
                        std::vector<std::string>& errors) {
    if (schema.contains("$ref")) {
        schema_walk(doc, resolve_ref(root, schema["$ref"].get<std::string>()), root, path, errors);
        return;
    }
    if (schema.contains("type")) {
        const std::string type = schema["type"].get<std::string>();
        if (!type_matches(doc, type)) {
            errors.push_back(path + ": expected " + type + ", got " + std::string(doc.type_name()));
            return;
        }
    }
    if (schema.contains("enum")) {
        bool found = false;
        for (const auto& v : schema["enum"])
            if (v == doc) found = true;
        if (!found) errors.push_back(path + ": value not in enum");
    }
    if (schema.contains("minimum") && doc.is_number() && doc.get<double>() < schema["minimum"].get<double>())
        errors.push_back(path + ": below minimum");
    if (schema.contains("required"))
        for (const auto& key : schema["required"])
            if (!doc.contains(key.get<std::string>()))
                errors.push_back(path + ": missing required field '" + key.get<std::string>() + "'");
    if (schema.contains("properties") && doc.is_object())
        for (const auto& [key, sub] : schema["properties"].items())
            if (doc.contains(key)) schema_walk(doc[key], sub, root, path + "." + key, errors);
    if (doc.is_array()) {
        if (schema.contains("minItems") && doc.size() < schema["minItems"].get<std::size_t>())
            errors.push_back(path + ": fewer than minItems entries");
        if (schema.contains("items")) {
            std::size_t i = 0;
            for (const auto& el : doc)
                schema_walk(el, schema["items"], root, path + "[" + std::to_string(i++) + "]", errors);
        }
    }
}

}  // namespace detail

inline std::vector<std::string> schema_errors(const json& doc, const json& schema) {
    std::vector<std::string> errors;
    detail::schema_walk(doc, schema, schema, "$", errors);
    return errors;
}

inline bool validate_schema(const json& doc, const json& schema) { return schema_errors(doc, schema).empty(); }

}  // namespace qubrain::bench
