// Small helpers for optional fields in JSON documents.
#pragma once

#include <optional>
#include <string>

#include <json.hpp>

#include "commitshield/model.hpp"

namespace commitshield::detail {

template<typename T>
json optional_to_json(const std::optional<T>& value)
{
    if (!value)
        return nullptr;
    return json(*value);
}

template<typename T>
std::optional<T> optional_from_json(const json& j, const char* key)
{
    auto it = j.find(key);
    if (it == j.end() || it->is_null())
        return std::nullopt;
    return it->get<T>();
}

template<typename T>
T required(const json& j, const char* key)
{
    auto it = j.find(key);
    if (it == j.end() || it->is_null())
        throw SchemaError(std::string("missing field \"") + key + "\"");
    try {
        return it->get<T>();
    } catch (const json::exception& e) {
        throw SchemaError(std::string("bad field \"") + key + "\": " + e.what());
    }
}

template<typename T>
T value_or(const json& j, const char* key, T fallback)
{
    auto it = j.find(key);
    if (it == j.end() || it->is_null())
        return fallback;
    return it->get<T>();
}

} // namespace commitshield::detail
