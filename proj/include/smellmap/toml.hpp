#pragma once

#include <map>
#include <string>
#include <vector>

namespace smellmap::toml {

// Small TOML subset sufficient for config files: [section] headers, bare or
// dotted keys, strings, numbers, booleans, and single-level arrays. Tables
// are flattened to dotted keys ("paths.lexicon").
struct Value {
    enum class Kind { string, number, boolean, array };
    Kind kind = Kind::string;
    std::string str;
    double num = 0.0;
    bool flag = false;
    std::vector<Value> items;

    // Typed accessors throw ValidationError with the offending key name.
    std::string as_string(const std::string& key) const;
    double as_number(const std::string& key) const;
    bool as_bool(const std::string& key) const;
    std::vector<std::string> as_string_array(const std::string& key) const;
    std::vector<double> as_number_array(const std::string& key) const;
};

using Table = std::map<std::string, Value>;

Table parse(const std::string& content);
Table read_file(const std::string& path);

}  // namespace smellmap::toml
