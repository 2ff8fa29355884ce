#include "smellmap/toml.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "smellmap/errors.hpp"

namespace smellmap::toml {

std::string Value::as_string(const std::string& key) const {
    if (kind != Kind::string) throw ValidationError("config key '" + key + "' is not a string");
    return str;
}

double Value::as_number(const std::string& key) const {
    if (kind != Kind::number) throw ValidationError("config key '" + key + "' is not a number");
    return num;
}

bool Value::as_bool(const std::string& key) const {
    if (kind != Kind::boolean) throw ValidationError("config key '" + key + "' is not a boolean");
    return flag;
}

std::vector<std::string> Value::as_string_array(const std::string& key) const {
    if (kind != Kind::array) throw ValidationError("config key '" + key + "' is not an array");
    std::vector<std::string> out;
    for (const auto& v : items) out.push_back(v.as_string(key));
    return out;
}

std::vector<double> Value::as_number_array(const std::string& key) const {
    if (kind != Kind::array) throw ValidationError("config key '" + key + "' is not an array");
    std::vector<double> out;
    for (const auto& v : items) out.push_back(v.as_number(key));
    return out;
}

namespace {

struct Cursor {
    const std::string& s;
    std::size_t pos = 0;
    int line = 1;

    bool done() const { return pos >= s.size(); }
    char peek() const { return s[pos]; }
    char take() {
        const char c = s[pos++];
        if (c == '\n') ++line;
        return c;
    }

    [[noreturn]] void fail(const std::string& what) const {
        throw ValidationError("config line " + std::to_string(line) + ": " + what);
    }

    void skip_inline_ws() {
        while (!done() && (peek() == ' ' || peek() == '\t')) take();
    }

    // Whitespace, newlines and comments.
    void skip_ws_and_comments() {
        while (!done()) {
            const char c = peek();
            if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
                take();
            } else if (c == '#') {
                while (!done() && peek() != '\n') take();
            } else {
                break;
            }
        }
    }
};

bool is_bare_key_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
}

std::string parse_key(Cursor& cur) {
    std::string key;
    while (!cur.done() && (is_bare_key_char(cur.peek()) || cur.peek() == '.')) {
        key.push_back(cur.take());
    }
    if (key.empty() || key.front() == '.' || key.back() == '.') {
        cur.fail("expected a key");
    }
    return key;
}

std::string parse_quoted(Cursor& cur) {
    cur.take();  // opening quote
    std::string out;
    while (true) {
        if (cur.done()) cur.fail("unterminated string");
        const char c = cur.take();
        if (c == '"') break;
        if (c == '\n') cur.fail("newline inside string");
        if (c == '\\') {
            if (cur.done()) cur.fail("unterminated escape");
            const char e = cur.take();
            switch (e) {
                case 'n': out.push_back('\n'); break;
                case 't': out.push_back('\t'); break;
                case 'r': out.push_back('\r'); break;
                case '"': out.push_back('"'); break;
                case '\\': out.push_back('\\'); break;
                default: cur.fail(std::string("unsupported escape \\") + e);
            }
        } else {
            out.push_back(c);
        }
    }
    return out;
}

Value parse_value(Cursor& cur);

Value parse_array(Cursor& cur) {
    cur.take();  // '['
    Value v;
    v.kind = Value::Kind::array;
    while (true) {
        cur.skip_ws_and_comments();
        if (cur.done()) cur.fail("unterminated array");
        if (cur.peek() == ']') {
            cur.take();
            break;
        }
        v.items.push_back(parse_value(cur));
        cur.skip_ws_and_comments();
        if (cur.done()) cur.fail("unterminated array");
        if (cur.peek() == ',') {
            cur.take();
        } else if (cur.peek() != ']') {
            cur.fail("expected ',' or ']' in array");
        }
    }
    return v;
}

Value parse_value(Cursor& cur) {
    if (cur.done()) cur.fail("expected a value");
    const char c = cur.peek();
    if (c == '"') {
        Value v;
        v.kind = Value::Kind::string;
        v.str = parse_quoted(cur);
        return v;
    }
    if (c == '[') return parse_array(cur);

    std::string tok;
    while (!cur.done() && cur.peek() != '\n' && cur.peek() != ',' && cur.peek() != ']' &&
           cur.peek() != '#' && cur.peek() != ' ' && cur.peek() != '\t' &&
           cur.peek() != '\r') {
        tok.push_back(cur.take());
    }
    if (tok == "true" || tok == "false") {
        Value v;
        v.kind = Value::Kind::boolean;
        v.flag = tok == "true";
        return v;
    }
    char* end = nullptr;
    const double num = std::strtod(tok.c_str(), &end);
    if (tok.empty() || end != tok.c_str() + tok.size()) {
        cur.fail("cannot parse value '" + tok + "'");
    }
    Value v;
    v.kind = Value::Kind::number;
    v.num = num;
    return v;
}

}  // namespace

Table parse(const std::string& content) {
    Table table;
    Cursor cur{content};
    std::string prefix;
    while (true) {
        cur.skip_ws_and_comments();
        if (cur.done()) break;
        if (cur.peek() == '[') {
            cur.take();
            cur.skip_inline_ws();
            prefix = parse_key(cur);
            cur.skip_inline_ws();
            if (cur.done() || cur.take() != ']') cur.fail("unterminated section header");
            continue;
        }
        const std::string key = parse_key(cur);
        cur.skip_inline_ws();
        if (cur.done() || cur.take() != '=') cur.fail("expected '=' after key '" + key + "'");
        cur.skip_inline_ws();
        const std::string full = prefix.empty() ? key : prefix + "." + key;
        if (table.count(full)) cur.fail("duplicate key '" + full + "'");
        table[full] = parse_value(cur);
        cur.skip_inline_ws();
        if (!cur.done() && cur.peek() == '#') {
            while (!cur.done() && cur.peek() != '\n') cur.take();
        }
        if (!cur.done() && cur.peek() == '\r') cur.take();
        if (!cur.done() && cur.peek() != '\n') {
            cur.fail("unexpected trailing content after value for '" + full + "'");
        }
    }
    return table;
}

Table read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open config: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

}  // namespace smellmap::toml
