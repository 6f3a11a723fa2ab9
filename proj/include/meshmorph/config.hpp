#pragma once

#include <cctype>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "meshmorph/error.hpp"

namespace meshmorph {

/// A value in the TOML subset we accept: numbers, booleans, strings and
/// (nested) arrays. No inline tables, dates or multi-line strings.
struct ConfigValue {
    enum class Kind { number, boolean, string, array };
    Kind kind = Kind::number;
    double number = 0.0;
    bool boolean = false;
    std::string text;
    std::vector<ConfigValue> items;

    static ConfigValue of(double v) { ConfigValue c; c.number = v; return c; }
    static ConfigValue of(bool v) { ConfigValue c; c.kind = Kind::boolean; c.boolean = v; return c; }
    static ConfigValue of(std::string v) { ConfigValue c; c.kind = Kind::string; c.text = std::move(v); return c; }
    static ConfigValue of(std::vector<ConfigValue> v) {
        ConfigValue c;
        c.kind = Kind::array;
        c.items = std::move(v);
        return c;
    }
};

using ConfigTable = std::map<std::string, ConfigValue>;

struct ConfigDocument {
    std::map<std::string, ConfigTable> sections;
    std::string origin = "<config>";

    const ConfigValue* find(const std::string& section, const std::string& key) const {
        const auto s = sections.find(section);
        if (s == sections.end()) return nullptr;
        const auto k = s->second.find(key);
        return k == s->second.end() ? nullptr : &k->second;
    }

    bool has(const std::string& section, const std::string& key) const { return find(section, key) != nullptr; }

    double number(const std::string& section, const std::string& key, double fallback) const {
        const auto* v = find(section, key);
        if (!v) return fallback;
        if (v->kind != ConfigValue::Kind::number) throw type_error(section, key, "a number");
        return v->number;
    }

    int integer(const std::string& section, const std::string& key, int fallback) const {
        const double d = number(section, key, fallback);
        if (d != static_cast<double>(static_cast<int>(d))) throw type_error(section, key, "an integer");
        return static_cast<int>(d);
    }

    bool flag(const std::string& section, const std::string& key, bool fallback) const {
        const auto* v = find(section, key);
        if (!v) return fallback;
        if (v->kind != ConfigValue::Kind::boolean) throw type_error(section, key, "true or false");
        return v->boolean;
    }

    std::string string(const std::string& section, const std::string& key, const std::string& fallback) const {
        const auto* v = find(section, key);
        if (!v) return fallback;
        if (v->kind != ConfigValue::Kind::string) throw type_error(section, key, "a string");
        return v->text;
    }

    /// A number array; a bare number is accepted as a one-element array.
    std::vector<double> numbers(const std::string& section, const std::string& key,
                                std::vector<double> fallback) const {
        const auto* v = find(section, key);
        if (!v) return fallback;
        if (v->kind == ConfigValue::Kind::number) return {v->number};
        if (v->kind != ConfigValue::Kind::array) throw type_error(section, key, "an array of numbers");
        std::vector<double> out;
        for (const auto& item : v->items) {
            if (item.kind != ConfigValue::Kind::number) throw type_error(section, key, "an array of numbers");
            out.push_back(item.number);
        }
        return out;
    }

    /// A string array; a bare string is accepted as a one-element array.
    std::vector<std::string> strings(const std::string& section, const std::string& key,
                                     std::vector<std::string> fallback) const {
        const auto* v = find(section, key);
        if (!v) return fallback;
        if (v->kind == ConfigValue::Kind::string) return {v->text};
        if (v->kind != ConfigValue::Kind::array) throw type_error(section, key, "an array of strings");
        std::vector<std::string> out;
        for (const auto& item : v->items) {
            if (item.kind != ConfigValue::Kind::string) throw type_error(section, key, "an array of strings");
            out.push_back(item.text);
        }
        return out;
    }

    void set(const std::string& section, const std::string& key, ConfigValue value) {
        sections[section][key] = std::move(value);
    }

    /// Rejects sections or keys not listed in `allowed` (section -> keys).
    void require_known(const std::map<std::string, std::vector<std::string>>& allowed) const {
        for (const auto& [name, table] : sections) {
            const auto s = allowed.find(name);
            if (s == allowed.end()) throw ConfigError(origin + ": unknown section [" + name + "]");
            for (const auto& [key, value] : table) {
                bool ok = false;
                for (const auto& k : s->second) ok = ok || k == key;
                if (!ok) throw ConfigError(origin + ": unknown key '" + key + "' in [" + name + "]");
            }
        }
    }

private:
    ConfigError type_error(const std::string& section, const std::string& key, const char* what) const {
        return ConfigError(origin + ": [" + section + "] " + key + " must be " + what);
    }
};

namespace detail {

class ConfigParser {
public:
    ConfigParser(std::string_view text, std::string origin) : text_(text), origin_(std::move(origin)) {}

    ConfigDocument parse() {
        ConfigDocument doc;
        doc.origin = origin_;
        std::string section;
        doc.sections[section];
        while (true) {
            skip_blank_lines();
            if (pos_ >= text_.size()) break;
            if (peek() == '[') {
                ++pos_;
                const std::size_t start = pos_;
                while (pos_ < text_.size() && peek() != ']' && peek() != '\n') ++pos_;
                if (pos_ >= text_.size() || peek() != ']') fail("unterminated section header");
                section = trim(text_.substr(start, pos_ - start));
                if (section.empty()) fail("empty section name");
                ++pos_;
                doc.sections[section];
            } else {
                const std::string key = parse_key();
                skip_spaces();
                if (peek() != '=') fail("expected '=' after key '" + key + "'");
                ++pos_;
                skip_spaces();
                ConfigValue v = parse_value();
                auto& table = doc.sections[section];
                if (table.count(key)) fail("duplicate key '" + key + "'");
                table[key] = std::move(v);
            }
            end_of_line();
        }
        if (doc.sections[""].empty()) doc.sections.erase("");
        else throw ConfigError(origin_ + ": keys must appear inside a [section]");
        return doc;
    }

private:
    std::string_view text_;
    std::string origin_;
    std::size_t pos_ = 0;
    int line_ = 1;

    char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }

    [[noreturn]] void fail(const std::string& what) const {
        throw ConfigError(origin_ + ":" + std::to_string(line_) + ": " + what);
    }

    static std::string trim(std::string_view s) {
        while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
        while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
        return std::string(s);
    }

    void skip_spaces() {
        while (peek() == ' ' || peek() == '\t' || peek() == '\r') ++pos_;
    }

    void skip_comment() {
        if (peek() == '#')
            while (pos_ < text_.size() && peek() != '\n') ++pos_;
    }

    /// Whitespace, comments and newlines (used inside arrays and between statements).
    void skip_blank_lines() {
        while (pos_ < text_.size()) {
            skip_spaces();
            skip_comment();
            if (peek() != '\n') return;
            ++pos_;
            ++line_;
        }
    }

    void end_of_line() {
        skip_spaces();
        skip_comment();
        if (pos_ < text_.size()) {
            if (peek() != '\n') fail("unexpected trailing characters");
            ++pos_;
            ++line_;
        }
    }

    std::string parse_key() {
        if (peek() == '"') return parse_string();
        const std::size_t start = pos_;
        while (pos_ < text_.size()) {
            const char c = peek();
            if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.') ++pos_;
            else break;
        }
        if (start == pos_) fail("expected a key");
        return std::string(text_.substr(start, pos_ - start));
    }

    std::string parse_string() {
        ++pos_;
        std::string out;
        while (true) {
            if (pos_ >= text_.size() || peek() == '\n') fail("unterminated string");
            char c = text_[pos_++];
            if (c == '"') return out;
            if (c == '\\') {
                if (pos_ >= text_.size()) fail("unterminated string");
                const char e = text_[pos_++];
                switch (e) {
                case 'n': c = '\n'; break;
                case 't': c = '\t'; break;
                case '"': c = '"'; break;
                case '\\': c = '\\'; break;
                default: fail(std::string("unsupported escape \\") + e);
                }
            }
            out.push_back(c);
        }
    }

    ConfigValue parse_value() {
        const char c = peek();
        if (c == '"') return ConfigValue::of(parse_string());
        if (c == '[') {
            ++pos_;
            std::vector<ConfigValue> items;
            while (true) {
                skip_blank_lines();
                if (peek() == ']') {
                    ++pos_;
                    return ConfigValue::of(std::move(items));
                }
                items.push_back(parse_value());
                skip_blank_lines();
                if (peek() == ',') ++pos_;
                else if (peek() != ']') fail("expected ',' or ']' in array");
            }
        }
        const std::size_t start = pos_;
        while (pos_ < text_.size()) {
            const char d = peek();
            if (std::isalnum(static_cast<unsigned char>(d)) || d == '.' || d == '+' || d == '-' || d == '_') ++pos_;
            else break;
        }
        std::string word(text_.substr(start, pos_ - start));
        if (word == "true") return ConfigValue::of(true);
        if (word == "false") return ConfigValue::of(false);
        std::erase(word, '_');
        if (word.empty()) fail("expected a value");
        double v = 0.0;
        const char* b = word.data() + (word.front() == '+' ? 1 : 0);
        const auto res = std::from_chars(b, word.data() + word.size(), v);
        if (res.ec != std::errc() || res.ptr != word.data() + word.size())
            fail("invalid value '" + word + "'");
        return ConfigValue::of(v);
    }
};

}  // namespace detail

inline ConfigDocument parse_config(std::string_view text, const std::string& origin = "<config>") {
    return detail::ConfigParser(text, origin).parse();
}

inline ConfigDocument load_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot read config " + path);
    std::stringstream ss;
    ss << is.rdbuf();
    return parse_config(ss.str(), path);
}

}  // namespace meshmorph
