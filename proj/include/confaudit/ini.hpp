#pragma once

// Minimal INI reader with strict key accounting.
//
// Format: `[section]` headers, `key = value` lines, `#` or `;` comments.
// IniReader hands out values and remembers which keys were consumed so that
// finish() can reject anything unrecognized.

#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "confaudit/error.hpp"

namespace confaudit {

struct IniEntry {
    std::string section;
    std::string key;
    std::string value;
    std::size_t line = 0;

    std::string qualified() const { return section.empty() ? key : section + "." + key; }
};

class IniDocument {
public:
    static IniDocument parse(std::istream& in, const std::string& source = "<config>") {
        IniDocument doc;
        std::string line;
        std::string section;
        std::size_t line_no = 0;
        std::set<std::string> seen;
        while (std::getline(in, line)) {
            ++line_no;
            auto text = detail::trim(line);
            if (text.empty() || text.front() == '#' || text.front() == ';') continue;
            if (text.front() == '[') {
                if (text.back() != ']')
                    throw ConfigError(std::string(text), source + ":" + std::to_string(line_no) +
                                                             ": malformed section header");
                section = std::string(detail::trim(text.substr(1, text.size() - 2)));
                continue;
            }
            const auto eq = text.find('=');
            if (eq == std::string_view::npos)
                throw ConfigError(std::string(text), source + ":" + std::to_string(line_no) +
                                                         ": expected key = value, got '" + std::string(text) + "'");
            IniEntry e{section, std::string(detail::trim(text.substr(0, eq))),
                       std::string(detail::trim(text.substr(eq + 1))), line_no};
            if (e.key.empty())
                throw ConfigError("", source + ":" + std::to_string(line_no) + ": empty key");
            if (!seen.insert(e.qualified()).second)
                throw ConfigError(e.qualified(), source + ":" + std::to_string(line_no) + ": duplicate key '" +
                                                     e.qualified() + "'");
            doc.entries_.push_back(std::move(e));
        }
        doc.source_ = source;
        return doc;
    }

    static IniDocument parse_string(const std::string& text, const std::string& source = "<config>") {
        std::istringstream in(text);
        return parse(in, source);
    }

    static IniDocument load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ConfigError("config", "cannot open config file '" + path + "'");
        return parse(in, path);
    }

    const std::vector<IniEntry>& entries() const noexcept { return entries_; }
    const std::string& source() const noexcept { return source_; }

    const IniEntry* find(const std::string& section, const std::string& key) const noexcept {
        for (const auto& e : entries_)
            if (e.section == section && e.key == key) return &e;
        return nullptr;
    }

    bool has_section(const std::string& section) const noexcept {
        for (const auto& e : entries_)
            if (e.section == section) return true;
        return false;
    }

private:
    std::vector<IniEntry> entries_;
    std::string source_;
};

/// Typed accessors over an IniDocument; finish() fails on any key never read.
class IniReader {
public:
    explicit IniReader(const IniDocument& doc) : doc_(&doc) {}

    std::optional<std::string> get(const std::string& section, const std::string& key) {
        const auto* e = doc_->find(section, key);
        if (!e) return std::nullopt;
        used_.insert(e->qualified());
        return e->value;
    }

    std::optional<double> get_double(const std::string& section, const std::string& key) {
        auto v = get(section, key);
        if (!v) return std::nullopt;
        double out = 0.0;
        if (!detail::parse_double(*v, out))
            throw ConfigError(qualify(section, key), "config key '" + qualify(section, key) +
                                                         "': not a number: '" + *v + "'");
        return out;
    }

    std::optional<std::uint64_t> get_u64(const std::string& section, const std::string& key) {
        auto v = get(section, key);
        if (!v) return std::nullopt;
        std::uint64_t out = 0;
        if (!detail::parse_u64(*v, out))
            throw ConfigError(qualify(section, key), "config key '" + qualify(section, key) +
                                                         "': not a nonnegative integer: '" + *v + "'");
        return out;
    }

    std::optional<bool> get_bool(const std::string& section, const std::string& key) {
        auto v = get(section, key);
        if (!v) return std::nullopt;
        if (*v == "true" || *v == "1" || *v == "yes") return true;
        if (*v == "false" || *v == "0" || *v == "no") return false;
        throw ConfigError(qualify(section, key), "config key '" + qualify(section, key) +
                                                     "': expected true/false, got '" + *v + "'");
    }

    std::optional<std::vector<double>> get_doubles(const std::string& section, const std::string& key) {
        auto v = get(section, key);
        if (!v) return std::nullopt;
        std::vector<double> out;
        if (detail::trim(*v).empty()) return out;
        std::string_view rest = *v;
        while (true) {
            auto comma = rest.find(',');
            auto tok = detail::trim(rest.substr(0, comma));
            double x = 0.0;
            if (!detail::parse_double(tok, x))
                throw ConfigError(qualify(section, key), "config key '" + qualify(section, key) +
                                                             "': not a number list: '" + *v + "'");
            out.push_back(x);
            if (comma == std::string_view::npos) break;
            rest.remove_prefix(comma + 1);
        }
        return out;
    }

    /// Mark every key of a section as consumed (for sections handled elsewhere).
    void consume_section(const std::string& section) {
        for (const auto& e : doc_->entries())
            if (e.section == section) used_.insert(e.qualified());
    }

    void finish() const {
        for (const auto& e : doc_->entries()) {
            if (!used_.count(e.qualified()))
                throw ConfigError(e.qualified(), doc_->source() + ":" + std::to_string(e.line) +
                                                     ": unknown config key '" + e.key + "' in section [" +
                                                     e.section + "]");
        }
    }

    static std::string qualify(const std::string& section, const std::string& key) {
        return section.empty() ? key : section + "." + key;
    }

private:
    const IniDocument* doc_;
    std::set<std::string> used_;
};

}  // namespace confaudit
