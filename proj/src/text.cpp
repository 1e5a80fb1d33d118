#include "cacherag/text.hpp"

#include <cctype>

namespace cacherag::text {

namespace {

bool is_space(char c) {
    return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\f' || c == '\v';
}

bool is_word_byte(unsigned char c) {
    return std::isalnum(c) || c >= 0x80;
}

}  // namespace

std::string_view trim(std::string_view s) {
    while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
    while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
    return s;
}

std::string to_lower(std::string_view s) {
    std::string out(s);
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

bool starts_with_ci(std::string_view s, std::string_view prefix) {
    if (s.size() < prefix.size()) return false;
    for (std::size_t i = 0; i < prefix.size(); ++i) {
        if (std::tolower(static_cast<unsigned char>(s[i])) !=
            std::tolower(static_cast<unsigned char>(prefix[i])))
            return false;
    }
    return true;
}

std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        auto pos = s.find(sep, start);
        if (pos == std::string_view::npos) {
            out.emplace_back(s.substr(start));
            return out;
        }
        out.emplace_back(s.substr(start, pos - start));
        start = pos + 1;
    }
}

std::vector<std::string> split_lines(std::string_view s) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start < s.size()) {
        auto pos = s.find('\n', start);
        if (pos == std::string_view::npos) pos = s.size();
        auto line = s.substr(start, pos - start);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        out.emplace_back(line);
        start = pos + 1;
    }
    return out;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out += sep;
        out += parts[i];
    }
    return out;
}

std::vector<std::string> tokenize(std::string_view s) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : s) {
        auto c = static_cast<unsigned char>(ch);
        if (is_word_byte(c)) {
            cur.push_back(static_cast<char>(std::tolower(c)));
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

std::vector<std::string> identifier_words(std::string_view identifier) {
    std::vector<std::string> out;
    std::string cur;
    auto flush = [&] {
        if (!cur.empty()) out.push_back(std::exchange(cur, {}));
    };
    for (std::size_t i = 0; i < identifier.size(); ++i) {
        auto c = static_cast<unsigned char>(identifier[i]);
        if (!is_word_byte(c)) {
            flush();
            continue;
        }
        bool upper = std::isupper(c) != 0;
        if (upper && !cur.empty()) {
            // "directedBy" splits before B; "IMDBRating" keeps the acronym together.
            bool prev_lower = std::islower(static_cast<unsigned char>(identifier[i - 1])) != 0 ||
                              std::isdigit(static_cast<unsigned char>(identifier[i - 1])) != 0;
            bool next_lower = i + 1 < identifier.size() &&
                              std::islower(static_cast<unsigned char>(identifier[i + 1])) != 0;
            if (prev_lower || next_lower) flush();
        }
        cur.push_back(static_cast<char>(std::tolower(c)));
    }
    flush();
    return out;
}

std::string strip_quotes(std::string_view s) {
    s = trim(s);
    if (s.size() >= 2 && ((s.front() == '"' && s.back() == '"') ||
                          (s.front() == '\'' && s.back() == '\''))) {
        s = s.substr(1, s.size() - 2);
    }
    return std::string(s);
}

std::vector<KeyedLine> parse_keyed_lines(std::string_view s) {
    std::vector<KeyedLine> out;
    for (const auto& raw : split_lines(s)) {
        std::string_view line = trim(raw);
        while (!line.empty() && (line.front() == '-' || line.front() == '*')) {
            line = trim(line.substr(1));
        }
        std::size_t digits = 0;
        while (digits < line.size() && std::isdigit(static_cast<unsigned char>(line[digits]))) ++digits;
        if (digits > 0 && digits < line.size() && (line[digits] == '.' || line[digits] == ')')) {
            line = trim(line.substr(digits + 1));
        }
        auto colon = line.find(':');
        if (colon == std::string_view::npos || colon == 0 || colon > 32) continue;
        std::string key;
        bool ok = true;
        for (char c : trim(line.substr(0, colon))) {
            auto u = static_cast<unsigned char>(c);
            if (std::isalpha(u) || c == '_') {
                key.push_back(static_cast<char>(std::toupper(u)));
            } else if (c == ' ') {
                key.push_back('_');
            } else {
                ok = false;
                break;
            }
        }
        if (!ok || key.empty()) continue;
        out.push_back({std::move(key), std::string(trim(line.substr(colon + 1)))});
    }
    return out;
}

std::string unescape(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '\\' && i + 1 < s.size()) {
            char n = s[i + 1];
            if (n == 't') { out.push_back('\t'); ++i; continue; }
            if (n == 'n') { out.push_back('\n'); ++i; continue; }
            if (n == '\\') { out.push_back('\\'); ++i; continue; }
        }
        out.push_back(s[i]);
    }
    return out;
}

std::string escape(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
            case '\t': out += "\\t"; break;
            case '\n': out += "\\n"; break;
            case '\\': out += "\\\\"; break;
            default: out.push_back(c);
        }
    }
    return out;
}

}  // namespace cacherag::text
