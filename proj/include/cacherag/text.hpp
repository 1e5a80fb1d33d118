#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace cacherag::text {

std::string_view trim(std::string_view s);
std::string to_lower(std::string_view s);
bool starts_with_ci(std::string_view s, std::string_view prefix);

std::vector<std::string> split(std::string_view s, char sep);
std::vector<std::string> split_lines(std::string_view s);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

// Lowercases, turns every non-alphanumeric byte into a separator and splits on
// whitespace. Bytes >= 0x80 are kept so UTF-8 words stay intact.
std::vector<std::string> tokenize(std::string_view s);

// Splits an identifier such as "directedBy" or "release_date" into lowercase
// words: {"directed", "by"}, {"release", "date"}.
std::vector<std::string> identifier_words(std::string_view identifier);

// Removes one layer of matching surrounding quotes ("..." or '...').
std::string strip_quotes(std::string_view s);

// One `KEY: value` line from model output. Keys are uppercased; leading list
// markers ("-", "*", "1.") are ignored.
struct KeyedLine {
    std::string key;
    std::string value;
};

std::vector<KeyedLine> parse_keyed_lines(std::string_view s);

// Decodes \t, \n, \\ escapes used by the script file format.
std::string unescape(std::string_view s);
std::string escape(std::string_view s);

}  // namespace cacherag::text
