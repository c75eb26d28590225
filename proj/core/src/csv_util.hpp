#pragma once

// Internal CSV primitives shared by the table loader and the results
// exporter. Not installed.

#include <charconv>
#include <optional>
#include <string>
#include <vector>

namespace mixopt::csv {

// Splits one line on commas, honoring double-quoted fields with "" escapes,
// dropping stray carriage returns, and trimming unquoted whitespace.
inline std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(field));
            field.clear();
        } else if (c != '\r') {
            field += c;
        }
    }
    fields.push_back(std::move(field));
    for (std::string& f : fields) {
        const auto begin = f.find_first_not_of(" \t");
        if (begin == std::string::npos) {
            f.clear();
        } else {
            f = f.substr(begin, f.find_last_not_of(" \t") - begin + 1);
        }
    }
    return fields;
}

// Full-match double parse; rejects trailing junk and empty fields.
inline std::optional<double> parse_double(const std::string& s) {
    const char* first = s.data();
    const char* last = s.data() + s.size();
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last || s.empty()) return std::nullopt;
    return value;
}

// Quotes a field only when it needs it.
inline std::string escape_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (const char c : s) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += '"';
    return out;
}

}  // namespace mixopt::csv
