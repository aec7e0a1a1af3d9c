#ifndef TOXSPAN_CSV_HPP
#define TOXSPAN_CSV_HPP

#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "toxspan/error.hpp"

namespace toxspan::csv {

using Record = std::vector<std::string>;

/// RFC-4180 record reader: quoted fields may hold commas, doubled quotes
/// and line breaks; CRLF and LF line endings are both accepted.
class Reader {
public:
    explicit Reader(std::istream& in) : in_(in) {}

    /// Next record, or nullopt at end of input. Throws DataError on an
    /// unterminated quoted field.
    std::optional<Record> next() {
        Record record;
        std::string field;
        bool in_quotes = false;
        bool field_started = false;
        bool any = false;
        int ch;
        while ((ch = in_.get()) != std::char_traits<char>::eof()) {
            any = true;
            const char c = static_cast<char>(ch);
            if (in_quotes) {
                if (c == '"') {
                    if (in_.peek() == '"') {
                        in_.get();
                        field.push_back('"');
                    } else {
                        in_quotes = false;
                    }
                } else {
                    if (c == '\n') ++line_;
                    field.push_back(c);
                }
                continue;
            }
            if (c == '"' && !field_started) {
                in_quotes = true;
                field_started = true;
            } else if (c == ',') {
                record.push_back(std::move(field));
                field.clear();
                field_started = false;
            } else if (c == '\r' && in_.peek() == '\n') {
                continue;
            } else if (c == '\n') {
                ++line_;
                record.push_back(std::move(field));
                return record;
            } else {
                field.push_back(c);
                field_started = true;
            }
        }
        if (in_quotes) throw DataError("unterminated quoted field near line " + std::to_string(line_ + 1));
        if (!any) return std::nullopt;
        record.push_back(std::move(field));
        return record;
    }

    /// Line number (1-based) where the next record starts.
    std::size_t line() const noexcept { return line_ + 1; }

private:
    std::istream& in_;
    std::size_t line_ = 0;
};

inline std::string quote(std::string_view field) {
    if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

inline void write_record(std::ostream& out, const Record& record) {
    for (std::size_t i = 0; i < record.size(); ++i) {
        if (i) out << ',';
        out << quote(record[i]);
    }
    out << '\n';
}

/// Index of `name` in a header record.
inline std::optional<std::size_t> column(const Record& header, std::string_view name) {
    for (std::size_t i = 0; i < header.size(); ++i) {
        std::string_view h = header[i];
        if (i == 0 && h.starts_with("\xEF\xBB\xBF")) h.remove_prefix(3);
        if (h == name) return i;
    }
    return std::nullopt;
}

} // namespace toxspan::csv

#endif // TOXSPAN_CSV_HPP
