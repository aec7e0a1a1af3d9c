#ifndef TOXSPAN_PREDICTIONS_HPP
#define TOXSPAN_PREDICTIONS_HPP

#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "toxspan/corpus.hpp"
#include "toxspan/error.hpp"
#include "toxspan/span.hpp"

namespace toxspan {

struct Prediction {
    std::string id;
    CharIndexSet spans;

    friend bool operator==(const Prediction&, const Prediction&) = default;
};

/// One line per post: `id<TAB>[i, j, ...]`.
inline void write_predictions(std::ostream& out, std::span<const Prediction> predictions) {
    for (const auto& p : predictions) out << p.id << '\t' << format_index_list(p.spans) << '\n';
}

inline void write_predictions(const std::filesystem::path& path, std::span<const Prediction> predictions) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    write_predictions(out, predictions);
}

inline std::vector<Prediction> read_predictions(std::istream& in) {
    std::vector<Prediction> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos) {
            throw DataError("prediction line " + std::to_string(line_no) + ": expected id<TAB>[indices]");
        }
        out.push_back(Prediction{line.substr(0, tab), parse_span_literal(std::string_view(line).substr(tab + 1))});
    }
    return out;
}

inline std::vector<Prediction> read_predictions(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    return read_predictions(in);
}

} // namespace toxspan

#endif // TOXSPAN_PREDICTIONS_HPP
