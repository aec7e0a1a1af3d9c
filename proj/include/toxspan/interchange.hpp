#ifndef TOXSPAN_INTERCHANGE_HPP
#define TOXSPAN_INTERCHANGE_HPP

#include <cmath>
#include <filesystem>
#include <fstream>
#include <istream>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "toxspan/error.hpp"
#include "toxspan/unicode.hpp"

namespace toxspan {

/// Encoder interchange file: line-delimited JSON. The first line is a
/// header object, every further line one post:
///
///   {"format":"toxspan-interchange","version":1,"checkpoint_digest":"...",
///    "emb_dim":0,"truncated":0}
///   {"id":"17","text":"...","sent_prob":0.93,
///    "words":[{"start":0,"end":3,"attn":0.12,"pos":"NOUN","emb":[...]}, ...]}
///
/// A word may carry "subword_attn":[...] instead of "attn"; the word score
/// is then the mean of its subword scores. Offsets count Unicode scalars.
inline constexpr int kInterchangeVersion = 1;
inline constexpr const char* kInterchangeFormat = "toxspan-interchange";

struct InterchangeHeader {
    int version = kInterchangeVersion;
    std::string checkpoint_digest;
    std::size_t emb_dim = 0;
    std::size_t truncated = 0;
};

struct InterchangeWord {
    std::size_t start = 0;
    std::size_t end = 0;
    double attn = 0.0;
    std::vector<double> subword_attn;
    std::optional<std::string> pos;
    std::vector<double> emb;
};

struct InterchangeRecord {
    std::string id;
    std::string text;
    double sent_prob = 0.0;
    std::vector<InterchangeWord> words;
};

struct InterchangeFile {
    InterchangeHeader header;
    std::vector<InterchangeRecord> records;
};

/// Mean of subword scores. An empty group is an error.
inline double pool_mean(std::span<const double> subword_scores) {
    if (subword_scores.empty()) throw ValidationError("empty subword group");
    double sum = 0.0;
    for (double s : subword_scores) sum += s;
    return sum / static_cast<double>(subword_scores.size());
}

/// Contract violations of one record, empty when the record is valid.
inline std::vector<std::string> validate_record(const InterchangeRecord& r, std::size_t emb_dim) {
    std::vector<std::string> problems;
    const auto where = [&](std::size_t w) { return "record " + r.id + " word " + std::to_string(w) + ": "; };
    if (!std::isfinite(r.sent_prob) || r.sent_prob < 0.0 || r.sent_prob > 1.0) {
        problems.push_back("record " + r.id + ": sent_prob outside [0, 1]");
    }
    const std::size_t length = unicode::length(r.text);
    std::size_t previous_end = 0;
    for (std::size_t w = 0; w < r.words.size(); ++w) {
        const auto& word = r.words[w];
        if (word.start >= word.end) problems.push_back(where(w) + "empty or inverted span");
        if (word.end > length) problems.push_back(where(w) + "end " + std::to_string(word.end) + " > text length " +
                                                  std::to_string(length));
        if (word.start < previous_end) problems.push_back(where(w) + "overlaps or precedes previous word");
        previous_end = std::max(previous_end, word.end);
        if (!std::isfinite(word.attn) || word.attn < 0.0) problems.push_back(where(w) + "attn not finite and >= 0");
        if (!word.emb.empty() && word.emb.size() != emb_dim) {
            problems.push_back(where(w) + "embedding length " + std::to_string(word.emb.size()) + " != " +
                               std::to_string(emb_dim));
        }
        for (double v : word.emb) {
            if (!std::isfinite(v)) {
                problems.push_back(where(w) + "non-finite embedding value");
                break;
            }
        }
    }
    return problems;
}

namespace detail {

inline InterchangeRecord parse_interchange_record(const nlohmann::json& j) {
    InterchangeRecord r;
    const auto& id = j.at("id");
    r.id = id.is_string() ? id.get<std::string>() : id.dump();
    r.text = j.at("text").get<std::string>();
    r.sent_prob = j.at("sent_prob").get<double>();
    for (const auto& w : j.at("words")) {
        InterchangeWord word;
        word.start = w.at("start").get<std::size_t>();
        word.end = w.at("end").get<std::size_t>();
        if (w.contains("subword_attn")) {
            word.subword_attn = w.at("subword_attn").get<std::vector<double>>();
            word.attn = pool_mean(word.subword_attn);
        } else {
            word.attn = w.at("attn").get<double>();
        }
        if (w.contains("pos") && !w.at("pos").is_null()) word.pos = w.at("pos").get<std::string>();
        if (w.contains("emb") && !w.at("emb").is_null()) word.emb = w.at("emb").get<std::vector<double>>();
        r.words.push_back(std::move(word));
    }
    return r;
}

} // namespace detail

/// Reads and validates an interchange stream. Any contract violation is a
/// DataError listing the offending records.
inline InterchangeFile read_interchange(std::istream& in) {
    InterchangeFile file;
    std::string line;
    std::size_t line_no = 0;
    bool have_header = false;
    std::vector<std::string> problems;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw DataError("interchange line " + std::to_string(line_no) + ": " + e.what());
        }
        try {
            if (!have_header) {
                if (j.value("format", std::string{}) != kInterchangeFormat) {
                    throw DataError("interchange line 1: missing header with format '" +
                                    std::string(kInterchangeFormat) + "'");
                }
                file.header.version = j.at("version").get<int>();
                if (file.header.version != kInterchangeVersion) {
                    throw DataError("unsupported interchange version " + std::to_string(file.header.version));
                }
                file.header.checkpoint_digest = j.value("checkpoint_digest", std::string{});
                file.header.emb_dim = j.value("emb_dim", std::size_t{0});
                file.header.truncated = j.value("truncated", std::size_t{0});
                have_header = true;
                continue;
            }
            auto record = detail::parse_interchange_record(j);
            auto found = validate_record(record, file.header.emb_dim);
            problems.insert(problems.end(), found.begin(), found.end());
            file.records.push_back(std::move(record));
        } catch (const nlohmann::json::exception& e) {
            throw DataError("interchange line " + std::to_string(line_no) + ": " + e.what());
        } catch (const ValidationError& e) {
            throw DataError("interchange line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    if (!have_header) throw DataError("interchange file is empty");
    if (!problems.empty()) {
        std::string msg = std::to_string(problems.size()) + " interchange violation(s):";
        for (std::size_t k = 0; k < problems.size() && k < 20; ++k) msg += "\n  " + problems[k];
        throw DataError(msg);
    }
    return file;
}

inline InterchangeFile read_interchange(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    return read_interchange(in);
}

inline void write_interchange(std::ostream& out, const InterchangeFile& file) {
    nlohmann::json header = {{"format", kInterchangeFormat},
                             {"version", file.header.version},
                             {"checkpoint_digest", file.header.checkpoint_digest},
                             {"emb_dim", file.header.emb_dim},
                             {"truncated", file.header.truncated}};
    out << header.dump() << '\n';
    for (const auto& r : file.records) {
        nlohmann::json words = nlohmann::json::array();
        for (const auto& w : r.words) {
            nlohmann::json jw = {{"start", w.start}, {"end", w.end}, {"attn", w.attn}};
            if (w.pos) jw["pos"] = *w.pos;
            if (!w.emb.empty()) jw["emb"] = w.emb;
            words.push_back(std::move(jw));
        }
        nlohmann::json jr = {{"id", r.id}, {"text", r.text}, {"sent_prob", r.sent_prob}, {"words", std::move(words)}};
        out << jr.dump() << '\n';
    }
}

} // namespace toxspan

#endif // TOXSPAN_INTERCHANGE_HPP
