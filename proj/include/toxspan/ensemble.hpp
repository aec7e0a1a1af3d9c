#ifndef TOXSPAN_ENSEMBLE_HPP
#define TOXSPAN_ENSEMBLE_HPP

#include <algorithm>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "toxspan/error.hpp"
#include "toxspan/predictions.hpp"
#include "toxspan/span.hpp"

namespace toxspan {

enum class EnsembleMode { vote, intersect };

/// Indices predicted by strictly more than half of the models.
inline CharIndexSet vote(std::span<const CharIndexSet> sets) {
    if (sets.size() < 2) throw ValidationError("ensemble needs at least 2 models");
    std::vector<CharIndex> all;
    for (const auto& s : sets) all.insert(all.end(), s.begin(), s.end());
    std::sort(all.begin(), all.end());
    std::vector<CharIndex> out;
    for (std::size_t i = 0; i < all.size();) {
        std::size_t j = i;
        while (j < all.size() && all[j] == all[i]) ++j;
        if (2 * (j - i) > sets.size()) out.push_back(all[i]);
        i = j;
    }
    return CharIndexSet::from_sorted(std::move(out));
}

/// Indices predicted by every model.
inline CharIndexSet intersect(std::span<const CharIndexSet> sets) {
    if (sets.size() < 2) throw ValidationError("ensemble needs at least 2 models");
    std::vector<CharIndex> out;
    for (CharIndex i : sets.front()) {
        bool everywhere = true;
        for (std::size_t m = 1; m < sets.size() && everywhere; ++m) everywhere = sets[m].contains(i);
        if (everywhere) out.push_back(i);
    }
    return CharIndexSet::from_sorted(std::move(out));
}

inline CharIndexSet combine(std::span<const CharIndexSet> sets, EnsembleMode mode) {
    return mode == EnsembleMode::vote ? vote(sets) : intersect(sets);
}

/// Combines whole prediction files post by post. All files must cover the
/// same post ids; the output follows the first file's order.
inline std::vector<Prediction> combine_predictions(std::span<const std::vector<Prediction>> models,
                                                   EnsembleMode mode) {
    if (models.size() < 2) throw ValidationError("ensemble needs at least 2 models");
    std::vector<std::map<std::string, const CharIndexSet*>> by_id(models.size());
    for (std::size_t m = 0; m < models.size(); ++m) {
        for (const auto& p : models[m]) {
            if (!by_id[m].emplace(p.id, &p.spans).second) {
                throw ValidationError("model " + std::to_string(m + 1) + " has duplicate post id '" + p.id + "'");
            }
        }
    }
    for (std::size_t m = 1; m < models.size(); ++m) {
        std::vector<std::string> missing;
        std::vector<std::string> extra;
        for (const auto& [id, _] : by_id[0]) {
            if (!by_id[m].count(id)) missing.push_back(id);
        }
        for (const auto& [id, _] : by_id[m]) {
            if (!by_id[0].count(id)) extra.push_back(id);
        }
        if (!missing.empty() || !extra.empty()) {
            std::string msg = "post ids differ between model 1 and model " + std::to_string(m + 1) + ":";
            const auto list = [&](const char* what, const std::vector<std::string>& ids) {
                if (ids.empty()) return;
                msg += std::string(" ") + what + " [";
                for (std::size_t k = 0; k < ids.size() && k < 10; ++k) msg += (k ? ", " : "") + ids[k];
                if (ids.size() > 10) msg += ", ... (" + std::to_string(ids.size()) + " total)";
                msg += "]";
            };
            list("missing", missing);
            list("extra", extra);
            throw ValidationError(msg);
        }
    }
    std::vector<Prediction> out;
    out.reserve(models[0].size());
    std::vector<CharIndexSet> sets(models.size());
    for (const auto& p : models[0]) {
        for (std::size_t m = 0; m < models.size(); ++m) sets[m] = *by_id[m].at(p.id);
        out.push_back(Prediction{p.id, combine(sets, mode)});
    }
    return out;
}

} // namespace toxspan

#endif // TOXSPAN_ENSEMBLE_HPP
