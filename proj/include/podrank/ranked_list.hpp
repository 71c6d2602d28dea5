// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <string>
#include <vector>

namespace podrank {

struct ScoredDoc {
    std::string doc_id;
    double score = 0.0;

    bool operator==(const ScoredDoc&) const = default;
};

/// Strict ranking order: higher score first, then ascending doc id.
inline bool ranks_before(const ScoredDoc& a, const ScoredDoc& b) noexcept {
    if (a.score != b.score) return a.score > b.score;
    return a.doc_id < b.doc_id;
}

/// Documents sorted by (score desc, doc_id asc) with no duplicate ids.
class RankedList {
public:
    RankedList() = default;

    /// Sorts `entries` into ranking order. Duplicate ids are the caller's bug.
    static RankedList from_unsorted(std::vector<ScoredDoc> entries) {
        std::sort(entries.begin(), entries.end(), ranks_before);
        RankedList list;
        list.entries_ = std::move(entries);
        return list;
    }

    /// Keeps only the first k entries.
    void truncate(std::size_t k) {
        if (entries_.size() > k) entries_.resize(k);
    }

    const std::vector<ScoredDoc>& entries() const noexcept { return entries_; }
    std::size_t size() const noexcept { return entries_.size(); }
    bool empty() const noexcept { return entries_.empty(); }
    const ScoredDoc& operator[](std::size_t i) const { return entries_[i]; }
    auto begin() const noexcept { return entries_.begin(); }
    auto end() const noexcept { return entries_.end(); }

    bool operator==(const RankedList&) const = default;

private:
    std::vector<ScoredDoc> entries_;
};

}  // namespace podrank
