// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <bit>
#include <cstdint>
#include <string>

#include "podrank/binary_io.hpp"
#include "podrank/index.hpp"

namespace podrank {

// PIDX layout (all integers u64 little-endian unless noted):
//   "PIDX" | u32 version | section* where section = u64 byte length + payload
//   stats:     num_docs, total_tokens, avgdl (IEEE-754 binary64 bits)
//   docs:      count, then per doc: string id, length
//   postings:  term count, then per term: string term, df, cf, df x (doc index, tf)
//   stopwords: count, then strings
// Strings are u64 length followed by UTF-8 bytes.
inline constexpr char kIndexMagic[4] = {'P', 'I', 'D', 'X'};
inline constexpr std::uint32_t kIndexVersion = 1;

inline io::ByteWriter encode_index(const InvertedIndex& index) {
    io::ByteWriter out;
    out.put_bytes({kIndexMagic, 4});
    out.put(kIndexVersion);

    auto section = [&out](const io::ByteWriter& body) {
        out.put(static_cast<std::uint64_t>(body.size()));
        out.put_bytes({body.bytes().data(), body.size()});
    };

    io::ByteWriter stats;
    stats.put(static_cast<std::uint64_t>(index.stats().num_docs));
    stats.put(static_cast<std::uint64_t>(index.stats().total_tokens));
    stats.put(std::bit_cast<std::uint64_t>(index.stats().avgdl));
    section(stats);

    io::ByteWriter docs;
    docs.put(static_cast<std::uint64_t>(index.num_docs()));
    for (std::size_t d = 0; d < index.num_docs(); ++d) {
        docs.put_string(index.doc_ids()[d]);
        docs.put(static_cast<std::uint64_t>(index.doc_lens()[d]));
    }
    section(docs);

    io::ByteWriter postings;
    postings.put(static_cast<std::uint64_t>(index.num_terms()));
    for (InvertedIndex::TermId t = 0; t < index.num_terms(); ++t) {
        const auto& term = index.term(t);
        postings.put_string(term);
        postings.put(static_cast<std::uint64_t>(index.stats().doc_freq(term)));
        postings.put(static_cast<std::uint64_t>(index.stats().coll_freq(term)));
        for (const auto& p : index.postings(t)) {
            postings.put(static_cast<std::uint64_t>(p.doc));
            postings.put(static_cast<std::uint64_t>(p.tf));
        }
    }
    section(postings);

    io::ByteWriter stop;
    stop.put(static_cast<std::uint64_t>(index.stopwords().size()));
    for (const auto& w : index.stopwords()) stop.put_string(w);
    section(stop);
    return out;
}

inline void write_index(const std::string& path, const InvertedIndex& index) { encode_index(index).save(path); }

inline InvertedIndex decode_index(io::ByteReader& in) {
    if (in.get_bytes(4) != std::string(kIndexMagic, 4)) throw FormatError("bad magic", 0);
    auto version = in.get<std::uint32_t>();
    if (version != kIndexVersion) throw FormatError("unsupported version " + std::to_string(version), 4);

    // Each section must be fully consumed by its decoder.
    auto open_section = [&in]() {
        auto len = in.get<std::uint64_t>();
        in.require(static_cast<std::size_t>(len), "truncated section");
        return in.offset() + static_cast<std::size_t>(len);
    };
    auto close_section = [&in](std::size_t end) {
        if (in.offset() != end) throw FormatError("section length mismatch", in.offset());
    };

    auto end = open_section();
    auto num_docs = in.get<std::uint64_t>();
    auto total_tokens = in.get<std::uint64_t>();
    auto avgdl_bits = in.get<std::uint64_t>();
    close_section(end);

    end = open_section();
    auto doc_count = in.get<std::uint64_t>();
    if (doc_count != num_docs) throw FormatError("doc table count disagrees with stats", in.offset());
    std::vector<std::string> ids;
    std::vector<std::uint64_t> lens;
    for (std::uint64_t i = 0; i < doc_count; ++i) {
        ids.push_back(in.get_string());
        lens.push_back(in.get<std::uint64_t>());
    }
    close_section(end);

    end = open_section();
    auto term_count = in.get<std::uint64_t>();
    std::map<std::string, std::vector<Posting>> postings;
    std::vector<std::pair<std::uint64_t, std::uint64_t>> stored_freqs;
    std::string prev_term;
    for (std::uint64_t t = 0; t < term_count; ++t) {
        auto term_offset = in.offset();
        auto term = in.get_string();
        if (t > 0 && !(prev_term < term)) throw FormatError("terms not strictly ascending", term_offset);
        prev_term = term;
        auto df = in.get<std::uint64_t>();
        auto cf = in.get<std::uint64_t>();
        in.require(static_cast<std::size_t>(std::min<std::uint64_t>(df, in.remaining())) * 16, "truncated postings");
        std::vector<Posting> list;
        list.reserve(static_cast<std::size_t>(df));
        for (std::uint64_t i = 0; i < df; ++i) {
            auto doc = in.get<std::uint64_t>();
            auto tf = in.get<std::uint64_t>();
            if (doc >= num_docs) throw FormatError("posting doc index out of range", in.offset());
            list.push_back({static_cast<InvertedIndex::DocIndex>(doc), tf});
        }
        postings.emplace(term, std::move(list));
        stored_freqs.emplace_back(df, cf);
    }
    close_section(end);

    end = open_section();
    auto stop_count = in.get<std::uint64_t>();
    std::vector<std::string> stop;
    for (std::uint64_t i = 0; i < stop_count; ++i) stop.push_back(in.get_string());
    close_section(end);
    if (!in.at_end()) throw FormatError("trailing bytes", in.offset());

    InvertedIndex index;
    try {
        index = InvertedIndex::from_parts(std::move(ids), std::move(lens), std::move(postings), std::move(stop));
    } catch (const FormatError&) {
        throw;
    } catch (const Error& e) {
        throw FormatError(e.what(), in.offset());
    }
    const auto& st = index.stats();
    if (st.total_tokens != total_tokens || std::bit_cast<std::uint64_t>(st.avgdl) != avgdl_bits) {
        throw FormatError("stats section disagrees with postings", 8);
    }
    std::size_t i = 0;
    for (const auto& term : index.terms()) {
        if (stored_freqs[i].first != st.doc_freq(term) || stored_freqs[i].second != st.coll_freq(term)) {
            throw FormatError("stored df/cf disagree for '" + term + "'", in.offset());
        }
        ++i;
    }
    return index;
}

inline InvertedIndex read_index(const std::string& path) {
    auto in = io::ByteReader::from_file(path);
    return decode_index(in);
}

}  // namespace podrank
