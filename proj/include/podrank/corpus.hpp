// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "podrank/error.hpp"

namespace podrank {

struct TranscriptWord {
    std::string text;
    std::optional<double> start_s;
    std::optional<double> end_s;

    bool timed() const noexcept { return start_s.has_value(); }
    bool operator==(const TranscriptWord&) const = default;
};

struct Episode {
    std::string episode_id;
    std::string show_name;
    std::string title;
    std::string description;
    std::vector<TranscriptWord> transcript;

    bool operator==(const Episode&) const = default;
};

/// A retrievable window of one episode's transcript.
struct Segment {
    std::string segment_id;
    std::string episode_id;
    double start_s = 0.0;
    std::string text;

    bool operator==(const Segment&) const = default;
};

struct SegmentationConfig {
    double window_s = 120.0;
    double stride_s = 60.0;
    double words_per_minute = 150.0;

    void validate() const {
        if (!(stride_s > 0.0) || !(stride_s <= window_s)) {
            throw ConfigError("stride_s", "requires 0 < stride_s <= window_s");
        }
        if (!(words_per_minute > 0.0)) throw ConfigError("words_per_minute", "must be positive");
    }
};

struct Query {
    std::string qid;
    std::string query;
    std::string description;

    bool operator==(const Query&) const = default;
};

class Corpus {
public:
    Corpus() = default;

    void add(Episode episode) {
        if (episode.episode_id.empty()) throw Error("episode_id must be non-empty");
        if (by_id_.contains(episode.episode_id)) throw DuplicateError(episode.episode_id);
        by_id_.emplace(episode.episode_id, episodes_.size());
        episodes_.push_back(std::move(episode));
    }

    const Episode& at(const std::string& id) const {
        auto it = by_id_.find(id);
        if (it == by_id_.end()) throw NotFoundError(id);
        return episodes_[it->second];
    }

    bool contains(const std::string& id) const { return by_id_.contains(id); }
    const std::vector<Episode>& episodes() const noexcept { return episodes_; }
    std::size_t size() const noexcept { return episodes_.size(); }
    bool empty() const noexcept { return episodes_.empty(); }

private:
    std::vector<Episode> episodes_;
    std::map<std::string, std::size_t> by_id_;
};

namespace detail {

inline bool blank(const std::string& line) {
    return std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); });
}

inline nlohmann::json parse_json_line(const std::string& line, std::size_t lineno) {
    try {
        auto j = nlohmann::json::parse(line);
        if (!j.is_object()) throw ParseError("record is not an object", lineno);
        return j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(e.what(), lineno);
    }
}

inline std::string string_field(const nlohmann::json& j, const char* key, std::size_t lineno, bool required) {
    auto it = j.find(key);
    if (it == j.end()) {
        if (required) throw ParseError(std::string("missing key '") + key + "'", lineno);
        return {};
    }
    if (!it->is_string()) throw ParseError(std::string("key '") + key + "' must be a string", lineno);
    return it->get<std::string>();
}

inline std::optional<double> time_field(const nlohmann::json& w, const char* key, std::size_t lineno) {
    auto it = w.find(key);
    if (it == w.end() || it->is_null()) return std::nullopt;
    if (!it->is_number()) throw ParseError(std::string("'") + key + "' must be a number", lineno);
    return it->get<double>();
}

}  // namespace detail

/// Parses one episode record. Throws ParseError tagged with `lineno`.
inline Episode parse_episode(const std::string& line, std::size_t lineno) {
    auto j = detail::parse_json_line(line, lineno);
    Episode ep;
    ep.episode_id = detail::string_field(j, "episode_id", lineno, true);
    if (ep.episode_id.empty()) throw ParseError("episode_id must be non-empty", lineno);
    ep.show_name = detail::string_field(j, "show_name", lineno, false);
    ep.title = detail::string_field(j, "title", lineno, false);
    ep.description = detail::string_field(j, "description", lineno, false);

    auto tr = j.find("transcript");
    if (tr == j.end()) throw ParseError("missing key 'transcript'", lineno);
    if (!tr->is_array()) throw ParseError("'transcript' must be an array", lineno);
    std::optional<bool> timed;
    double prev_start = 0.0;
    for (const auto& w : *tr) {
        if (!w.is_object()) throw ParseError("transcript entries must be objects", lineno);
        TranscriptWord word;
        word.text = detail::string_field(w, "text", lineno, true);
        word.start_s = detail::time_field(w, "start_s", lineno);
        word.end_s = detail::time_field(w, "end_s", lineno);
        if (word.start_s.has_value() != word.end_s.has_value()) {
            throw ParseError("word '" + word.text + "' has only one timestamp", lineno);
        }
        if (timed.has_value() && *timed != word.timed()) {
            throw ParseError("transcript mixes timed and untimed words", lineno);
        }
        timed = word.timed();
        if (word.timed()) {
            if (!std::isfinite(*word.start_s) || !std::isfinite(*word.end_s) || *word.start_s < 0.0 ||
                *word.end_s < *word.start_s) {
                throw ParseError("invalid timestamps for word '" + word.text + "'", lineno);
            }
            if (*word.start_s < prev_start) throw ParseError("word start times decrease", lineno);
            prev_start = *word.start_s;
        }
        ep.transcript.push_back(std::move(word));
    }
    return ep;
}

/// Reads line-delimited episode records. Blank lines are skipped.
inline Corpus parse_corpus(std::istream& in) {
    Corpus corpus;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (detail::blank(line)) continue;
        auto ep = parse_episode(line, lineno);
        corpus.add(std::move(ep));
    }
    return corpus;
}

inline std::string serialize_episode(const Episode& ep) {
    nlohmann::ordered_json j;
    j["episode_id"] = ep.episode_id;
    j["show_name"] = ep.show_name;
    j["title"] = ep.title;
    j["description"] = ep.description;
    auto words = nlohmann::ordered_json::array();
    for (const auto& w : ep.transcript) {
        nlohmann::ordered_json o;
        o["text"] = w.text;
        if (w.timed()) {
            o["start_s"] = *w.start_s;
            o["end_s"] = *w.end_s;
        }
        words.push_back(std::move(o));
    }
    j["transcript"] = std::move(words);
    return j.dump();
}

inline void write_corpus(std::ostream& out, const Corpus& corpus) {
    for (const auto& ep : corpus.episodes()) out << serialize_episode(ep) << '\n';
}

inline std::string transcript_text(const Episode& ep) {
    std::string text;
    for (const auto& w : ep.transcript) {
        if (!text.empty()) text.push_back(' ');
        text += w.text;
    }
    return text;
}

/// Text indexed for the episode-level first stage: title, description and
/// transcript, joined by single spaces (empty parts are skipped).
inline std::string episode_document(const Episode& ep) {
    std::string doc;
    for (const std::string& part : {ep.title, ep.description, transcript_text(ep)}) {
        if (part.empty()) continue;
        if (!doc.empty()) doc.push_back(' ');
        doc += part;
    }
    return doc;
}

/// Seconds rendered without a trailing ".0" for whole values ("60", "7.5").
inline std::string format_seconds(double s) {
    char buf[32];
    if (s == std::floor(s) && std::fabs(s) < 1e15) {
        std::snprintf(buf, sizeof buf, "%.0f", s);
    } else {
        std::snprintf(buf, sizeof buf, "%.15g", s);
    }
    return buf;
}

inline std::string make_segment_id(const std::string& episode_id, double start_s) {
    return episode_id + "_" + format_seconds(start_s);
}

/// Episode id of a segment id produced by make_segment_id.
inline std::string segment_episode_id(const std::string& segment_id) {
    auto pos = segment_id.rfind('_');
    if (pos == std::string::npos) throw Error("not a segment id: '" + segment_id + "'");
    return segment_id.substr(0, pos);
}

/// Splits a transcript into windows starting at 0, stride, 2*stride, ...
/// Untimed transcripts get synthetic times i * 60 / words_per_minute.
/// Every start below the transcript duration yields a segment (possibly
/// with empty text when speech has a gap), and the last word is always
/// covered.
inline std::vector<Segment> segment_episode(const Episode& episode, const SegmentationConfig& cfg) {
    cfg.validate();
    const auto& words = episode.transcript;
    if (words.empty()) return {};

    std::vector<double> times(words.size());
    double duration = 0.0;
    for (std::size_t i = 0; i < words.size(); ++i) {
        if (words[i].timed()) {
            times[i] = *words[i].start_s;
            duration = std::max(duration, *words[i].end_s);
        } else {
            times[i] = static_cast<double>(i) * 60.0 / cfg.words_per_minute;
            duration = static_cast<double>(i + 1) * 60.0 / cfg.words_per_minute;
        }
    }
    const double last_start = times.back();

    std::vector<Segment> segments;
    std::size_t first = 0;  // first word with time >= current start
    for (std::size_t k = 0;; ++k) {
        const double start = static_cast<double>(k) * cfg.stride_s;
        if (!(start < duration || start <= last_start)) break;
        const double end = start + cfg.window_s;
        while (first < words.size() && times[first] < start) ++first;
        Segment seg;
        seg.episode_id = episode.episode_id;
        seg.start_s = start;
        seg.segment_id = make_segment_id(episode.episode_id, start);
        for (std::size_t i = first; i < words.size() && times[i] < end; ++i) {
            if (!seg.text.empty()) seg.text.push_back(' ');
            seg.text += words[i].text;
        }
        segments.push_back(std::move(seg));
    }
    return segments;
}

/// Segments of several episodes, ordered by (episode_id, start_s).
inline std::vector<Segment> segment_episodes(const std::vector<const Episode*>& episodes,
                                             const SegmentationConfig& cfg) {
    std::vector<Segment> all;
    for (const Episode* ep : episodes) {
        auto segs = segment_episode(*ep, cfg);
        all.insert(all.end(), std::make_move_iterator(segs.begin()), std::make_move_iterator(segs.end()));
    }
    std::stable_sort(all.begin(), all.end(), [](const Segment& a, const Segment& b) {
        if (a.episode_id != b.episode_id) return a.episode_id < b.episode_id;
        return a.start_s < b.start_s;
    });
    return all;
}

inline void write_segments(std::ostream& out, const std::vector<Segment>& segments) {
    for (const auto& s : segments) {
        nlohmann::ordered_json j;
        j["segment_id"] = s.segment_id;
        j["episode_id"] = s.episode_id;
        j["start_s"] = s.start_s;
        j["text"] = s.text;
        out << j.dump() << '\n';
    }
}

inline std::vector<Segment> read_segments(std::istream& in) {
    std::vector<Segment> segments;
    std::map<std::string, bool> seen;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (detail::blank(line)) continue;
        auto j = detail::parse_json_line(line, lineno);
        Segment s;
        s.segment_id = detail::string_field(j, "segment_id", lineno, true);
        s.episode_id = detail::string_field(j, "episode_id", lineno, true);
        s.text = detail::string_field(j, "text", lineno, true);
        auto st = detail::time_field(j, "start_s", lineno);
        if (!st) throw ParseError("missing key 'start_s'", lineno);
        s.start_s = *st;
        if (seen.contains(s.segment_id)) throw DuplicateError(s.segment_id);
        seen[s.segment_id] = true;
        segments.push_back(std::move(s));
    }
    return segments;
}

/// Reads line-delimited query records with keys qid, query, description.
inline std::vector<Query> parse_queries(std::istream& in) {
    std::vector<Query> queries;
    std::map<std::string, bool> seen;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (detail::blank(line)) continue;
        auto j = detail::parse_json_line(line, lineno);
        Query q;
        q.qid = detail::string_field(j, "qid", lineno, true);
        if (q.qid.empty()) throw ParseError("qid must be non-empty", lineno);
        q.query = detail::string_field(j, "query", lineno, true);
        q.description = detail::string_field(j, "description", lineno, false);
        if (seen.contains(q.qid)) throw DuplicateError(q.qid);
        seen[q.qid] = true;
        queries.push_back(std::move(q));
    }
    return queries;
}

}  // namespace podrank
