#pragma once

#include <algorithm>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "remind/classifiers.hpp"
#include "remind/error.hpp"
#include "remind/rng.hpp"

namespace remind {

struct Sample {
    std::string id;
    std::string text;
    MembershipLabel label = MembershipLabel::Retained;
    std::optional<std::string> paraphrase_of;
    std::string source;  // "file:line" provenance
};

struct Corpus {
    std::vector<Sample> samples;
    std::map<std::string, size_t> by_id;

    const Sample& get(const std::string& id) const {
        auto it = by_id.find(id);
        if (it == by_id.end()) raise(ErrorKind::Data, "unknown sample id '" + id + "'");
        return samples[it->second];
    }
};

enum class ViewSelector { Original, Paraphrased };

inline ViewSelector view_from_name(const std::string& name) {
    if (name == "original") return ViewSelector::Original;
    if (name == "paraphrased") return ViewSelector::Paraphrased;
    raise(ErrorKind::Config, "view must be 'original' or 'paraphrased', got '" + name + "'");
}

inline const char* view_name(ViewSelector v) {
    return v == ViewSelector::Original ? "original" : "paraphrased";
}

namespace detail {

// Text comes from "text", falls back to question + " " + answer, or from a
// config template like "{question} {answer}" when one is given.
inline std::string sample_text(const nlohmann::json& record, const std::string& text_template,
                               const std::string& where) {
    if (!text_template.empty()) {
        std::string out;
        size_t at = 0;
        while (at < text_template.size()) {
            const size_t open = text_template.find('{', at);
            if (open == std::string::npos) {
                out += text_template.substr(at);
                break;
            }
            out += text_template.substr(at, open - at);
            const size_t close = text_template.find('}', open);
            if (close == std::string::npos)
                raise(ErrorKind::Config, "unclosed '{' in text template");
            const std::string field = text_template.substr(open + 1, close - open - 1);
            auto it = record.find(field);
            if (it == record.end() || !it->is_string())
                raise(ErrorKind::Data, where + ": template field '" + field + "' missing");
            out += it->get<std::string>();
            at = close + 1;
        }
        return out;
    }
    if (auto it = record.find("text"); it != record.end() && it->is_string())
        return it->get<std::string>();
    auto q = record.find("question");
    auto a = record.find("answer");
    if (q != record.end() && a != record.end() && q->is_string() && a->is_string())
        return q->get<std::string>() + " " + a->get<std::string>();
    raise(ErrorKind::Data, where + ": sample has neither 'text' nor question/answer fields");
}

}  // namespace detail

// One JSON object per line: {"id": ..., "text": ... [, "paraphrase_of": ...]}.
// Split membership comes from which file a sample lives in.
inline void load_split(Corpus& corpus, const std::string& path, MembershipLabel label,
                       const std::string& text_template = "") {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(ErrorKind::Data, "cannot open corpus file: " + path);
    std::string line;
    long lineno = 0;
    size_t loaded = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const std::string where = path + ":" + std::to_string(lineno);
        nlohmann::json record = nlohmann::json::parse(line, nullptr, false);
        if (record.is_discarded() || !record.is_object())
            raise(ErrorKind::Data, where + ": not a JSON object");
        auto id_it = record.find("id");
        if (id_it == record.end() || !id_it->is_string())
            raise(ErrorKind::Data, where + ": missing string 'id'");

        Sample s;
        s.id = id_it->get<std::string>();
        s.text = detail::sample_text(record, text_template, where);
        s.label = label;
        s.source = where;
        if (auto p = record.find("paraphrase_of"); p != record.end()) {
            if (!p->is_string()) raise(ErrorKind::Data, where + ": paraphrase_of must be a string");
            s.paraphrase_of = p->get<std::string>();
        }
        if (s.text.empty()) raise(ErrorKind::Data, where + ": empty text");
        if (corpus.by_id.count(s.id)) {
            raise(ErrorKind::Data, where + ": duplicate sample id '" + s.id + "' (first at " +
                                       corpus.samples[corpus.by_id[s.id]].source + ")");
        }
        corpus.by_id[s.id] = corpus.samples.size();
        corpus.samples.push_back(std::move(s));
        ++loaded;
    }
    if (loaded == 0) raise(ErrorKind::Data, "corpus split is empty: " + path);
}

inline Corpus load_corpus(const std::string& retain_path, const std::string& forget_path,
                          const std::string& holdout_path, const std::string& text_template = "") {
    Corpus corpus;
    load_split(corpus, retain_path, MembershipLabel::Retained, text_template);
    load_split(corpus, forget_path, MembershipLabel::Forgotten, text_template);
    load_split(corpus, holdout_path, MembershipLabel::Holdout, text_template);
    // Paraphrase links must resolve within the corpus and stay in-class.
    for (const auto& s : corpus.samples) {
        if (!s.paraphrase_of) continue;
        auto it = corpus.by_id.find(*s.paraphrase_of);
        if (it == corpus.by_id.end())
            raise(ErrorKind::Data,
                  s.source + ": paraphrase_of names unknown id '" + *s.paraphrase_of + "'");
        const Sample& target = corpus.samples[it->second];
        if (target.label != s.label)
            raise(ErrorKind::Data, s.source + ": paraphrase_of crosses class boundary ('" + s.id +
                                       "' is " + label_name(s.label) + ", '" + target.id + "' is " +
                                       label_name(target.label) + ")");
    }
    return corpus;
}

struct CorpusView {
    ViewSelector selector = ViewSelector::Original;
    size_t per_class_cap = 1000;
    std::vector<Sample> samples;  // sorted by (label, id)
};

// Base samples are the rows without a paraphrase_of link. The paraphrased
// view swaps each base sample's text for the text of its paraphrase (the
// paraphrase with the smallest id when several point at the same base),
// keeping the original id and label. Caps select a seeded-uniform subset
// per class, independent of file ordering.
inline CorpusView select_view(const Corpus& corpus, ViewSelector selector, size_t per_class_cap,
                              uint64_t seed) {
    if (per_class_cap == 0) raise(ErrorKind::Parameter, "per-class cap must be >= 1");

    std::map<std::string, const Sample*> paraphrase_for;  // base id -> chosen paraphrase
    if (selector == ViewSelector::Paraphrased) {
        for (const auto& s : corpus.samples) {
            if (!s.paraphrase_of) continue;
            auto [it, fresh] = paraphrase_for.emplace(*s.paraphrase_of, &s);
            if (!fresh && s.id < it->second->id) it->second = &s;
        }
    }

    std::vector<Sample> picked;
    std::vector<std::string> missing;
    for (const auto& s : corpus.samples) {
        if (s.paraphrase_of) continue;  // only base samples form the view
        Sample row = s;
        if (selector == ViewSelector::Paraphrased) {
            auto it = paraphrase_for.find(s.id);
            if (it == paraphrase_for.end()) {
                missing.push_back(s.id);
                continue;
            }
            row.text = it->second->text;
        }
        picked.push_back(std::move(row));
    }
    if (!missing.empty()) {
        std::string ids;
        for (size_t i = 0; i < missing.size() && i < 10; ++i)
            ids += (i ? ", " : "") + missing[i];
        if (missing.size() > 10) ids += ", ...";
        raise(ErrorKind::Data, "paraphrased view requested but " + std::to_string(missing.size()) +
                                   " samples have no paraphrase: " + ids);
    }
    if (picked.empty()) raise(ErrorKind::Data, "view selected no samples");

    // Per-class cap: order by a seed-keyed hash of the id and keep the first
    // cap rows of each class.
    std::vector<Sample> capped;
    for (int c = 0; c < kClassCount; ++c) {
        std::vector<const Sample*> members;
        for (const auto& s : picked)
            if (static_cast<int>(s.label) == c) members.push_back(&s);
        std::sort(members.begin(), members.end(), [&](const Sample* a, const Sample* b) {
            const uint64_t ha = rng::hash_bytes(rng::splitmix64(seed), a->id.data(), a->id.size());
            const uint64_t hb = rng::hash_bytes(rng::splitmix64(seed), b->id.data(), b->id.size());
            if (ha != hb) return ha < hb;
            return a->id < b->id;
        });
        for (size_t k = 0; k < members.size() && k < per_class_cap; ++k)
            capped.push_back(*members[k]);
    }
    std::sort(capped.begin(), capped.end(), [](const Sample& a, const Sample& b) {
        if (a.label != b.label) return static_cast<int>(a.label) < static_cast<int>(b.label);
        return a.id < b.id;
    });

    CorpusView view;
    view.selector = selector;
    view.per_class_cap = per_class_cap;
    view.samples = std::move(capped);
    return view;
}

}  // namespace remind
