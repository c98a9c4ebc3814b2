#include "riskbench/text.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "riskbench/errors.hpp"
#include "riskbench/util.hpp"

namespace riskbench {

StopWords StopWords::load(const std::filesystem::path& path) {
    std::istringstream in(read_file(path));
    std::unordered_set<std::string> words;
    std::string line;
    while (std::getline(in, line)) {
        auto t = trim(line);
        if (t.empty() || t.front() == '#') continue;
        words.insert(to_lower_ascii(t));
    }
    return StopWords(std::move(words));
}

namespace {

/// Decode one UTF-8 code point at `i`, advancing it. Invalid bytes decode
/// as U+FFFD and advance by one.
char32_t next_code_point(std::string_view s, std::size_t& i) {
    auto byte = [&](std::size_t k) { return static_cast<unsigned char>(s[k]); };
    unsigned char b0 = byte(i);
    if (b0 < 0x80) {
        ++i;
        return b0;
    }
    int extra = (b0 & 0xE0) == 0xC0 ? 1 : (b0 & 0xF0) == 0xE0 ? 2 : (b0 & 0xF8) == 0xF0 ? 3 : -1;
    if (extra < 0 || i + static_cast<std::size_t>(extra) >= s.size()) {
        ++i;
        return 0xFFFD;
    }
    char32_t cp = b0 & (0x3F >> extra);
    for (int k = 1; k <= extra; ++k) {
        unsigned char b = byte(i + k);
        if ((b & 0xC0) != 0x80) {
            ++i;
            return 0xFFFD;
        }
        cp = (cp << 6) | (b & 0x3F);
    }
    i += static_cast<std::size_t>(extra) + 1;
    return cp;
}

bool is_word_char(char32_t cp) {
    if (cp < 0x80) {
        return (cp >= '0' && cp <= '9') || (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z');
    }
    if (cp == 0xFFFD) return false;
    if (cp >= 0x80 && cp <= 0xBF) return false;      // Latin-1 controls, punctuation, symbols
    if (cp == 0xD7 || cp == 0xF7) return false;       // multiplication / division signs
    if (cp >= 0x2000 && cp <= 0x2BFF) return false;   // punctuation, arrows, math, shapes
    if (cp >= 0x3000 && cp <= 0x303F) return false;   // CJK punctuation
    if (cp >= 0xFE30 && cp <= 0xFE4F) return false;
    if (cp >= 0xFF00 && cp <= 0xFF0F) return false;
    return true;
}

char32_t to_lower(char32_t cp) {
    if (cp >= 'A' && cp <= 'Z') return cp + 32;
    if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) return cp + 32;
    if (cp >= 0x100 && cp <= 0x17F && cp % 2 == 0 && cp != 0x130 && cp != 0x138) return cp + 1;
    if (cp >= 0x391 && cp <= 0x3AB && cp != 0x3A2) return cp + 32;  // Greek
    if (cp >= 0x410 && cp <= 0x42F) return cp + 32;                 // Cyrillic
    return cp;
}

void append_utf8(std::string& out, char32_t cp) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

}  // namespace

TokenStream tokenize(std::string_view text, const StopWords& stop_words) {
    TokenStream out;
    std::string current;
    auto flush = [&] {
        if (!current.empty() && !stop_words.contains(current)) out.push_back(current);
        current.clear();
    };
    std::size_t i = 0;
    while (i < text.size()) {
        char32_t cp = next_code_point(text, i);
        if (is_word_char(cp)) {
            append_utf8(current, to_lower(cp));
        } else {
            flush();
        }
    }
    flush();
    return out;
}

TfidfModel tfidf_fit(std::span<const TokenStream> documents) {
    if (documents.empty()) throw EmptyInputError("tfidf_fit: no documents");
    TfidfModel model;
    model.document_count = documents.size();
    // Vocabulary indices are assigned in lexical term order.
    for (const auto& doc : documents) {
        for (const auto& t : doc) model.vocabulary.emplace(t, 0);
    }
    std::size_t next = 0;
    for (auto& [term, index] : model.vocabulary) index = next++;
    model.document_frequency.assign(next, 0);
    std::vector<std::size_t> last_seen(next, static_cast<std::size_t>(-1));
    for (std::size_t d = 0; d < documents.size(); ++d) {
        for (const auto& t : documents[d]) {
            auto idx = model.vocabulary.at(t);
            if (last_seen[idx] != d) {
                last_seen[idx] = d;
                ++model.document_frequency[idx];
            }
        }
    }
    return model;
}

SparseVector tfidf_vector(const TfidfModel& model, const TokenStream& doc) {
    if (doc.empty()) throw EmptyInputError("tfidf_vector: empty document");
    std::map<std::size_t, std::size_t> counts;
    for (const auto& t : doc) {
        auto it = model.vocabulary.find(t);
        if (it != model.vocabulary.end()) ++counts[it->second];
    }
    const double total = static_cast<double>(doc.size());
    const double k = static_cast<double>(model.document_count);
    SparseVector out;
    out.reserve(counts.size());
    for (auto [index, n] : counts) {
        double kt = static_cast<double>(model.document_frequency[index]);
        out.push_back({index, (static_cast<double>(n) / total) * (1.0 + std::log(k / kt))});
    }
    return out;
}

double dot(std::span<const double> v, std::span<const double> w) {
    if (v.size() != w.size()) {
        throw DimensionError("vector dimension mismatch: " + std::to_string(v.size()) + " vs " +
                             std::to_string(w.size()));
    }
    double s = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) s += v[i] * w[i];
    return s;
}

double norm(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

double cosine_from_parts(double d, double squared_norm_v, double squared_norm_w) {
    if (squared_norm_v == 0.0 || squared_norm_w == 0.0) return 0.0;
    // sqrt of the product keeps cosine(v, v) exactly 1
    return std::clamp(d / std::sqrt(squared_norm_v * squared_norm_w), -1.0, 1.0);
}

double cosine(std::span<const double> v, std::span<const double> w) {
    double d = dot(v, w);
    return cosine_from_parts(d, dot(v, v), dot(w, w));
}

double cosine(const SparseVector& v, const SparseVector& w) {
    double d = 0.0;
    std::size_t i = 0, j = 0;
    while (i < v.size() && j < w.size()) {
        if (v[i].index == w[j].index) {
            d += v[i].weight * w[j].weight;
            ++i;
            ++j;
        } else if (v[i].index < w[j].index) {
            ++i;
        } else {
            ++j;
        }
    }
    double nv = 0.0, nw = 0.0;
    for (const auto& e : v) nv += e.weight * e.weight;
    for (const auto& e : w) nw += e.weight * e.weight;
    return cosine_from_parts(d, nv, nw);
}

}  // namespace riskbench
