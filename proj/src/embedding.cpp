#include "riskbench/embedding.hpp"

#include <sstream>

#include <nlohmann/json.hpp>

#include "riskbench/errors.hpp"
#include "riskbench/util.hpp"

namespace riskbench {

EmbeddingBackend::EmbeddingBackend(BackendKind kind, std::size_t dimension,
                                   std::unordered_map<std::string, DenseVector> table)
    : kind_(kind), dimension_(dimension), table_(std::move(table)) {
    if (dimension_ == 0) throw ValidationError("embedding backend: dimension must be positive");
    if (table_.empty()) throw ValidationError("embedding backend: empty vector table");
    for (const auto& [key, vec] : table_) {
        if (vec.size() != dimension_) {
            throw DimensionError("embedding backend: vector for '" + key + "' has length " +
                                 std::to_string(vec.size()) + ", expected " + std::to_string(dimension_));
        }
    }
}

EmbeddingBackend EmbeddingBackend::from_words(std::size_t dimension,
                                              std::unordered_map<std::string, DenseVector> table) {
    return EmbeddingBackend(BackendKind::WordAverage, dimension, std::move(table));
}

EmbeddingBackend EmbeddingBackend::from_sentences(std::size_t dimension,
                                                  std::unordered_map<std::string, DenseVector> table) {
    std::unordered_map<std::string, DenseVector> normalized;
    for (auto& [k, v] : table) normalized[normalize_text(k)] = std::move(v);
    return EmbeddingBackend(BackendKind::PrecomputedSentence, dimension, std::move(normalized));
}

const DenseVector* EmbeddingBackend::find(std::string_view key) const {
    auto it = table_.find(std::string(key));
    return it == table_.end() ? nullptr : &it->second;
}

EmbeddingBackend EmbeddingBackend::load_word_vectors(const std::filesystem::path& path,
                                                     std::vector<std::string>* warnings) {
    std::istringstream in(read_file(path));
    std::string line;
    auto fail = [&](int line_no, const std::string& msg) {
        throw ParseError(path.string() + ":" + std::to_string(line_no) + ": " + msg);
    };
    if (!std::getline(in, line)) fail(1, "missing header '<vocab_size> <dimension>'");
    std::size_t declared_count = 0, dimension = 0;
    {
        std::istringstream header(line);
        long long c = -1, d = -1;
        std::string extra;
        if (!(header >> c >> d) || (header >> extra) || c < 0 || d <= 0) {
            fail(1, "malformed header '" + std::string(trim(line)) + "'");
        }
        declared_count = static_cast<std::size_t>(c);
        dimension = static_cast<std::size_t>(d);
    }

    std::unordered_map<std::string, DenseVector> table;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        auto t = trim(line);
        if (t.empty()) continue;
        std::istringstream fields{std::string(t)};
        std::string token;
        fields >> token;
        DenseVector vec;
        vec.reserve(dimension);
        std::string component;
        while (fields >> component) {
            auto v = parse_number(component);
            if (!v) fail(line_no, "non-numeric component '" + component + "'");
            vec.push_back(*v);
        }
        if (vec.size() != dimension) {
            fail(line_no, "expected " + std::to_string(dimension) + " components, found " + std::to_string(vec.size()));
        }
        auto [it, inserted] = table.insert_or_assign(token, std::move(vec));
        if (!inserted && warnings) {
            warnings->push_back(path.string() + ":" + std::to_string(line_no) + ": duplicate token '" + token +
                                "', last occurrence kept");
        }
    }
    if (warnings && table.size() != declared_count) {
        warnings->push_back(path.string() + ": header declares " + std::to_string(declared_count) + " tokens, read " +
                            std::to_string(table.size()));
    }
    if (table.empty()) throw ParseError(path.string() + ": no word vectors");
    return EmbeddingBackend(BackendKind::WordAverage, dimension, std::move(table));
}

EmbeddingBackend EmbeddingBackend::load_sentence_vectors(const std::filesystem::path& path) {
    std::istringstream in(read_file(path));
    std::string line;
    std::unordered_map<std::string, DenseVector> table;
    std::size_t dimension = 0;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        auto loc = path.string() + ":" + std::to_string(line_no);
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError(loc + ": " + e.what());
        }
        if (!j.is_object() || !j.contains("text") || !j.at("text").is_string() || !j.contains("vector") ||
            !j.at("vector").is_array()) {
            throw ParseError(loc + ": expected {\"text\": string, \"vector\": [numbers]}");
        }
        DenseVector vec;
        vec.reserve(j.at("vector").size());
        for (const auto& x : j.at("vector")) {
            if (!x.is_number()) throw ParseError(loc + ": non-numeric vector component");
            vec.push_back(x.get<double>());
        }
        if (vec.empty()) throw DimensionError(loc + ": empty vector");
        if (dimension == 0) dimension = vec.size();
        if (vec.size() != dimension) {
            throw DimensionError(loc + ": vector length " + std::to_string(vec.size()) + " differs from " +
                                 std::to_string(dimension));
        }
        auto key = normalize_text(j.at("text").get<std::string>());
        auto it = table.find(key);
        if (it != table.end()) {
            if (it->second != vec) throw ValidationError(loc + ": conflicting vectors for text '" + key + "'");
            continue;
        }
        table.emplace(std::move(key), std::move(vec));
    }
    if (table.empty()) throw ParseError(path.string() + ": no sentence vectors");
    return EmbeddingBackend(BackendKind::PrecomputedSentence, dimension, std::move(table));
}

Embedding embed_text(const EmbeddingBackend& backend, std::string_view text, const StopWords& stop_words) {
    Embedding out;
    if (backend.kind() == BackendKind::PrecomputedSentence) {
        auto key = normalize_text(text);
        const auto* v = backend.find(key);
        if (!v) throw MissingEmbeddingError("no sentence embedding for '" + key + "'");
        out.vector = *v;
        return out;
    }
    out.vector.assign(backend.dimension(), 0.0);
    std::size_t hits = 0;
    for (const auto& token : tokenize(text, stop_words)) {
        const auto* v = backend.find(token);
        if (!v) continue;
        for (std::size_t i = 0; i < v->size(); ++i) out.vector[i] += (*v)[i];
        ++hits;
    }
    if (hits == 0) {
        out.all_oov = true;
        return out;
    }
    for (double& x : out.vector) x /= static_cast<double>(hits);
    return out;
}

TextEncoder::TextEncoder(std::shared_ptr<const EmbeddingBackend> primary, StopWords stop_words,
                         std::shared_ptr<const EmbeddingBackend> fallback)
    : primary_(std::move(primary)), fallback_(std::move(fallback)), stop_words_(std::move(stop_words)) {
    if (!primary_) throw ValidationError("text encoder: no embedding backend");
    if (fallback_ && fallback_->dimension() != primary_->dimension()) {
        throw DimensionError("text encoder: fallback backend dimension " + std::to_string(fallback_->dimension()) +
                             " differs from primary " + std::to_string(primary_->dimension()));
    }
}

Embedding TextEncoder::encode(std::string_view text) const {
    if (primary_->kind() == BackendKind::PrecomputedSentence && fallback_) {
        if (!primary_->find(normalize_text(text))) {
            auto e = embed_text(*fallback_, text, stop_words_);
            e.used_fallback = true;
            return e;
        }
    }
    return embed_text(*primary_, text, stop_words_);
}

std::vector<Embedding> TextEncoder::encode_all(std::span<const std::string> texts, Parallelism par) const {
    std::vector<Embedding> out(texts.size());
    parallel_for(texts.size(), par, [&](std::size_t i) { out[i] = encode(texts[i]); });
    return out;
}

}  // namespace riskbench
