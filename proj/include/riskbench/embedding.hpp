#pragma once

#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "riskbench/kernels.hpp"
#include "riskbench/text.hpp"

namespace riskbench {

enum class BackendKind { WordAverage, PrecomputedSentence };

struct Embedding {
    DenseVector vector;
    bool all_oov = false;        // no token had a vector
    bool used_fallback = false;  // sentence table missed, word backend used
};

/// Read-only text -> vector table: either per-token vectors that get
/// averaged, or whole-sentence vectors computed offline.
class EmbeddingBackend {
public:
    /// Textual word-vector format: header "<count> <dim>", then one
    /// "<token> f1 ... fd" line per token. Duplicate tokens: last wins,
    /// a warning is appended to `warnings` when given.
    static EmbeddingBackend load_word_vectors(const std::filesystem::path& path,
                                              std::vector<std::string>* warnings = nullptr);

    /// JSON Lines, one {"text": ..., "vector": [...]} per line. Keys are
    /// stored under normalize_text().
    static EmbeddingBackend load_sentence_vectors(const std::filesystem::path& path);

    static EmbeddingBackend from_words(std::size_t dimension,
                                       std::unordered_map<std::string, DenseVector> table);
    static EmbeddingBackend from_sentences(std::size_t dimension,
                                           std::unordered_map<std::string, DenseVector> table);

    BackendKind kind() const { return kind_; }
    std::size_t dimension() const { return dimension_; }
    std::size_t size() const { return table_.size(); }

    /// Exact key lookup; nullptr on miss.
    const DenseVector* find(std::string_view key) const;

private:
    EmbeddingBackend(BackendKind kind, std::size_t dimension, std::unordered_map<std::string, DenseVector> table);

    BackendKind kind_;
    std::size_t dimension_;
    std::unordered_map<std::string, DenseVector> table_;
};

/// Word backend: mean of in-vocabulary token vectors (zero vector with
/// all_oov when none). Sentence backend: lookup of normalize_text(text),
/// MissingEmbeddingError on a miss.
Embedding embed_text(const EmbeddingBackend& backend, std::string_view text, const StopWords& stop_words = {});

/// Backend plus stop-words plus an optional word-average fallback used
/// when a sentence-table lookup misses.
class TextEncoder {
public:
    TextEncoder(std::shared_ptr<const EmbeddingBackend> primary, StopWords stop_words,
                std::shared_ptr<const EmbeddingBackend> fallback = nullptr);

    Embedding encode(std::string_view text) const;
    std::vector<Embedding> encode_all(std::span<const std::string> texts, Parallelism par = {}) const;

    const EmbeddingBackend& primary() const { return *primary_; }
    const StopWords& stop_words() const { return stop_words_; }
    std::size_t dimension() const { return primary_->dimension(); }

private:
    std::shared_ptr<const EmbeddingBackend> primary_;
    std::shared_ptr<const EmbeddingBackend> fallback_;
    StopWords stop_words_;
};

}  // namespace riskbench
