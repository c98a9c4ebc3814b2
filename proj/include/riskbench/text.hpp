#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace riskbench {

using DenseVector = std::vector<double>;
using TokenStream = std::vector<std::string>;

class StopWords {
public:
    StopWords() = default;
    explicit StopWords(std::unordered_set<std::string> words) : words_(std::move(words)) {}

    /// One word per line; blank lines and lines starting with '#' skipped.
    static StopWords load(const std::filesystem::path& path);

    bool contains(std::string_view token) const { return words_.count(std::string(token)) > 0; }
    std::size_t size() const { return words_.size(); }

private:
    std::unordered_set<std::string> words_;
};

/// Split on non-alphanumeric code points, lowercase, drop stop-words.
/// Code points outside ASCII count as word characters unless they are
/// Unicode punctuation or symbols from the common blocks.
TokenStream tokenize(std::string_view text, const StopWords& stop_words = {});

struct SparseEntry {
    std::size_t index;
    double weight;
    bool operator==(const SparseEntry&) const = default;
};

/// Entries sorted by strictly ascending index.
using SparseVector = std::vector<SparseEntry>;

struct TfidfModel {
    std::map<std::string, std::size_t> vocabulary;  // term -> dense index
    std::vector<std::size_t> document_frequency;     // k_t by index
    std::size_t document_count = 0;                  // k

    std::size_t vocabulary_size() const { return document_frequency.size(); }
};

/// Throws EmptyInputError on an empty document list.
TfidfModel tfidf_fit(std::span<const TokenStream> documents);

/// weight(t) = (n_t / N) * (1 + ln(k / k_t)); N counts every token of the
/// document, out-of-vocabulary ones included. Throws EmptyInputError on
/// an empty document.
SparseVector tfidf_vector(const TfidfModel& model, const TokenStream& doc);

/// Cosine similarity, 0 when either norm is 0. Dense overload throws
/// DimensionError on length mismatch.
double cosine(std::span<const double> v, std::span<const double> w);
/// d / sqrt(|v|^2 |w|^2) clamped to [-1, 1]; 0 when either norm is 0.
double cosine_from_parts(double d, double squared_norm_v, double squared_norm_w);
double cosine(const SparseVector& v, const SparseVector& w);

double dot(std::span<const double> v, std::span<const double> w);
double norm(std::span<const double> v);

}  // namespace riskbench
