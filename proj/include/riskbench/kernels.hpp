#pragma once

// Pairwise cosine kernels. Every kernel has a serial reference and an
// OpenMP version; both evaluate each pair with the same arithmetic, so
// results are bit-identical for any thread count.

#include <cstddef>
#include <exception>
#include <span>
#include <vector>

#include <omp.h>

#include "riskbench/text.hpp"

namespace riskbench {

struct Parallelism {
    int jobs = 1;
    bool serial() const { return jobs <= 1; }
};

/// Run fn(i) for i in [0, n). Exceptions are captured per index and the
/// lowest-index one is rethrown after the loop.
template <class Fn>
void parallel_for(std::size_t n, Parallelism par, Fn&& fn) {
    if (par.serial() || n < 2) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::exception_ptr> errors(n);
    const long long count = static_cast<long long>(n);
#pragma omp parallel for schedule(static) num_threads(par.jobs)
    for (long long i = 0; i < count; ++i) {
        try {
            fn(static_cast<std::size_t>(i));
        } catch (...) {
            errors[static_cast<std::size_t>(i)] = std::current_exception();
        }
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

/// Row-major block of equal-length vectors with cached squared norms.
class VectorSet {
public:
    VectorSet() = default;
    explicit VectorSet(std::span<const DenseVector> vectors);

    std::size_t size() const { return norms_.size(); }
    std::size_t dimension() const { return dim_; }
    std::span<const double> row(std::size_t i) const { return {data_.data() + i * dim_, dim_}; }
    double squared_norm(std::size_t i) const { return norms_[i]; }

private:
    std::size_t dim_ = 0;
    std::vector<double> data_;
    std::vector<double> norms_;
};

/// Same value as cosine(a.row(i), b.row(j)).
double cosine_at(const VectorSet& a, std::size_t i, const VectorSet& b, std::size_t j);

struct BestMatch {
    std::size_t index = 0;
    double score = 0.0;
    bool operator==(const BestMatch&) const = default;
};

/// rows.size() x cols.size() row-major matrix of cosines.
std::vector<double> cosine_matrix_serial(const VectorSet& rows, const VectorSet& cols);
std::vector<double> cosine_matrix_omp(const VectorSet& rows, const VectorSet& cols, int jobs);
std::vector<double> cosine_matrix(const VectorSet& rows, const VectorSet& cols, Parallelism par);

/// Argmax of cosine over `candidates` for every query; ties go to the
/// lowest candidate index. Requires a non-empty candidate set.
std::vector<BestMatch> best_matches_serial(const VectorSet& queries, const VectorSet& candidates);
std::vector<BestMatch> best_matches_omp(const VectorSet& queries, const VectorSet& candidates, int jobs);
std::vector<BestMatch> best_matches(const VectorSet& queries, const VectorSet& candidates, Parallelism par);

/// Cosine of row `seed` against each listed row of the same set.
std::vector<double> cosine_to_seed(const VectorSet& set, std::size_t seed, std::span<const std::size_t> others,
                                   Parallelism par);

/// Upper-triangle (i < j) cosines of sparse vectors, in (0,1), (0,2), ...,
/// (1,2), ... order.
std::vector<double> pairwise_sparse_cosine_serial(std::span<const SparseVector> docs);
std::vector<double> pairwise_sparse_cosine(std::span<const SparseVector> docs, Parallelism par);

}  // namespace riskbench
