#include "riskbench/kernels.hpp"

#include "riskbench/errors.hpp"

namespace riskbench {

VectorSet::VectorSet(std::span<const DenseVector> vectors) {
    if (vectors.empty()) return;
    dim_ = vectors.front().size();
    data_.reserve(vectors.size() * dim_);
    norms_.reserve(vectors.size());
    for (const auto& v : vectors) {
        if (v.size() != dim_) {
            throw DimensionError("vector set: mixed dimensions " + std::to_string(dim_) + " and " +
                                 std::to_string(v.size()));
        }
        data_.insert(data_.end(), v.begin(), v.end());
        norms_.push_back(dot(v, v));
    }
}

double cosine_at(const VectorSet& a, std::size_t i, const VectorSet& b, std::size_t j) {
    double d = dot(a.row(i), b.row(j));
    return cosine_from_parts(d, a.squared_norm(i), b.squared_norm(j));
}

namespace {

void check_dims(const VectorSet& a, const VectorSet& b) {
    if (a.size() && b.size() && a.dimension() != b.dimension()) {
        throw DimensionError("vector dimension mismatch: " + std::to_string(a.dimension()) + " vs " +
                             std::to_string(b.dimension()));
    }
}

BestMatch argmax_row(const VectorSet& queries, std::size_t q, const VectorSet& candidates) {
    BestMatch best{0, cosine_at(queries, q, candidates, 0)};
    for (std::size_t c = 1; c < candidates.size(); ++c) {
        double s = cosine_at(queries, q, candidates, c);
        if (s > best.score) best = {c, s};
    }
    return best;
}

std::size_t pair_count(std::size_t n) { return n < 2 ? 0 : n * (n - 1) / 2; }

}  // namespace

std::vector<double> cosine_matrix_serial(const VectorSet& rows, const VectorSet& cols) {
    check_dims(rows, cols);
    std::vector<double> out(rows.size() * cols.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < cols.size(); ++j) out[i * cols.size() + j] = cosine_at(rows, i, cols, j);
    }
    return out;
}

std::vector<double> cosine_matrix_omp(const VectorSet& rows, const VectorSet& cols, int jobs) {
    check_dims(rows, cols);
    std::vector<double> out(rows.size() * cols.size());
    const long long n_rows = static_cast<long long>(rows.size());
    const std::size_t n_cols = cols.size();
#pragma omp parallel for schedule(static) num_threads(jobs)
    for (long long i = 0; i < n_rows; ++i) {
        auto r = static_cast<std::size_t>(i);
        for (std::size_t j = 0; j < n_cols; ++j) out[r * n_cols + j] = cosine_at(rows, r, cols, j);
    }
    return out;
}

std::vector<double> cosine_matrix(const VectorSet& rows, const VectorSet& cols, Parallelism par) {
    return par.serial() ? cosine_matrix_serial(rows, cols) : cosine_matrix_omp(rows, cols, par.jobs);
}

std::vector<BestMatch> best_matches_serial(const VectorSet& queries, const VectorSet& candidates) {
    if (candidates.size() == 0) throw EmptyInputError("best match: no candidates");
    check_dims(queries, candidates);
    std::vector<BestMatch> out(queries.size());
    for (std::size_t q = 0; q < queries.size(); ++q) out[q] = argmax_row(queries, q, candidates);
    return out;
}

std::vector<BestMatch> best_matches_omp(const VectorSet& queries, const VectorSet& candidates, int jobs) {
    if (candidates.size() == 0) throw EmptyInputError("best match: no candidates");
    check_dims(queries, candidates);
    std::vector<BestMatch> out(queries.size());
    const long long n = static_cast<long long>(queries.size());
#pragma omp parallel for schedule(dynamic, 16) num_threads(jobs)
    for (long long q = 0; q < n; ++q) {
        out[static_cast<std::size_t>(q)] = argmax_row(queries, static_cast<std::size_t>(q), candidates);
    }
    return out;
}

std::vector<BestMatch> best_matches(const VectorSet& queries, const VectorSet& candidates, Parallelism par) {
    return par.serial() ? best_matches_serial(queries, candidates)
                        : best_matches_omp(queries, candidates, par.jobs);
}

std::vector<double> cosine_to_seed(const VectorSet& set, std::size_t seed, std::span<const std::size_t> others,
                                   Parallelism par) {
    std::vector<double> out(others.size());
    if (par.serial()) {
        for (std::size_t k = 0; k < others.size(); ++k) out[k] = cosine_at(set, seed, set, others[k]);
        return out;
    }
    const long long n = static_cast<long long>(others.size());
#pragma omp parallel for schedule(static) num_threads(par.jobs)
    for (long long k = 0; k < n; ++k) {
        auto idx = static_cast<std::size_t>(k);
        out[idx] = cosine_at(set, seed, set, others[idx]);
    }
    return out;
}

std::vector<double> pairwise_sparse_cosine_serial(std::span<const SparseVector> docs) {
    std::vector<double> out;
    out.reserve(pair_count(docs.size()));
    for (std::size_t i = 0; i < docs.size(); ++i) {
        for (std::size_t j = i + 1; j < docs.size(); ++j) out.push_back(cosine(docs[i], docs[j]));
    }
    return out;
}

std::vector<double> pairwise_sparse_cosine(std::span<const SparseVector> docs, Parallelism par) {
    if (par.serial()) return pairwise_sparse_cosine_serial(docs);
    const std::size_t n = docs.size();
    std::vector<double> out(pair_count(n));
    // Row i starts at offset i*n - i*(i+1)/2 in the packed upper triangle.
    const long long rows = static_cast<long long>(n);
#pragma omp parallel for schedule(dynamic, 1) num_threads(par.jobs)
    for (long long ii = 0; ii < rows; ++ii) {
        auto i = static_cast<std::size_t>(ii);
        std::size_t offset = i * n - i * (i + 1) / 2;
        for (std::size_t j = i + 1; j < n; ++j) out[offset + (j - i - 1)] = cosine(docs[i], docs[j]);
    }
    return out;
}

}  // namespace riskbench
