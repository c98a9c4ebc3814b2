// Serial vs OpenMP timings for the pairwise cosine kernels.
#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <random>
#include <vector>

#include <omp.h>

#include "riskbench/kernels.hpp"

using namespace riskbench;

namespace {

std::vector<DenseVector> random_vectors(std::size_t n, std::size_t dim, std::mt19937_64& rng) {
    std::normal_distribution<double> dist(0.0, 1.0);
    std::vector<DenseVector> out(n, DenseVector(dim));
    for (auto& v : out) {
        for (auto& x : v) x = dist(rng);
    }
    return out;
}

std::vector<SparseVector> random_sparse(std::size_t n, std::size_t vocab, std::size_t nnz, std::mt19937_64& rng) {
    std::uniform_int_distribution<std::size_t> pick(0, vocab - 1);
    std::uniform_real_distribution<double> weight(0.01, 1.0);
    std::vector<SparseVector> out(n);
    for (auto& doc : out) {
        std::vector<std::size_t> idx;
        for (std::size_t k = 0; k < nnz; ++k) idx.push_back(pick(rng));
        std::sort(idx.begin(), idx.end());
        idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
        for (auto i : idx) doc.push_back({i, weight(rng)});
    }
    return out;
}

template <class Fn>
double time_ms(Fn&& fn, int reps) {
    auto start = std::chrono::steady_clock::now();
    for (int r = 0; r < reps; ++r) fn();
    std::chrono::duration<double, std::milli> d = std::chrono::steady_clock::now() - start;
    return d.count() / reps;
}

void row(const char* name, double serial, double parallel, bool same) {
    std::printf("%-22s %10.3f %10.3f %8.2fx  %s\n", name, serial, parallel, serial / parallel, same ? "match" : "MISMATCH");
}

}  // namespace

int main(int argc, char** argv) {
    int jobs = argc > 1 ? std::atoi(argv[1]) : omp_get_max_threads();
    std::size_t n = argc > 2 ? static_cast<std::size_t>(std::atol(argv[2])) : 1500;
    if (jobs < 1 || n < 2) {
        std::fprintf(stderr, "usage: bench_kernels [jobs] [rows]\n");
        return 2;
    }
    std::mt19937_64 rng(20240601);
    auto a = random_vectors(n, 300, rng);
    auto b = random_vectors(70, 300, rng);
    VectorSet rows(a), cats(b);
    auto docs = random_sparse(n / 3, 5000, 120, rng);
    Parallelism par{jobs};
    const int reps = 3;

    std::printf("rows=%zu jobs=%d\n%-22s %10s %10s %9s\n", n, jobs, "kernel", "serial ms", "omp ms", "speedup");

    std::vector<double> m1, m2;
    double s = time_ms([&] { m1 = cosine_matrix_serial(rows, rows); }, reps);
    double p = time_ms([&] { m2 = cosine_matrix(rows, rows, par); }, reps);
    row("cosine_matrix", s, p, m1 == m2);

    std::vector<BestMatch> b1, b2;
    s = time_ms([&] { b1 = best_matches_serial(rows, cats); }, reps);
    p = time_ms([&] { b2 = best_matches(rows, cats, par); }, reps);
    row("best_matches", s, p, b1 == b2);

    std::vector<std::size_t> others;
    for (std::size_t i = 1; i < n; ++i) others.push_back(i);
    std::vector<double> c1, c2;
    s = time_ms([&] { c1 = cosine_to_seed(rows, 0, others, {}); }, reps);
    p = time_ms([&] { c2 = cosine_to_seed(rows, 0, others, par); }, reps);
    row("cosine_to_seed", s, p, c1 == c2);

    std::vector<double> d1, d2;
    s = time_ms([&] { d1 = pairwise_sparse_cosine_serial(docs); }, reps);
    p = time_ms([&] { d2 = pairwise_sparse_cosine(docs, par); }, reps);
    row("pairwise_sparse", s, p, d1 == d2);
    return 0;
}
