#include <doctest.h>

#include <map>
#include <random>
#include <stdexcept>

#include "riskbench/kernels.hpp"
#include "riskbench/text.hpp"

using namespace riskbench;

namespace {

std::vector<DenseVector> random_vectors(std::mt19937_64& rng, std::size_t n, std::size_t dim) {
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<DenseVector> out(n, DenseVector(dim));
    for (auto& v : out) {
        for (auto& x : v) x = g(rng);
    }
    return out;
}

}  // namespace

TEST_CASE("cosine_at agrees with dense cosine") {
    std::mt19937_64 rng(1);
    auto a = random_vectors(rng, 10, 6), b = random_vectors(rng, 7, 6);
    VectorSet sa(a), sb(b);
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (std::size_t j = 0; j < b.size(); ++j) CHECK(cosine_at(sa, i, sb, j) == cosine(a[i], b[j]));
        CHECK(cosine_at(sa, i, sa, i) == 1.0);
    }
}

TEST_CASE("serial and OpenMP kernels are bit-identical") {
    std::mt19937_64 rng(99);
    auto q = random_vectors(rng, 64, 16), c = random_vectors(rng, 45, 16);
    VectorSet sq(q), sc(c);
    auto ref = cosine_matrix_serial(sq, sc);
    auto ref_best = best_matches_serial(sq, sc);
    for (int jobs : {1, 2, 3, 8}) {
        CHECK(cosine_matrix_omp(sq, sc, jobs) == ref);
        CHECK(best_matches_omp(sq, sc, jobs) == ref_best);
        CHECK(cosine_matrix(sq, sc, {jobs}) == ref);
    }

    std::vector<SparseVector> docs;
    std::uniform_int_distribution<std::size_t> idx(0, 30);
    std::uniform_real_distribution<double> w(0.1, 2.0);
    for (int d = 0; d < 20; ++d) {
        std::map<std::size_t, double> m;
        for (int k = 0; k < 6; ++k) m[idx(rng)] = w(rng);
        SparseVector v;
        for (auto [i, x] : m) v.push_back({i, x});
        docs.push_back(v);
    }
    auto pairs = pairwise_sparse_cosine_serial(docs);
    CHECK(pairs.size() == 20 * 19 / 2);
    CHECK(pairwise_sparse_cosine(docs, {4}) == pairs);
    CHECK(pairs[0] == cosine(docs[0], docs[1]));
    CHECK(pairs[19] == cosine(docs[1], docs[2]));
}

TEST_CASE("best match is the argmax with lowest-index ties") {
    std::vector<DenseVector> cands{{1, 0}, {0, 1}, {0, 2}, {1, 0}};
    std::vector<DenseVector> qs{{0, 1}, {1, 0}, {1, 1}};
    VectorSet sc(cands), sq(qs);
    auto best = best_matches_serial(sq, sc);
    CHECK(best[0].index == 1);
    CHECK(best[1].index == 0);
    CHECK(best[1].score == 1.0);
    CHECK(best[2].index == 0);
    CHECK(best_matches_omp(sq, sc, 3) == best);
}

TEST_CASE("best match exhaustive rescan") {
    std::mt19937_64 rng(17);
    auto q = random_vectors(rng, 40, 5), c = random_vectors(rng, 150, 5);
    VectorSet sq(q), sc(c);
    auto best = best_matches(sq, sc, {2});
    for (std::size_t i = 0; i < q.size(); ++i) {
        for (std::size_t j = 0; j < c.size(); ++j) CHECK_FALSE(cosine(q[i], c[j]) > best[i].score);
        CHECK(best[i].score == cosine(q[i], c[best[i].index]));
    }
}

TEST_CASE("cosine_to_seed") {
    std::mt19937_64 rng(4);
    auto v = random_vectors(rng, 12, 3);
    VectorSet s(v);
    std::vector<std::size_t> others{3, 5, 11};
    auto serial = cosine_to_seed(s, 2, others, {1});
    CHECK(cosine_to_seed(s, 2, others, {4}) == serial);
    for (std::size_t k = 0; k < others.size(); ++k) CHECK(serial[k] == cosine(v[2], v[others[k]]));
}

TEST_CASE("parallel_for rethrows the lowest-index exception") {
    std::vector<int> hit(100, 0);
    try {
        parallel_for(100, {4}, [&](std::size_t i) {
            hit[i] = 1;
            if (i == 30 || i == 70) throw std::runtime_error("at " + std::to_string(i));
        });
        FAIL("expected an exception");
    } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()) == "at 30");
    }
    int total = 0;
    for (int h : hit) total += h;
    CHECK(total == 100);
}
