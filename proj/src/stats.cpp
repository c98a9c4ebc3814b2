#include "riskbench/stats.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>
#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "riskbench/errors.hpp"

namespace riskbench {

std::string_view to_string(TTestVariant v) { return v == TTestVariant::Welch ? "welch" : "pooled"; }

double mean(std::span<const double> xs) {
    if (xs.empty()) throw EmptyInputError("mean of empty sample");
    double s = 0.0;
    for (double x : xs) s += x;
    return s / static_cast<double>(xs.size());
}

double sample_variance(std::span<const double> xs) {
    if (xs.size() < 2) throw ValidationError("sample variance needs at least 2 values");
    double m = mean(xs);
    double s = 0.0;
    for (double x : xs) s += (x - m) * (x - m);
    return s / static_cast<double>(xs.size() - 1);
}

TTestResult two_sample_t_test(std::span<const double> a, std::span<const double> b, TTestVariant variant) {
    if (a.size() < 2 || b.size() < 2) throw ValidationError("t-test: each group needs at least 2 values");
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    const double va = sample_variance(a);
    const double vb = sample_variance(b);
    if (va == 0.0 && vb == 0.0) throw ValidationError("t-test: both groups have zero variance");
    const double diff = mean(a) - mean(b);

    TTestResult r;
    r.variant = variant;
    double se = 0.0;
    if (variant == TTestVariant::Pooled) {
        double pooled = ((na - 1.0) * va + (nb - 1.0) * vb) / (na + nb - 2.0);
        se = std::sqrt(pooled * (1.0 / na + 1.0 / nb));
        r.degrees_of_freedom = na + nb - 2.0;
    } else {
        double qa = va / na;
        double qb = vb / nb;
        se = std::sqrt(qa + qb);
        r.degrees_of_freedom = (qa + qb) * (qa + qb) / (qa * qa / (na - 1.0) + qb * qb / (nb - 1.0));
    }
    r.statistic = diff / se;
    boost::math::students_t dist(r.degrees_of_freedom);
    r.p_value = std::clamp(2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(r.statistic))), 0.0, 1.0);
    return r;
}

namespace {

Eigen::MatrixXd to_matrix(std::span<const DenseVector> points, std::size_t dim, const char* name) {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(points.size()), static_cast<Eigen::Index>(dim));
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (points[i].size() != dim) {
            throw DimensionError(std::string("hotelling: ") + name + " point " + std::to_string(i) +
                                 " has dimension " + std::to_string(points[i].size()));
        }
        for (std::size_t j = 0; j < dim; ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = points[i][j];
    }
    return m;
}

Eigen::MatrixXd scatter(const Eigen::MatrixXd& x) {
    Eigen::RowVectorXd mu = x.colwise().mean();
    Eigen::MatrixXd centered = x.rowwise() - mu;
    return centered.transpose() * centered;
}

}  // namespace

HotellingResult hotelling_t2(std::span<const DenseVector> group_a, std::span<const DenseVector> group_b,
                             double alpha) {
    if (group_a.size() < 2 || group_b.size() < 2) throw ValidationError("hotelling: each group needs at least 2 points");
    if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("hotelling: alpha must lie in (0, 1)");
    const std::size_t p = group_a.front().size();
    if (p == 0) throw DimensionError("hotelling: zero-dimensional points");
    const auto na = group_a.size();
    const auto nb = group_b.size();
    const double n_total = static_cast<double>(na + nb);
    const double df2 = n_total - static_cast<double>(p) - 1.0;
    if (df2 < 1.0) throw ValidationError("hotelling: need n_a + n_b > p + 1 points");

    Eigen::MatrixXd xa = to_matrix(group_a, p, "group A");
    Eigen::MatrixXd xb = to_matrix(group_b, p, "group B");
    Eigen::MatrixXd pooled = (scatter(xa) + scatter(xb)) / (n_total - 2.0);

    HotellingResult r;
    r.size_a = na;
    r.size_b = nb;
    r.dimension = p;
    r.alpha = alpha;
    r.pooled_sd.resize(p);
    for (std::size_t j = 0; j < p; ++j) {
        double v = pooled(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j));
        if (!(v > 0.0)) throw SingularMatrixError("hotelling: pooled covariance is singular (zero variance in dimension " + std::to_string(j) + ")");
        r.pooled_sd[j] = std::sqrt(v);
    }
    Eigen::VectorXd inv_sd(static_cast<Eigen::Index>(p));
    for (std::size_t j = 0; j < p; ++j) inv_sd(static_cast<Eigen::Index>(j)) = 1.0 / r.pooled_sd[j];

    // z-scored pooled covariance is the pooled correlation matrix
    Eigen::MatrixXd corr = inv_sd.asDiagonal() * pooled * inv_sd.asDiagonal();
    Eigen::VectorXd diff = (xa.colwise().mean() - xb.colwise().mean()).transpose();
    Eigen::VectorXd z = inv_sd.asDiagonal() * diff;

    Eigen::FullPivLU<Eigen::MatrixXd> lu(corr);
    if (std::fabs(lu.determinant()) < 1e-12 || !lu.isInvertible()) {
        throw SingularMatrixError("hotelling: pooled covariance is singular");
    }
    double quad = z.dot(lu.solve(z));
    r.t_squared = std::max(0.0, static_cast<double>(na) * static_cast<double>(nb) / n_total * quad);

    const double scale = static_cast<double>(p) * (n_total - 2.0) / df2;
    boost::math::fisher_f dist(static_cast<double>(p), df2);
    r.critical_value = scale * boost::math::quantile(dist, 1.0 - alpha);
    r.p_value = boost::math::cdf(boost::math::complement(dist, r.t_squared / scale));
    r.significant = r.t_squared > r.critical_value;
    return r;
}

}  // namespace riskbench
