#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "riskbench/text.hpp"

namespace riskbench {

enum class TTestVariant { Welch, Pooled };

std::string_view to_string(TTestVariant v);

struct TTestResult {
    double statistic = 0.0;
    double degrees_of_freedom = 0.0;
    double p_value = 1.0;  // two-sided
    TTestVariant variant = TTestVariant::Welch;
};

double mean(std::span<const double> xs);
/// Sample variance (n - 1 denominator).
double sample_variance(std::span<const double> xs);

/// Two-sided two-sample t-test of mean(a) - mean(b). Each group needs at
/// least 2 values and the groups may not both have zero variance.
TTestResult two_sample_t_test(std::span<const double> a, std::span<const double> b,
                              TTestVariant variant = TTestVariant::Welch);

struct HotellingResult {
    double t_squared = 0.0;
    std::size_t size_a = 0;
    std::size_t size_b = 0;
    std::size_t dimension = 0;
    double alpha = 0.05;
    double critical_value = 0.0;  // T^2 limit at alpha
    double p_value = 1.0;
    bool significant = false;
    std::vector<double> pooled_sd;  // per-dimension z-score divisors
};

/// Two-sample Hotelling T^2 on points of equal dimension. Columns are
/// divided by the pooled per-dimension standard deviation first, then
/// T^2 = n_a n_b / (n_a + n_b) * d' S^-1 d with pooled covariance S.
/// The critical value comes from T^2 = p(n-2)/(n-p-1) F(p, n-p-1).
/// Throws SingularMatrixError when the pooled covariance is singular.
HotellingResult hotelling_t2(std::span<const DenseVector> group_a, std::span<const DenseVector> group_b,
                             double alpha = 0.05);

}  // namespace riskbench
