#pragma once

#include <vector>

namespace amrl::xp {

// Trailing mean over min(window, elements so far).
std::vector<double> moving_average(const std::vector<double>& series, long window);

struct WelchResult {
    double t = 0.0;
    double df = 0.0;
    double p_value = 1.0;
    bool significant = false;
};

// Two-sided Welch two-sample t-test (unequal variances). Needs >= 2 samples
// per side. Identical zero-variance samples give p = 1.
WelchResult welch_ttest(const std::vector<double>& a, const std::vector<double>& b, double alpha = 0.05);

// Regularized incomplete beta I_x(a, b) via the standard continued fraction.
double incomplete_beta(double a, double b, double x);

double mean(const std::vector<double>& xs);
double sample_variance(const std::vector<double>& xs);

}  // namespace amrl::xp
