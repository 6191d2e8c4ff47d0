#include "amrl/stats.hpp"

#include <cmath>
#include <limits>

#include "amrl/errors.hpp"

namespace amrl::xp {

std::vector<double> moving_average(const std::vector<double>& series, long window) {
    if (window < 1) throw contract_error("moving_average: window must be >= 1");
    std::vector<double> out(series.size());
    for (std::size_t i = 0; i < series.size(); ++i) {
        const std::size_t lo = (static_cast<long>(i) + 1 > window) ? i + 1 - static_cast<std::size_t>(window) : 0;
        double s = 0.0;
        for (std::size_t k = lo; k <= i; ++k) s += series[k];
        out[i] = s / static_cast<double>(i - lo + 1);
    }
    return out;
}

double mean(const std::vector<double>& xs) {
    double s = 0.0;
    for (double x : xs) s += x;
    return s / static_cast<double>(xs.size());
}

double sample_variance(const std::vector<double>& xs) {
    const double m = mean(xs);
    double s = 0.0;
    for (double x : xs) s += (x - m) * (x - m);
    return s / static_cast<double>(xs.size() - 1);
}

namespace {

double log_beta(double a, double b) { return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b); }

// Lentz's continued fraction for the incomplete beta.
double betacf(double a, double b, double x) {
    constexpr int kMaxIter = 300;
    constexpr double kEps = 3e-16;
    constexpr double kTiny = 1e-300;

    const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < kEps) break;
    }
    return h;
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double front = std::exp(a * std::log(x) + b * std::log(1.0 - x) - log_beta(a, b));
    if (x < (a + 1.0) / (a + b + 2.0)) return front * betacf(a, b, x) / a;
    return 1.0 - std::exp(b * std::log(1.0 - x) + a * std::log(x) - log_beta(b, a)) * betacf(b, a, 1.0 - x) / b;
}

WelchResult welch_ttest(const std::vector<double>& a, const std::vector<double>& b, double alpha) {
    if (a.size() < 2 || b.size() < 2) throw contract_error("welch_ttest: need at least 2 samples per side");
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    const double ma = mean(a), mb = mean(b);
    const double va = sample_variance(a), vb = sample_variance(b);

    WelchResult r;
    const double se2 = va / na + vb / nb;
    if (se2 == 0.0) {
        // no spread on either side: identical means are indistinguishable,
        // different means are perfectly separated
        r.t = (ma == mb) ? 0.0 : std::numeric_limits<double>::infinity() * ((ma > mb) ? 1.0 : -1.0);
        r.p_value = (ma == mb) ? 1.0 : 0.0;
        r.df = na + nb - 2.0;
        r.significant = r.p_value < alpha;
        return r;
    }

    r.t = (ma - mb) / std::sqrt(se2);
    r.df = se2 * se2 / ((va / na) * (va / na) / (na - 1.0) + (vb / nb) * (vb / nb) / (nb - 1.0));
    // two-sided survival of Student's t
    const double x = r.df / (r.df + r.t * r.t);
    r.p_value = incomplete_beta(r.df / 2.0, 0.5, x);
    r.significant = r.p_value < alpha;
    return r;
}

}  // namespace amrl::xp
