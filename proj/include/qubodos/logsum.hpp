#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

namespace qubodos {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// log(sum_i exp(terms[i])), adding the scaled summands from the smallest
// to the largest. Empty input or all -inf gives -inf. The span is reordered.
inline double log_sum_exp_sorted(std::span<double> terms)
{
    if (terms.empty()) {
        return kNegInf;
    }
    std::sort(terms.begin(), terms.end());
    const double top = terms.back();
    if (top == kNegInf) {
        return kNegInf;
    }
    double sum = 0.0;
    for (double t : terms) {
        sum += std::exp(t - top);
    }
    return top + std::log(sum);
}

inline double log_sum_exp(std::vector<double> terms)
{
    return log_sum_exp_sorted(std::span<double>(terms));
}

// log(exp(a) + exp(b))
inline double log_add_exp(double a, double b)
{
    if (a < b) {
        std::swap(a, b);
    }
    if (b == kNegInf) {
        return a;
    }
    return a + std::log1p(std::exp(b - a));
}

// Sum with summands ordered by increasing magnitude.
inline double sorted_sum(std::vector<double> terms)
{
    std::sort(terms.begin(), terms.end(),
              [](double x, double y) { return std::abs(x) < std::abs(y); });
    double sum = 0.0;
    for (double t : terms) {
        sum += t;
    }
    return sum;
}

}  // namespace qubodos
