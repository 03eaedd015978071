#pragma once

#include <cmath>
#include <cstddef>
#include <span>

namespace setsim::stats {

// Two-sided 95% critical values of Student's t (0.975 quantile).
inline double t975(size_t df) {
    static constexpr double table[] = {
        12.706205, 4.302653, 3.182446, 2.776445, 2.570582, 2.446912, 2.364624, 2.306004,
        2.262157,  2.228139, 2.200985, 2.178813, 2.160369, 2.144787, 2.131450, 2.119905,
        2.109816,  2.100922, 2.093024, 2.085963, 2.079614, 2.073873, 2.068658, 2.063899,
        2.059539,  2.055529, 2.051831, 2.048407, 2.045230, 2.042272,
    };
    if (df == 0) return 0;
    if (df <= 30) return table[df - 1];
    if (df <= 40) return 2.021075;
    if (df <= 60) return 2.000298;
    if (df <= 120) return 1.979930;
    return 1.959964;
}

struct Summary {
    size_t n = 0;
    double mean = 0;
    double stddev = 0;          // sample standard deviation
    double ci95_halfwidth = 0;  // t * s / sqrt(n)
};

inline Summary summarize(std::span<const double> xs) {
    Summary s;
    s.n = xs.size();
    if (s.n == 0) return s;
    double sum = 0;
    for (double x : xs) sum += x;
    s.mean = sum / static_cast<double>(s.n);
    if (s.n < 2) return s;
    double ss = 0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    s.stddev = std::sqrt(ss / static_cast<double>(s.n - 1));
    s.ci95_halfwidth = t975(s.n - 1) * s.stddev / std::sqrt(static_cast<double>(s.n));
    return s;
}

}  // namespace setsim::stats
