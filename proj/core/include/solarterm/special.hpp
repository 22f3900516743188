#pragma once

namespace solarterm::special {

[[nodiscard]] double normal_cdf(double x);
/// Upper tail 1 - Phi(x), accurate for large x.
[[nodiscard]] double normal_sf(double x);
[[nodiscard]] double normal_quantile(double p);
/// Two-sided p-value of a standard-normal statistic.
[[nodiscard]] double normal_two_sided_p(double z);

[[nodiscard]] double student_t_cdf(double t, double df);
[[nodiscard]] double student_t_two_sided_p(double t, double df);
[[nodiscard]] double student_t_quantile(double p, double df);

/// Upper tail of the chi-square distribution.
[[nodiscard]] double chi_square_sf(double x, double df);

[[nodiscard]] double log_gamma(double x);
[[nodiscard]] double digamma(double x);

}  // namespace solarterm::special
