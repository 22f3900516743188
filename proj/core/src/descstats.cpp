#include "solarterm/descstats.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

#include "solarterm/error.hpp"
#include "solarterm/special.hpp"

namespace solarterm {

namespace {

// Horner evaluation with coefficients in increasing order of power.
template <std::size_t N>
double poly(const std::array<double, N>& c, double x) {
  double r = 0.0;
  for (std::size_t i = N; i-- > 0;) r = r * x + c[i];
  return r;
}

bool zero_variance(std::span<const double> x) {
  const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
  return *hi - *lo <= 0.0;
}

}  // namespace

Moments moments(std::span<const double> sample) {
  const std::size_t n = sample.size();
  if (n < 2) throw DataError(fmt::format("moments need at least 2 observations (got {})", n));
  const double dn = static_cast<double>(n);
  const double mean = std::accumulate(sample.begin(), sample.end(), 0.0) / dn;
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double v : sample) {
    const double d = v - mean;
    const double d2 = d * d;
    m2 += d2;
    m3 += d2 * d;
    m4 += d2 * d2;
  }
  Moments out;
  if (zero_variance(sample)) {
    out.mean = sample.front();
    return out;
  }
  out.mean = mean;
  out.std = std::sqrt(m2 / (dn - 1.0));
  m2 /= dn;
  m3 /= dn;
  m4 /= dn;
  if (m2 > 0.0) {
    out.skewness = m3 / std::pow(m2, 1.5);
    out.kurtosis = m4 / (m2 * m2);
  }
  return out;
}

TestResult t_test_mean(std::span<const double> sample) {
  const auto m = moments(sample);
  if (!(m.std > 0.0) || zero_variance(sample)) throw DataError("t-test undefined for a zero-variance sample");
  const double n = static_cast<double>(sample.size());
  const double t = m.mean / (m.std / std::sqrt(n));
  return {t, special::student_t_two_sided_p(t, n - 1.0)};
}

TestResult shapiro_wilk(std::span<const double> sample) {
  const std::size_t n = sample.size();
  if (n < 3 || n > 5000) throw DataError(fmt::format("Shapiro-Wilk needs 3 <= n <= 5000 (got {})", n));
  std::vector<double> x(sample.begin(), sample.end());
  std::sort(x.begin(), x.end());
  const double range = x.back() - x.front();
  if (!(range > 1e-19 * std::max(1.0, std::abs(x.front())))) {
    throw DataError("Shapiro-Wilk undefined for a zero-variance sample");
  }

  static constexpr std::array<double, 6> c1 = {0.0, 0.221157, -0.147981, -2.07119, 4.434685, -2.706056};
  static constexpr std::array<double, 6> c2 = {0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633};
  static constexpr std::array<double, 4> c3 = {0.544, -0.39978, 0.025054, -6.714e-4};
  static constexpr std::array<double, 4> c4 = {1.3822, -0.77857, 0.062767, -0.0020322};
  static constexpr std::array<double, 4> c5 = {-1.5861, -0.31082, -0.083751, 0.0038915};
  static constexpr std::array<double, 3> c6 = {-0.4803, -0.082676, 0.0030302};
  static constexpr std::array<double, 2> g = {-2.273, 0.459};

  const double an = static_cast<double>(n);
  const std::size_t half = n / 2;
  // Coefficients for the upper half of the order statistics; the lower half mirrors with sign flipped.
  std::vector<double> a(half);
  if (n == 3) {
    a[0] = std::sqrt(0.5);
  } else {
    std::vector<double> m(half);
    double summ2 = 0.0;
    for (std::size_t i = 0; i < half; ++i) {
      m[i] = -special::normal_quantile((static_cast<double>(i + 1) - 0.375) / (an + 0.25));
      summ2 += m[i] * m[i];
    }
    summ2 *= 2.0;
    const double ssumm2 = std::sqrt(summ2);
    const double rsn = 1.0 / std::sqrt(an);
    const double a1 = poly(c1, rsn) + m[0] / ssumm2;
    std::size_t first = 1;
    double fac;
    if (n > 5) {
      const double a2 = m[1] / ssumm2 + poly(c2, rsn);
      fac = std::sqrt((summ2 - 2.0 * m[0] * m[0] - 2.0 * m[1] * m[1]) / (1.0 - 2.0 * a1 * a1 - 2.0 * a2 * a2));
      a[1] = a2;
      first = 2;
    } else {
      fac = std::sqrt((summ2 - 2.0 * m[0] * m[0]) / (1.0 - 2.0 * a1 * a1));
    }
    a[0] = a1;
    for (std::size_t i = first; i < half; ++i) a[i] = m[i] / fac;
  }

  std::vector<double> coef(n, 0.0);
  for (std::size_t i = 0; i < half; ++i) {
    coef[i] = -a[i];
    coef[n - 1 - i] = a[i];
  }
  const double mean_a = std::accumulate(coef.begin(), coef.end(), 0.0) / an;
  double mean_x = 0.0;
  for (double v : x) mean_x += v / range;
  mean_x /= an;
  double ssa = 0.0, ssx = 0.0, sax = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double da = coef[i] - mean_a;
    const double dx = x[i] / range - mean_x;
    ssa += da * da;
    ssx += dx * dx;
    sax += da * dx;
  }
  // 1 - W computed directly to limit rounding when W is close to 1.
  const double ssassx = std::sqrt(ssa * ssx);
  const double w1 = (ssassx - sax) * (ssassx + sax) / (ssa * ssx);
  const double w = 1.0 - w1;

  if (n == 3) {
    constexpr double pi6 = 1.90985931710274;   // 6/pi
    constexpr double stqr = 1.04719755119660;  // asin(sqrt(3/4))
    return {w, std::clamp(pi6 * (std::asin(std::sqrt(w)) - stqr), 0.0, 1.0)};
  }
  double y = std::log(w1);
  double mu, sigma;
  if (n <= 11) {
    const double gamma = poly(g, an);
    if (y >= gamma) return {w, 1e-99};
    y = -std::log(gamma - y);
    mu = poly(c3, an);
    sigma = std::exp(poly(c4, an));
  } else {
    const double ln = std::log(an);
    mu = poly(c5, ln);
    sigma = std::exp(poly(c6, ln));
  }
  return {w, special::normal_sf((y - mu) / sigma)};
}

SampleStats describe(std::span<const double> sample) {
  SampleStats s;
  s.n = static_cast<int>(sample.size());
  if (sample.empty()) return s;
  if (sample.size() == 1) {
    s.mean = sample.front();
    return s;
  }
  const auto m = moments(sample);
  s.mean = m.mean;
  s.std = m.std;
  s.skewness = m.skewness;
  s.kurtosis = m.kurtosis;
  if (!zero_variance(sample)) {
    s.t_test = t_test_mean(sample);
    if (sample.size() >= 3 && sample.size() <= 5000) s.shapiro = shapiro_wilk(sample);
  }
  return s;
}

std::vector<double> term_sample(const LabeledSeries& labeled, int order) {
  std::vector<double> out;
  const auto col = labeled.dummies.col(order - 1);
  for (Eigen::Index t = 0; t < col.size(); ++t) {
    if (col(t) != 0.0) out.push_back(labeled.returns.values[static_cast<std::size_t>(t)]);
  }
  return out;
}

std::vector<TermStatsRow> per_term_stats(const LabeledSeries& labeled) {
  if (labeled.mode.kind != LabelKind::TermDay) {
    throw UsageError("per-term statistics need term-day labels, not " + labeled.mode.describe());
  }
  std::vector<TermStatsRow> rows;
  rows.reserve(kTermCount);
  for (int k = 1; k <= kTermCount; ++k) {
    const auto sample = term_sample(labeled, k);
    TermStatsRow row;
    row.order = k;
    row.stats = describe(sample);
    if (sample.size() < 3) {
      row.flagged = true;
      row.note = fmt::format("only {} observation(s)", sample.size());
    } else if (!row.stats.skewness) {
      row.flagged = true;
      row.note = "zero variance";
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace solarterm
