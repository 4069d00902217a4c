#pragma once

// Synthetic lab drying run shared by the analysis tests and the acceptance
// binary: a saturated bucket drains with no rain; the cheap sensor reads theta
// in percent, the reference is 0.8*cheap + 3 plus Gaussian noise at 2% of the
// reference range.

#include <algorithm>
#include <random>

#include "fieldnet/analysis.hpp"
#include "fieldnet/environment.hpp"

namespace drying {

struct Run {
  fieldnet::analysis::Series cheap, reference;
};

inline Run generate(std::uint64_t seed, double slope = 0.8, double intercept = 3.0, double noise_frac = 0.02,
                    int days = 7, std::int64_t period = 300) {
  using namespace fieldnet;
  env::SoilState s;
  s.theta = s.theta_sat;
  const env::SoilParams p;
  Run run;
  std::vector<double> clean;
  for (std::int64_t t = 0; t <= days * 86400; t += period) {
    run.cheap.push_back({t, s.theta * 100.0});
    clean.push_back(slope * s.theta * 100.0 + intercept);
    s = env::step_soil(s, 0.0, static_cast<double>(period), p, 12.0);
  }
  const auto [lo, hi] = std::minmax_element(clean.begin(), clean.end());
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> noise(0.0, noise_frac * (*hi - *lo));
  for (std::size_t i = 0; i < clean.size(); ++i) run.reference.push_back({run.cheap[i].t, clean[i] + noise(gen)});
  return run;
}

// Textbook raw-sum least squares, deliberately not the centred form.
struct Ols {
  double slope, intercept, r2;
};

inline Ols raw_sum_ols(const fieldnet::analysis::Series& x, const fieldnet::analysis::Series& y) {
  long double n = x.size(), sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i].value;
    sy += y[i].value;
    sxx += x[i].value * x[i].value;
    sxy += x[i].value * y[i].value;
    syy += y[i].value * y[i].value;
  }
  const long double b = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  const long double a = (sy - b * sx) / n;
  const long double r = (n * sxy - sx * sy) / std::sqrt((n * sxx - sx * sx) * (n * syy - sy * sy));
  return {static_cast<double>(b), static_cast<double>(a), static_cast<double>(r * r)};
}

}  // namespace drying
