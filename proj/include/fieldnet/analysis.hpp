#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "fieldnet/core.hpp"
#include "fieldnet/fieldnode.hpp"

namespace fieldnet::analysis {

// Exact time-weighted mean current over one duty cycle.
inline double average_current(const node::PowerProfile& p, const node::DutyCycle& d) {
  node::validate(p);
  if (d.awake_s < 0 || d.sleep_s < 0 || d.awake_s + d.sleep_s <= 0)
    throw ValidationError("duty cycle must have a positive period");
  return (d.awake_s * p.active_mA + d.sleep_s * p.sleep_mA) / (d.awake_s + d.sleep_s);
}

struct LifetimePlan {
  double capacity_mAh = 0;
  double avg_mA = 0;
  double derating = 0.7;
  double hours = 0;
};

// Planning lifetime: usable capacity (after derating) over mean current.
inline double battery_life(double capacity_mAh, double avg_mA, double derating = 0.7) {
  if (!(capacity_mAh > 0 && avg_mA > 0)) throw ValidationError("capacity and current must be > 0");
  if (!(derating > 0 && derating <= 1)) throw ValidationError("derating must lie in (0, 1]");
  return capacity_mAh / avg_mA * derating;
}

inline LifetimePlan plan(double capacity_mAh, const node::PowerProfile& p, const node::DutyCycle& d,
                         double derating = 0.7) {
  LifetimePlan out;
  out.capacity_mAh = capacity_mAh;
  out.avg_mA = average_current(p, d);
  out.derating = derating;
  out.hours = battery_life(capacity_mAh, out.avg_mA, derating);
  return out;
}

// ---------------------------------------------------------------------------
// Cheap-vs-reference calibration

struct SeriesPoint {
  std::int64_t t = 0;
  double value = 0;
};

using Series = std::vector<SeriesPoint>;

struct CalibrationFit {
  double slope = 0;
  double intercept = 0;
  double r_squared = 0;
  std::size_t n_points = 0;
};

// Pairs each cheap sample with the nearest reference sample no further than
// `tolerance_s` away. Both inputs are sorted by time first.
inline std::vector<std::pair<double, double>> join_nearest(Series cheap, Series reference, std::int64_t tolerance_s) {
  auto by_t = [](const SeriesPoint& a, const SeriesPoint& b) { return a.t < b.t; };
  std::stable_sort(cheap.begin(), cheap.end(), by_t);
  std::stable_sort(reference.begin(), reference.end(), by_t);
  std::vector<std::pair<double, double>> out;
  if (reference.empty()) return out;
  std::size_t j = 0;
  for (const auto& c : cheap) {
    while (j + 1 < reference.size() && reference[j + 1].t <= c.t) ++j;
    std::size_t best = j;
    if (j + 1 < reference.size() && std::llabs(reference[j + 1].t - c.t) < std::llabs(reference[j].t - c.t))
      best = j + 1;
    if (std::llabs(reference[best].t - c.t) <= tolerance_s) out.emplace_back(c.value, reference[best].value);
  }
  return out;
}

// Ordinary least squares, reference ~ slope * cheap + intercept, on centred sums.
inline CalibrationFit fit_pairs(const std::vector<std::pair<double, double>>& xy) {
  if (xy.size() < 2) throw ValidationError("calibration needs at least 2 joined points");
  const double n = static_cast<double>(xy.size());
  double mx = 0, my = 0;
  for (const auto& [x, y] : xy) {
    mx += x;
    my += y;
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0, syy = 0;
  for (const auto& [x, y] : xy) {
    sxx += (x - mx) * (x - mx);
    sxy += (x - mx) * (y - my);
    syy += (y - my) * (y - my);
  }
  if (!(sxx > 0)) throw ValidationError("calibration regressor has zero variance");
  CalibrationFit f;
  f.n_points = xy.size();
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  if (syy > 0) {
    double ss_res = 0;
    for (const auto& [x, y] : xy) {
      const double e = y - (f.slope * x + f.intercept);
      ss_res += e * e;
    }
    f.r_squared = std::clamp(1.0 - ss_res / syy, 0.0, 1.0);
  } else {
    f.r_squared = 1.0;
  }
  return f;
}

inline CalibrationFit fit_calibration(const Series& cheap, const Series& reference, std::int64_t tolerance_s) {
  return fit_pairs(join_nearest(cheap, reference, tolerance_s));
}

// Default join tolerance: half the cheap series' median sampling interval.
inline std::int64_t half_period_tolerance(const Series& s) {
  if (s.size() < 2) return 0;
  std::vector<std::int64_t> gaps;
  Series sorted = s;
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.t < b.t; });
  for (std::size_t i = 1; i < sorted.size(); ++i) gaps.push_back(sorted[i].t - sorted[i - 1].t);
  std::nth_element(gaps.begin(), gaps.begin() + static_cast<std::ptrdiff_t>(gaps.size() / 2), gaps.end());
  return gaps[gaps.size() / 2] / 2;
}

inline CalibrationFit fit_calibration(const Series& cheap, const Series& reference) {
  return fit_calibration(cheap, reference, half_period_tolerance(cheap));
}

}  // namespace fieldnet::analysis
