#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <utility>
#include <vector>

#include "fieldnet/core.hpp"

namespace fieldnet::env {

struct GeoPoint {
  double lat = 0;
  double lon = 0;

  bool operator==(const GeoPoint&) const = default;
};

inline constexpr double kMetersPerDegreeLat = 111320.0;

// Local equirectangular offset; adequate at field scale (a few km).
inline GeoPoint offset_meters(GeoPoint p, double east_m, double north_m) {
  const double lat_rad = p.lat * std::numbers::pi / 180.0;
  return {p.lat + north_m / kMetersPerDegreeLat,
          p.lon + east_m / (kMetersPerDegreeLat * std::cos(lat_rad))};
}

// Planar distance in metres between two nearby points.
inline double distance_m(GeoPoint a, GeoPoint b) {
  const double lat_rad = 0.5 * (a.lat + b.lat) * std::numbers::pi / 180.0;
  const double dn = (b.lat - a.lat) * kMetersPerDegreeLat;
  const double de = (b.lon - a.lon) * kMetersPerDegreeLat * std::cos(lat_rad);
  return std::hypot(dn, de);
}

// ---------------------------------------------------------------------------
// Weather

struct Storm {
  Seconds start = 0;
  Seconds end = 0;
  double intensity_mm_h = 0;
  double irradiance_factor = 1.0;  // solar multiplier while the storm is active
};

struct Diurnal {
  double mean = 0;
  double amplitude = 0;
  Seconds phase = 0;
};

struct WeatherScenario {
  std::vector<Storm> storms;
  Diurnal temperature{10.0, 5.0, 0.0};
  Diurnal humidity{80.0, 10.0, 0.0};
};

inline void validate(const WeatherScenario& w) {
  for (const auto& s : w.storms) {
    if (!(s.start < s.end)) throw ValidationError("storm interval must satisfy start < end");
    if (s.intensity_mm_h < 0) throw ValidationError("storm intensity must be >= 0");
    if (s.irradiance_factor < 0 || s.irradiance_factor > 1)
      throw ValidationError("storm irradiance factor must lie in [0,1]");
  }
}

// Overlapping storms add.
inline double rainfall_at(const WeatherScenario& w, Seconds t) {
  double total = 0;
  for (const auto& s : w.storms) {
    if (t >= s.start && t < s.end) total += s.intensity_mm_h;
  }
  return total;
}

struct AirConditions {
  double temp_c;
  double humidity_pct;
};

inline double diurnal_value(const Diurnal& d, Seconds t, Seconds phase) {
  return d.mean + d.amplitude * std::sin(2.0 * std::numbers::pi * (t - phase) / kDay);
}

// Humidity follows the temperature phase; it is clamped to [0, 100].
inline AirConditions air_conditions(const WeatherScenario& w, Seconds t) {
  const double temp = diurnal_value(w.temperature, t, w.temperature.phase);
  const double hum = diurnal_value(w.humidity, t, w.temperature.phase + w.humidity.phase);
  return {temp, std::clamp(hum, 0.0, 100.0)};
}

// Fraction of full-sun solar input: a half-sine daylight curve peaking at
// midday, scaled by the darkest active storm.
inline double irradiance_at(const WeatherScenario& w, Seconds t) {
  const double daylight = std::max(0.0, std::sin(2.0 * std::numbers::pi * (t - 6.0 * kHour) / kDay));
  double storm = 1.0;
  for (const auto& s : w.storms) {
    if (t >= s.start && t < s.end) storm = std::min(storm, s.irradiance_factor);
  }
  return daylight * storm;
}

// ---------------------------------------------------------------------------
// Soil: single linear bucket.

struct SoilState {
  double theta = 0.2;
  double temp_c = 10.0;
  double theta_r = 0.05;
  double theta_sat = 0.45;
};

struct SoilParams {
  double k_in = 9.3e-7;   // theta per (mm/h * s) of rainfall
  double k_out = 3.9e-6;  // drainage rate, 1/s
  Seconds temp_lag_s = 6.0 * kHour;
};

inline void validate(const SoilState& s) {
  if (!(0.0 <= s.theta_r && s.theta_r <= s.theta_sat && s.theta_sat <= 1.0))
    throw ValidationError("soil requires 0 <= theta_r <= theta_sat <= 1");
  if (s.theta < s.theta_r || s.theta > s.theta_sat)
    throw ValidationError("soil theta outside [theta_r, theta_sat]");
}

inline SoilState step_soil(const SoilState& s, double rain_mm_h, Seconds dt, const SoilParams& p,
                           double air_temp_c) {
  if (!(dt > 0)) throw ValidationError("step_soil requires dt > 0");
  SoilState next = s;
  const double raw = s.theta + p.k_in * rain_mm_h * dt - p.k_out * (s.theta - s.theta_r) * dt;
  next.theta = std::clamp(raw, s.theta_r, s.theta_sat);
  const double alpha = 1.0 - std::exp(-dt / p.temp_lag_s);
  next.temp_c = s.temp_c + (air_temp_c - s.temp_c) * alpha;
  return next;
}

inline bool surface_flow(const SoilState& s, double rain_mm_h) {
  return s.theta >= s.theta_sat && rain_mm_h > 0;
}

// ---------------------------------------------------------------------------
// Field boundary and livestock movement.

class GeoFence {
 public:
  explicit GeoFence(std::vector<GeoPoint> polygon) : poly_(std::move(polygon)) {
    if (poly_.size() < 3) throw ValidationError("geofence needs at least 3 vertices");
    if (!is_simple(poly_)) throw ValidationError("geofence polygon self-intersects");
  }

  const std::vector<GeoPoint>& polygon() const { return poly_; }

  // Ray casting; points exactly on an edge count as whichever side the ray
  // parity lands on.
  bool contains(GeoPoint p) const {
    bool inside = false;
    for (std::size_t i = 0, j = poly_.size() - 1; i < poly_.size(); j = i++) {
      const auto& a = poly_[i];
      const auto& b = poly_[j];
      if ((a.lat > p.lat) != (b.lat > p.lat)) {
        const double lon_at = (b.lon - a.lon) * (p.lat - a.lat) / (b.lat - a.lat) + a.lon;
        if (p.lon < lon_at) inside = !inside;
      }
    }
    return inside;
  }

  GeoPoint centroid() const {
    GeoPoint c{};
    for (const auto& p : poly_) {
      c.lat += p.lat;
      c.lon += p.lon;
    }
    c.lat /= static_cast<double>(poly_.size());
    c.lon /= static_cast<double>(poly_.size());
    return c;
  }

  static bool is_simple(const std::vector<GeoPoint>& poly) {
    const std::size_t n = poly.size();
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        const bool adjacent = j == i + 1 || (i == 0 && j == n - 1);
        if (adjacent) continue;
        if (segments_cross(poly[i], poly[(i + 1) % n], poly[j], poly[(j + 1) % n])) return false;
      }
    }
    return true;
  }

 private:
  static double orient(GeoPoint a, GeoPoint b, GeoPoint c) {
    return (b.lon - a.lon) * (c.lat - a.lat) - (b.lat - a.lat) * (c.lon - a.lon);
  }

  static bool on_segment(GeoPoint a, GeoPoint b, GeoPoint p) {
    return std::min(a.lon, b.lon) <= p.lon && p.lon <= std::max(a.lon, b.lon) &&
           std::min(a.lat, b.lat) <= p.lat && p.lat <= std::max(a.lat, b.lat);
  }

  static bool segments_cross(GeoPoint p1, GeoPoint p2, GeoPoint q1, GeoPoint q2) {
    const double d1 = orient(q1, q2, p1);
    const double d2 = orient(q1, q2, p2);
    const double d3 = orient(p1, p2, q1);
    const double d4 = orient(p1, p2, q2);
    if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0)))
      return true;
    if (d1 == 0 && on_segment(q1, q2, p1)) return true;
    if (d2 == 0 && on_segment(q1, q2, p2)) return true;
    if (d3 == 0 && on_segment(p1, p2, q1)) return true;
    if (d4 == 0 && on_segment(p1, p2, q2)) return true;
    return false;
  }

  std::vector<GeoPoint> poly_;
};

enum class Behavior { lying = 0, standing = 1, walking = 2 };

inline const char* to_string(Behavior b) {
  switch (b) {
    case Behavior::lying: return "lying";
    case Behavior::standing: return "standing";
    case Behavior::walking: return "walking";
  }
  return "?";
}

struct SheepState {
  GeoPoint pos;
  double heading = 0;  // radians, 0 = north, clockwise
  double speed = 0;    // m/s
  bool lying = false;
};

struct MovementParams {
  double speed_scale = 0.3;        // mean grazing speed, m/s
  double heading_sigma = 0.6;      // radians per step
  double walking_speed = 0.25;     // at or above this the animal is walking
  double lie_down_prob = 0.002;    // per step
  double get_up_prob = 0.01;       // per step
};

inline Behavior true_behavior(const SheepState& s, const MovementParams& m) {
  if (s.lying) return Behavior::lying;
  return s.speed >= m.walking_speed ? Behavior::walking : Behavior::standing;
}

// Correlated random walk reflected at the fence. The result is always inside
// the fence provided the input was.
inline SheepState step_sheep(const SheepState& s, const GeoFence& fence, Seconds dt,
                             const MovementParams& m, Rng& rng) {
  std::normal_distribution<double> turn(0.0, m.heading_sigma);
  std::uniform_real_distribution<double> u01(0.0, 1.0);

  SheepState next = s;
  const double posture_draw = u01(rng);
  if (s.lying) {
    next.lying = posture_draw >= m.get_up_prob;
  } else {
    next.lying = posture_draw < m.lie_down_prob;
  }
  next.heading = std::remainder(s.heading + turn(rng), 2.0 * std::numbers::pi);
  next.speed = next.lying ? 0.0 : m.speed_scale * 2.0 * u01(rng);

  const double dist = next.speed * dt;
  if (dist <= 0) return next;

  auto move = [&](double heading) {
    return offset_meters(s.pos, dist * std::sin(heading), dist * std::cos(heading));
  };
  GeoPoint candidate = move(next.heading);
  if (fence.contains(candidate)) {
    next.pos = candidate;
    return next;
  }
  // Reflect: turn around. If that also leaves the fence, hold position.
  next.heading = std::remainder(next.heading + std::numbers::pi, 2.0 * std::numbers::pi);
  candidate = move(next.heading);
  next.pos = fence.contains(candidate) ? candidate : s.pos;
  return next;
}

}  // namespace fieldnet::env
