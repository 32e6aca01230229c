#pragma once

// Cauchy temporal functions of the form T_f(t, x) = t + f(x). On Minkowski
// f(x) = k x; on a metric graph f is given at vertices and interpolated
// linearly in optical arclength along each edge. T_f has a timelike gradient
// iff f is strictly 1-Lipschitz for the optical metric.

#include <cmath>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "lot/numeric.hpp"
#include "lot/spacetime.hpp"

namespace lot {

class TimeFunction {
 public:
  enum class Kind : std::uint8_t { slope, offsets };

  /// T0 = t, valid on every backend.
  static TimeFunction canonical(const Spacetime& st, std::string name = "T0") {
    if (st.is_graph())
      return TimeFunction(Kind::offsets, 0.0, std::vector<double>(st.vertex_count(), 0.0),
                          std::move(name));
    return TimeFunction(Kind::slope, 0.0, {}, std::move(name));
  }

  static TimeFunction slope(double k, std::string name = "T") {
    if (!std::isfinite(k)) throw InputError("time function slope must be finite");
    return TimeFunction(Kind::slope, k, {}, std::move(name));
  }

  static TimeFunction offsets(std::vector<double> values, std::string name = "T") {
    for (double v : values)
      if (!std::isfinite(v)) throw InputError("time function offsets must be finite");
    return TimeFunction(Kind::offsets, 0.0, std::move(values), std::move(name));
  }

  static TimeFunction offsets(const Spacetime& st, const std::map<std::string, double>& by_vertex,
                              std::string name = "T") {
    std::vector<double> values(st.vertex_count(), 0.0);
    for (std::size_t v = 0; v < st.vertex_count(); ++v) {
      auto it = by_vertex.find(st.vertex_names()[v]);
      if (it == by_vertex.end())
        throw InputError("time function '" + name + "' has no value at vertex '" +
                         st.vertex_names()[v] + "'");
      values[v] = it->second;
    }
    for (const auto& [k, _] : by_vertex)
      if (!st.vertex_index(k))
        throw InputError("time function '" + name + "' names unknown vertex '" + k + "'");
    return offsets(std::move(values), std::move(name));
  }

  [[nodiscard]] Kind kind() const { return kind_; }
  [[nodiscard]] const std::string& name() const { return name_; }
  [[nodiscard]] double slope_value() const { return slope_; }
  [[nodiscard]] const std::vector<double>& vertex_offsets() const { return offsets_; }

  [[nodiscard]] bool is_canonical() const {
    if (kind_ == Kind::slope) return slope_ == 0.0;
    for (double v : offsets_)
      if (v != 0.0) return false;
    return true;
  }

  void check_backend(const Spacetime& st) const {
    if (st.is_graph()) {
      if (kind_ != Kind::offsets)
        throw InputError("time function '" + name_ + "' needs vertex offsets on a graph");
      if (offsets_.size() != st.vertex_count())
        throw InputError("time function '" + name_ + "' is missing vertex values");
    } else if (kind_ != Kind::slope) {
      throw InputError("time function '" + name_ + "' needs a slope on Minkowski");
    }
  }

  /// The spatial part f(x).
  [[nodiscard]] double offset(const Spacetime& st, const SpatialPoint& x) const {
    switch (x.kind) {
      case SpatialPoint::Kind::line: return slope_ * x.coord;
      case SpatialPoint::Kind::vertex: return offsets_.at(x.id);
      case SpatialPoint::Kind::edge: {
        const auto& e = st.edges().at(x.id);
        const double fa = offsets_.at(e.a);
        const double fb = offsets_.at(e.b);
        return fa + (fb - fa) * (x.coord / e.length);
      }
    }
    return 0.0;
  }

  [[nodiscard]] double operator()(const Spacetime& st, const Event& p) const {
    return p.t + offset(st, p.x);
  }

  /// Spatial Lipschitz constant of f w.r.t. the optical metric.
  [[nodiscard]] double lipschitz(const Spacetime& st) const {
    if (kind_ == Kind::slope) return std::abs(slope_);
    double lip = 0.0;
    for (const auto& e : st.edges())
      lip = std::max(lip, std::abs(offsets_.at(e.b) - offsets_.at(e.a)) / e.length);
    return lip;
  }

  friend bool operator==(const TimeFunction& a, const TimeFunction& b) {
    return a.kind_ == b.kind_ && a.slope_ == b.slope_ && a.offsets_ == b.offsets_;
  }

 private:
  TimeFunction(Kind kind, double slope, std::vector<double> offsets, std::string name)
      : kind_(kind), slope_(slope), offsets_(std::move(offsets)), name_(std::move(name)) {}

  Kind kind_;
  double slope_;
  std::vector<double> offsets_;
  std::string name_;
};

using TimeFunctionRef = std::shared_ptr<const TimeFunction>;

inline TimeFunctionRef share(TimeFunction T) {
  return std::make_shared<const TimeFunction>(std::move(T));
}

struct LipschitzViolation {
  std::size_t edge = 0;  // meaningless on Minkowski
  double slope = 0.0;
};

struct TimeFunctionReport {
  bool ok = true;
  double lipschitz = 0.0;
  std::vector<LipschitzViolation> violations;
};

inline TimeFunctionReport validate(const Spacetime& st, const TimeFunction& T) {
  T.check_backend(st);
  TimeFunctionReport r;
  const double limit = 1.0 - kLipschitzMargin;
  if (T.kind() == TimeFunction::Kind::slope) {
    r.lipschitz = std::abs(T.slope_value());
    if (r.lipschitz > limit) r.violations.push_back({0, T.slope_value()});
  } else {
    for (std::size_t i = 0; i < st.edges().size(); ++i) {
      const auto& e = st.edges()[i];
      const double s =
          (T.vertex_offsets()[e.b] - T.vertex_offsets()[e.a]) / e.length;
      r.lipschitz = std::max(r.lipschitz, std::abs(s));
      if (std::abs(s) > limit) r.violations.push_back({i, s});
    }
  }
  r.ok = r.violations.empty();
  return r;
}

inline void require_valid(const Spacetime& st, const TimeFunction& T) {
  auto r = validate(st, T);
  if (!r.ok)
    throw PreconditionError("time function '" + T.name() +
                            "' is not temporal: spatial Lipschitz constant " +
                            std::to_string(r.lipschitz) + " >= 1");
}

inline double eval(const Spacetime& st, const TimeFunction& T, const Event& p) {
  return T(st, p);
}

/// The event on the level set T = tau above x.
inline Event level_event(const Spacetime& st, const TimeFunction& T, double tau,
                         const SpatialPoint& x) {
  const SpatialPoint nx = st.normalize(x);
  return Event{tau - T.offset(st, nx), nx};
}

}  // namespace lot
