#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "nfde/measures.hpp"

namespace nfde {

/// Read-only window onto sampled past values, positioned so that s = 0 falls
/// at a (possibly fractional) sample index `origin`.
///
/// Columns hold time-ascending samples spaced `step` apart. Positions before
/// index 0 take the per-component pre-horizon constant. When `origin` lies
/// beyond the last stored sample, a provisional `head` value sits at `origin`
/// and positions in between are interpolated linearly towards it; this is
/// how multi-stage integrators evaluate functionals at stage times.
class HistoryView {
 public:
  HistoryView(const std::vector<std::vector<double>>& columns, const std::vector<double>& before, double step,
              double origin, const double* head = nullptr);

  std::size_t dim() const noexcept { return columns_->size(); }
  double step() const noexcept { return step_; }
  double origin() const noexcept { return origin_; }

  /// Value of component j at s <= 0; s = -inf returns the pre-horizon value.
  double at(std::size_t j, double s) const;
  double now(std::size_t j) const { return at(j, 0.0); }
  double before(std::size_t j) const { return (*before_)[j]; }
  /// Earliest time (relative to s = 0) covered by stored samples.
  double earliest() const noexcept { return -origin_ * step_; }

 private:
  double at_position(std::size_t j, double pos) const;

  const std::vector<std::vector<double>>* columns_;
  const std::vector<double>* before_;
  double step_;
  double inv_step_;
  double origin_;
  const double* head_;
};

/// Bounded history on (-inf, 0]: samples at -H, -H+h, ..., 0 per component,
/// linear interpolation in between, and a constant value before -H.
class HistoryFn {
 public:
  HistoryFn() = default;
  /// samples[j] holds H/h + 1 time-ascending values; `before` defaults to the
  /// sample at -H.
  HistoryFn(Grid grid, std::vector<std::vector<double>> samples, std::vector<double> before = {});

  static HistoryFn constant(Grid grid, const std::vector<double>& values);
  static HistoryFn from_function(Grid grid, std::size_t dim, const std::function<double(std::size_t, double)>& f);

  std::size_t dim() const noexcept { return samples_.size(); }
  const Grid& grid() const noexcept { return grid_; }
  std::size_t size() const noexcept { return grid_.steps() + 1; }

  /// Time of sample index k.
  double time_at(std::size_t k) const noexcept;
  std::span<const double> samples(std::size_t j) const { return samples_.at(j); }
  const std::vector<std::vector<double>>& columns() const noexcept { return samples_; }
  const std::vector<double>& before() const noexcept { return before_; }
  double before(std::size_t j) const { return before_.at(j); }
  double sample(std::size_t j, std::size_t k) const { return samples_[j][k]; }

  double value(std::size_t j, double s) const { return view().at(j, s); }
  std::vector<double> value_at_zero() const;

  HistoryView view() const;

  HistoryFn scaled(double factor) const;
  friend HistoryFn operator+(const HistoryFn& a, const HistoryFn& b);
  friend HistoryFn operator-(const HistoryFn& a, const HistoryFn& b);

 private:
  Grid grid_;
  std::vector<std::vector<double>> samples_;
  std::vector<double> before_;
};

/// x_t(s) = x(t + s) for grid-aligned t <= 0.
HistoryFn shift(const HistoryFn& x, double t);

/// max over samples, pre-horizon values and components of |x|.
double sup_norm(const HistoryFn& x);

/// Compact-open metric: sum_n 2^-n |x-y|_n / (1 + |x-y|_n). Terms n <= ceil(H)
/// are evaluated on the samples; all remaining terms see the full sup norm
/// (pre-horizon constants included) and are summed in closed form.
double metric_d(const HistoryFn& x, const HistoryFn& y);

void require_same_grid(const HistoryFn& x, const HistoryFn& y);

}  // namespace nfde
