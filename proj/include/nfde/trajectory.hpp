#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "nfde/history.hpp"

namespace nfde {

/// Time series on t_n = n * step produced by a forward solve.
///
/// The full past is kept: the initial history (resampled to the run step)
/// followed by every computed state, so z_t can be rebuilt at any grid time.
/// Alongside z it records the neutral coordinate w(t) = D z_t and, for model
/// runs, the total mass M(t).
class Trajectory {
 public:
  Trajectory() = default;
  /// `initial` must live on a grid whose step is an integer multiple of `step`.
  Trajectory(const HistoryFn& initial, double step);

  std::size_t dim() const noexcept { return past_.size(); }
  /// Number of stored times, t_0 = 0 included.
  std::size_t size() const noexcept { return w_.empty() ? 0 : w_.front().size(); }
  double step() const noexcept { return step_; }
  double time(std::size_t n) const noexcept { return static_cast<double>(n) * step_; }
  double end_time() const noexcept { return size() == 0 ? 0.0 : time(size() - 1); }

  double z(std::size_t i, std::size_t n) const { return past_[i][offset_ + n]; }
  double w(std::size_t i, std::size_t n) const { return w_[i][n]; }
  double mass(std::size_t n) const { return mass_.at(n); }
  bool has_mass() const noexcept { return !mass_.empty(); }
  std::vector<double> state(std::size_t n) const;
  std::vector<double> neutral(std::size_t n) const;

  const HistoryFn& initial() const noexcept { return initial_; }
  /// Samples covering [-H, t_n] of component i.
  const std::vector<std::vector<double>>& past() const noexcept { return past_; }
  std::size_t offset() const noexcept { return offset_; }

  /// View of z_{t_n}; when `head` is given it is the provisional state at
  /// position offset + n + `fraction`, one stage beyond the stored samples.
  HistoryView view(std::size_t n, double fraction = 0.0, const double* head = nullptr) const;
  /// z_{t_n} truncated to the initial horizon, on the run step.
  HistoryFn history_at(std::size_t n) const;

  /// Appends the state at t_{size()}; the first call records t_0 (z is
  /// already present from the initial history).
  void push(const std::vector<double>& z, const std::vector<double>& w);
  /// Overwrites the most recent state (used by recovery corrections).
  void replace_last(const std::vector<double>& z);
  void push_mass(double m) { mass_.push_back(m); }

  // Run metadata.
  std::string scheme;
  std::size_t recovery_iterations = 0;
  double max_residual = 0.0;
  double tail_mass = 0.0;

 private:
  HistoryFn initial_;
  double step_ = 0.0;
  std::size_t offset_ = 0;
  std::vector<std::vector<double>> past_;
  std::vector<double> before_;
  std::vector<std::vector<double>> w_;
  std::vector<double> mass_;
};

/// Resamples a history onto a finer step dividing its own (linear interpolation).
HistoryFn refine(const HistoryFn& x, double step);

}  // namespace nfde
