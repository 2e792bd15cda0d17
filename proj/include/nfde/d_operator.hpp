#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "nfde/history.hpp"
#include "nfde/measures.hpp"
#include "nfde/trajectory.hpp"

namespace nfde {

/// Linear operator atomic at zero, D x = x(0) - int [d nu(s)] x(s).
///
/// nu may carry no weight at lag 0, which keeps every forward step explicit.
/// The convolution inverse mu* of (delta I - nu) is computed on first use and
/// shared between copies.
class DOperator {
 public:
  DOperator() = default;
  explicit DOperator(Kernel nu);

  const Kernel& nu() const noexcept { return nu_; }
  std::size_t dim() const noexcept { return nu_.dim(); }
  const Grid& grid() const noexcept { return nu_.grid(); }
  /// c = max_i sum_j |nu_ij|(-inf, 0].
  double contraction() const noexcept { return contraction_; }
  bool contractive() const noexcept { return contraction_ < 1.0; }
  /// Deepest lag carrying mass, in time units (horizon if any tail is present).
  double depth() const noexcept { return depth_; }

  /// Truncated mu*; the first caller's tolerance fixes the truncation.
  const NeumannInverse& inverse_measure(double tol = 1e-12) const;

 private:
  struct Cache;

  Kernel nu_;
  double contraction_ = 0.0;
  double depth_ = 0.0;
  std::shared_ptr<Cache> cache_;
};

/// sum_j int [d nu_ij] x_j, which never reads x(0).
std::vector<double> neutral_memory(const DOperator& op, const HistoryView& x);

std::vector<double> apply_D(const DOperator& op, const HistoryView& x);
std::vector<double> apply_D(const DOperator& op, const HistoryFn& x);

/// (D^ x)(s) = D x_s at every grid point, pre-horizon constant included.
HistoryFn apply_Dhat(const DOperator& op, const HistoryFn& x);

struct Inversion {
  HistoryFn x;
  std::size_t iterations = 0;
  double residual = 0.0;  // sup_norm(D^ x - h), measured
};

/// Picard iteration x <- h + nu * x until sup_norm(D^ x - h) <= tol.
Inversion invert_Dhat_detailed(const DOperator& op, const HistoryFn& h, double tol = 1e-12,
                               std::size_t max_iterations = 10000);
HistoryFn invert_Dhat(const DOperator& op, const HistoryFn& h, double tol = 1e-12);

using Forcing = std::function<std::vector<double>(double)>;

/// Solves D x_t = h(t), x_0 = phi on [0, T] with the run step equal to phi's
/// grid step. The trajectory's w column holds h(t_n).
Trajectory solve_forward(const DOperator& op, const HistoryFn& phi, const Forcing& h, double T,
                         double compat_tol = 1e-9);

struct StabilityEstimate {
  std::vector<double> times;
  std::vector<double> decay;  // c(t) sampled at `times`
  double k = 0.0;             // nonhomogeneous gain
  double k_T1 = 0.0;          // finite-interval gain on h
  double k_T2 = 0.0;          // finite-interval gain on phi
  double d = 0.0;             // gain for h(0) = 0 problems
  bool certified = false;
  std::string note;

  double envelope(double t) const;
};

/// Contractive operators get the analytic envelope c^floor(t / depth) and
/// gains 1/(1-c). Otherwise `runs` seeded homogeneous solves on [0, T_max]
/// give an empirical, uncertified envelope.
StabilityEstimate estimate_stability(const DOperator& op, std::size_t runs, double T_max, std::uint64_t seed = 1);

/// D* x = (D^-1 x)(0) by fixed-point inversion.
std::vector<double> dstar_apply(const DOperator& op, const HistoryFn& x, double tol = 1e-12);
/// D* x = int [d mu*] x by quadrature against the truncated inverse measure.
std::vector<double> dstar_apply_measure(const DOperator& op, const HistoryFn& x, double tol = 1e-12);

}  // namespace nfde
