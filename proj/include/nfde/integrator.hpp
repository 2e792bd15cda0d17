#pragma once

#include <functional>
#include <string_view>
#include <vector>

#include "nfde/history.hpp"
#include "nfde/model.hpp"
#include "nfde/trajectory.hpp"

namespace nfde {

enum class Scheme { Euler, Heun, Rk4 };

std::string_view to_string(Scheme scheme);
/// Accepts "euler", "heun", "rk4"; throws Parse otherwise.
Scheme parse_scheme(std::string_view name);

struct IntegratorOptions {
  Scheme scheme = Scheme::Heun;
  /// Run step; 0 means the model grid step. Must divide the grid step.
  double step = 0.0;
  double T = 10.0;
  /// Recovery residual bound, relative to max(1, |w|).
  double recovery_tol = 1e-12;
  std::size_t max_iterations = 100;
  /// Refuse models whose C3 or C4 check fails.
  bool enforce_validation = true;
  bool record_mass = true;
};

/// Advances w = D z_t with the chosen explicit scheme on w' = F(t, z_t) and
/// recovers z(t) = w(t) + sum_j int [d nu_ij] z_j(t + s) after each stage.
/// Stage histories interpolate linearly between the last state and the
/// provisional stage state.
Trajectory integrate(const CompartmentalModel& model, const HistoryFn& initial, const IntegratorOptions& opts);

/// G(t, y) = F(t, D^-1 y) for the retarded equation satisfied by y = D^ z.
using FdeField = std::function<std::vector<double>(double, const HistoryFn&)>;
FdeField transform_to_fde(const CompartmentalModel& model, double tol = 1e-12);

/// Integrates y' = G(t, y_t) from y_0 = D^ phi with a plain delay stepper
/// (euler or heun), inverting the stored y-history at every stage, and maps
/// back to z. Slow by design; kept as an independent check on integrate().
Trajectory integrate_transformed(const CompartmentalModel& model, const HistoryFn& initial,
                                 const IntegratorOptions& opts);

}  // namespace nfde
