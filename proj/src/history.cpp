#include "nfde/history.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "nfde/error.hpp"

namespace nfde {

HistoryView::HistoryView(const std::vector<std::vector<double>>& columns, const std::vector<double>& before,
                         double step, double origin, const double* head)
    : columns_(&columns), before_(&before), step_(step), inv_step_(1.0 / step), origin_(origin), head_(head) {}

double HistoryView::at(std::size_t j, double s) const {
  if (s == -std::numeric_limits<double>::infinity()) return (*before_)[j];
  return at_position(j, origin_ + s * inv_step_);
}

double HistoryView::at_position(std::size_t j, double pos) const {
  const std::vector<double>& col = (*columns_)[j];
  // Snap positions that are integers up to rounding so grid lookups stay exact.
  const double nearest = std::round(pos);
  if (std::abs(pos - nearest) < 1e-9) pos = nearest;
  if (pos < 0.0) return (*before_)[j];
  const double last = static_cast<double>(col.size() - 1);
  if (pos <= last) {
    const double base = std::floor(pos);
    const auto i = static_cast<std::size_t>(base);
    const double frac = pos - base;
    if (frac == 0.0 || i + 1 >= col.size()) return col[i];
    return col[i] + frac * (col[i + 1] - col[i]);
  }
  if (head_ == nullptr || pos > origin_ + 1e-9) {
    std::ostringstream msg;
    msg << "history evaluated at position " << pos << " beyond the last sample " << last;
    throw Error(ErrorKind::Precondition, msg.str());
  }
  const double frac = (origin_ - last) > 0.0 ? (pos - last) / (origin_ - last) : 1.0;
  return col.back() + frac * (head_[j] - col.back());
}

HistoryFn::HistoryFn(Grid grid, std::vector<std::vector<double>> samples, std::vector<double> before)
    : grid_(grid), samples_(std::move(samples)), before_(std::move(before)) {
  if (samples_.empty()) throw Error(ErrorKind::InvalidHistory, "history needs at least one component");
  for (const auto& col : samples_) {
    if (col.size() != grid_.steps() + 1) {
      std::ostringstream msg;
      msg << "history component has " << col.size() << " samples, expected " << grid_.steps() + 1;
      throw Error(ErrorKind::InvalidHistory, msg.str());
    }
    for (double v : col) {
      if (!std::isfinite(v)) throw Error(ErrorKind::InvalidHistory, "history samples must be finite");
    }
  }
  if (before_.empty()) {
    before_.reserve(samples_.size());
    for (const auto& col : samples_) before_.push_back(col.front());
  }
  if (before_.size() != samples_.size()) {
    throw Error(ErrorKind::InvalidHistory, "pre-horizon values must match the dimension");
  }
  for (double v : before_) {
    if (!std::isfinite(v)) throw Error(ErrorKind::InvalidHistory, "pre-horizon values must be finite");
  }
}

HistoryFn HistoryFn::constant(Grid grid, const std::vector<double>& values) {
  std::vector<std::vector<double>> cols;
  cols.reserve(values.size());
  for (double v : values) cols.emplace_back(grid.steps() + 1, v);
  return HistoryFn(grid, std::move(cols), values);
}

HistoryFn HistoryFn::from_function(Grid grid, std::size_t dim,
                                   const std::function<double(std::size_t, double)>& f) {
  const std::size_t n = grid.steps();
  std::vector<std::vector<double>> cols(dim, std::vector<double>(n + 1));
  for (std::size_t j = 0; j < dim; ++j) {
    for (std::size_t k = 0; k <= n; ++k) {
      cols[j][k] = f(j, -grid.horizon + static_cast<double>(k) * grid.step);
    }
  }
  return HistoryFn(grid, std::move(cols));
}

double HistoryFn::time_at(std::size_t k) const noexcept {
  return -grid_.horizon + static_cast<double>(k) * grid_.step;
}

std::vector<double> HistoryFn::value_at_zero() const {
  std::vector<double> out;
  out.reserve(dim());
  for (const auto& col : samples_) out.push_back(col.back());
  return out;
}

HistoryView HistoryFn::view() const {
  return HistoryView(samples_, before_, grid_.step, static_cast<double>(grid_.steps()));
}

HistoryFn HistoryFn::scaled(double factor) const {
  HistoryFn out = *this;
  for (auto& col : out.samples_) {
    for (double& v : col) v *= factor;
  }
  for (double& v : out.before_) v *= factor;
  return out;
}

void require_same_grid(const HistoryFn& x, const HistoryFn& y) {
  if (!(x.grid() == y.grid()) || x.dim() != y.dim()) {
    throw Error(ErrorKind::GridMismatch, "histories live on different grids or dimensions");
  }
}

namespace {

HistoryFn combine(const HistoryFn& a, const HistoryFn& b, double sign) {
  require_same_grid(a, b);
  std::vector<std::vector<double>> cols = a.columns();
  std::vector<double> before = a.before();
  for (std::size_t j = 0; j < a.dim(); ++j) {
    for (std::size_t k = 0; k < cols[j].size(); ++k) cols[j][k] += sign * b.sample(j, k);
    before[j] += sign * b.before(j);
  }
  return HistoryFn(a.grid(), std::move(cols), std::move(before));
}

}  // namespace

HistoryFn operator+(const HistoryFn& a, const HistoryFn& b) { return combine(a, b, 1.0); }
HistoryFn operator-(const HistoryFn& a, const HistoryFn& b) { return combine(a, b, -1.0); }

HistoryFn shift(const HistoryFn& x, double t) {
  if (t > 0.0) throw Error(ErrorKind::OffGridShift, "shift requires t <= 0");
  const double ratio = -t / x.grid().step;
  const double lag_d = std::round(ratio);
  if (std::abs(ratio - lag_d) > 1e-9) {
    std::ostringstream msg;
    msg << "shift " << t << " is not a multiple of step " << x.grid().step;
    throw Error(ErrorKind::OffGridShift, msg.str());
  }
  const auto lag = static_cast<std::size_t>(lag_d);
  std::vector<std::vector<double>> cols = x.columns();
  for (std::size_t j = 0; j < x.dim(); ++j) {
    auto& col = cols[j];
    for (std::size_t k = col.size(); k-- > 0;) {
      col[k] = k >= lag ? x.sample(j, k - lag) : x.before(j);
    }
  }
  return HistoryFn(x.grid(), std::move(cols), x.before());
}

double sup_norm(const HistoryFn& x) {
  double s = 0.0;
  for (std::size_t j = 0; j < x.dim(); ++j) {
    for (double v : x.samples(j)) s = std::max(s, std::abs(v));
    s = std::max(s, std::abs(x.before(j)));
  }
  return s;
}

double metric_d(const HistoryFn& x, const HistoryFn& y) {
  require_same_grid(x, y);
  const HistoryFn diff = x - y;
  const double horizon = diff.grid().horizon;
  const auto n_max = static_cast<std::size_t>(std::ceil(horizon - 1e-12));
  const HistoryView v = diff.view();

  auto seminorm = [&](double n) {
    // Sup of the piecewise-linear interpolant over [-n, 0]; beyond -H the
    // pre-horizon constant joins in.
    double s = 0.0;
    for (std::size_t j = 0; j < diff.dim(); ++j) {
      if (n > horizon) s = std::max(s, std::abs(diff.before(j)));
      s = std::max(s, std::abs(v.at(j, -std::min(n, horizon))));
      for (std::size_t k = 0; k < diff.size(); ++k) {
        if (diff.time_at(k) >= -n) s = std::max(s, std::abs(diff.sample(j, k)));
      }
    }
    return s;
  };

  double d = 0.0;
  double weight = 0.5;
  for (std::size_t n = 1; n <= n_max; ++n, weight *= 0.5) {
    const double s = seminorm(static_cast<double>(n));
    d += weight * s / (1.0 + s);
  }
  // Every n > n_max covers all samples and reaches before -H.
  const double full = sup_norm(diff);
  // sum_{n > n_max} 2^-n = 2^-n_max = 2 * weight
  d += 2.0 * weight * full / (1.0 + full);
  return d;
}

}  // namespace nfde
