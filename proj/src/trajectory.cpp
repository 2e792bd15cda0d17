#include "nfde/trajectory.hpp"

#include "nfde/error.hpp"

namespace nfde {

HistoryFn refine(const HistoryFn& x, double step) {
  const std::size_t q = x.grid().refinement(step);
  if (q == 1) return x;
  const Grid fine(x.grid().step / static_cast<double>(q), x.grid().horizon);
  std::vector<std::vector<double>> cols(x.dim(), std::vector<double>(fine.steps() + 1));
  for (std::size_t j = 0; j < x.dim(); ++j) {
    for (std::size_t k = 0; k <= fine.steps(); ++k) {
      const std::size_t coarse = k / q;
      const std::size_t rem = k % q;
      if (rem == 0) {
        cols[j][k] = x.sample(j, coarse);
      } else {
        const double f = static_cast<double>(rem) / static_cast<double>(q);
        cols[j][k] = x.sample(j, coarse) + f * (x.sample(j, coarse + 1) - x.sample(j, coarse));
      }
    }
  }
  return HistoryFn(fine, std::move(cols), x.before());
}

Trajectory::Trajectory(const HistoryFn& initial, double step) : initial_(initial), step_(step) {
  const HistoryFn fine = refine(initial, step);
  step_ = fine.grid().step;
  past_ = fine.columns();
  before_ = fine.before();
  offset_ = fine.grid().steps();
  w_.assign(initial.dim(), {});
}

std::vector<double> Trajectory::state(std::size_t n) const {
  std::vector<double> out(dim());
  for (std::size_t i = 0; i < dim(); ++i) out[i] = z(i, n);
  return out;
}

std::vector<double> Trajectory::neutral(std::size_t n) const {
  std::vector<double> out(dim());
  for (std::size_t i = 0; i < dim(); ++i) out[i] = w(i, n);
  return out;
}

HistoryView Trajectory::view(std::size_t n, double fraction, const double* head) const {
  return HistoryView(past_, before_, step_, static_cast<double>(offset_ + n) + fraction, head);
}

HistoryFn Trajectory::history_at(std::size_t n) const {
  if (n >= size()) throw Error(ErrorKind::Precondition, "trajectory index out of range");
  std::vector<std::vector<double>> cols(dim());
  for (std::size_t i = 0; i < dim(); ++i) {
    cols[i].assign(past_[i].begin() + static_cast<std::ptrdiff_t>(n),
                   past_[i].begin() + static_cast<std::ptrdiff_t>(n + offset_ + 1));
  }
  return HistoryFn(Grid(step_, initial_.grid().horizon), std::move(cols), before_);
}

void Trajectory::push(const std::vector<double>& z, const std::vector<double>& w) {
  if (z.size() != dim() || w.size() != dim()) throw Error(ErrorKind::Precondition, "state dimension mismatch");
  const bool first = size() == 0;
  for (std::size_t i = 0; i < dim(); ++i) {
    if (first) {
      past_[i].back() = z[i];
    } else {
      past_[i].push_back(z[i]);
    }
    w_[i].push_back(w[i]);
  }
}

void Trajectory::replace_last(const std::vector<double>& z) {
  if (z.size() != dim() || size() == 0) throw Error(ErrorKind::Precondition, "nothing to replace");
  for (std::size_t i = 0; i < dim(); ++i) past_[i].back() = z[i];
}

}  // namespace nfde
