#include "mesa/coefficients.hpp"

#include <algorithm>
#include <cmath>

namespace mesa {

SourceCoefficient::SourceCoefficient(std::vector<Stage> stages, double bound)
    : stages_(std::move(stages)), bound_(bound) {
  if (stages_.empty()) throw std::invalid_argument("source: needs at least one stage");
  if (!(bound_ > 0.0)) throw std::invalid_argument("source: bound must be positive");
  if (stages_.front().t_start != 0.0)
    throw std::invalid_argument("source: first stage must start at t=0");
  for (std::size_t i = 1; i < stages_.size(); ++i)
    if (!(stages_[i].t_start > stages_[i - 1].t_start))
      throw std::invalid_argument("source: stage times must be strictly increasing");
  for (const auto& s : stages_) {
    if (std::holds_alternative<double>(s.profile)) {
      if (std::abs(std::get<double>(s.profile)) > bound_)
        throw std::invalid_argument("source: stage value exceeds bound");
    } else {
      if (std::get<Field>(s.profile).max_abs() > bound_)
        throw std::invalid_argument("source: stage profile exceeds bound");
    }
  }
}

SourceCoefficient SourceCoefficient::constant(double value, double bound) {
  return SourceCoefficient({Stage{0.0, value}}, bound);
}

std::size_t SourceCoefficient::stage_index(double t) const {
  if (t < 0.0) throw std::invalid_argument("source: t must be >= 0");
  std::size_t k = 0;
  while (k + 1 < stages_.size() && stages_[k + 1].t_start <= t) ++k;
  return k;
}

std::optional<double> SourceCoefficient::next_switch(double t) const {
  for (const auto& s : stages_)
    if (s.t_start > t) return s.t_start;
  return std::nullopt;
}

double SourceCoefficient::profile_at(const Profile& p, double x) const {
  if (std::holds_alternative<double>(p)) return std::get<double>(p);
  const Field& f = std::get<Field>(p);
  const Grid& g = f.grid();
  if (x <= g.inner()) return f[0];
  if (x >= g.outer()) return f[f.size() - 1];
  double s = (x - g.inner()) / g.h();
  std::size_t i = static_cast<std::size_t>(s);
  double w = s - static_cast<double>(i);
  return f[i] * (1.0 - w) + f[i + 1] * w;
}

double SourceCoefficient::operator()(double x, double t) const {
  return profile_at(stages_[stage_index(t)].profile, x);
}

void SourceCoefficient::values_on(const Grid& grid, double t,
                                  std::vector<double>& out) const {
  const auto& p = stages_[stage_index(t)].profile;
  out.resize(grid.n_nodes());
  if (std::holds_alternative<double>(p)) {
    std::fill(out.begin(), out.end(), std::get<double>(p));
    return;
  }
  const Field& f = std::get<Field>(p);
  if (&f.grid() == &grid) {
    std::copy(f.data().begin(), f.data().end(), out.begin());
  } else {
    for (std::size_t i = 0; i < grid.n_nodes(); ++i)
      out[i] = profile_at(p, grid.node(i));
  }
}

double SourceCoefficient::time_integral(double x, double t0, double t1) const {
  if (t1 < t0) return -time_integral(x, t1, t0);
  double acc = 0.0, t = t0;
  while (t < t1) {
    std::size_t k = stage_index(t);
    double seg_end = t1;
    if (k + 1 < stages_.size()) seg_end = std::min(seg_end, stages_[k + 1].t_start);
    acc += profile_at(stages_[k].profile, x) * (seg_end - t);
    t = seg_end;
  }
  return acc;
}

bool SourceCoefficient::constant_in_space() const {
  return std::all_of(stages_.begin(), stages_.end(), [](const Stage& s) {
    return std::holds_alternative<double>(s.profile);
  });
}

BoundaryData::BoundaryData(std::function<double(double)> f, double lambda_bound)
    : f_(std::move(f)), lambda_bound_(lambda_bound) {
  if (!f_) throw std::invalid_argument("boundary data: empty function");
  if (!(lambda_bound_ > 0.0))
    throw std::invalid_argument("boundary data: bound must be positive");
}

BoundaryData BoundaryData::constant(double value, double lambda_bound) {
  if (!(value > 0.0))
    throw std::invalid_argument("boundary data: f must be positive");
  return BoundaryData([value](double) { return value; }, lambda_bound);
}

void BoundaryData::validate_range(double t0, double t1, int samples,
                                  double quotient_bound) const {
  double prev = 0.0;
  double dt = (t1 - t0) / samples;
  for (int i = 0; i <= samples; ++i) {
    double t = t0 + i * dt;
    double v = f_(t);
    if (!(v > 0.0)) throw std::invalid_argument("boundary data: f must stay positive");
    if (v < lower() - 1e-12 || v > upper() + 1e-12)
      throw std::invalid_argument("boundary data: f out of [1/Lambda, Lambda]");
    if (i > 0 && dt > 0.0 && std::abs(v - prev) / dt > quotient_bound)
      throw std::invalid_argument("boundary data: difference quotient too large");
    prev = v;
  }
}

}  // namespace mesa
