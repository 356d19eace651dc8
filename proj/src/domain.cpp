#include "metamorph/fields.hpp"
#include "metamorph/types.hpp"

#include <cmath>

namespace metamorph {

Domain Domain::grid(int dim, int points, double length) {
  Domain d;
  d.dim = dim;
  d.points = points;
  d.length = length;
  d.periodic = true;
  d.validate();
  return d;
}

Domain Domain::plane(int dim) {
  Domain d;
  d.dim = dim;
  d.points = 0;
  d.length = 0.0;
  d.periodic = false;
  d.validate();
  return d;
}

std::size_t Domain::size() const {
  if (!periodic) return 0;
  const auto n = static_cast<std::size_t>(points);
  return dim == 1 ? n : n * n;
}

double Domain::cell_volume() const {
  const double h = spacing();
  return dim == 1 ? h : h * h;
}

Vec Domain::node(std::size_t index) const {
  Vec x(dim);
  const double h = spacing();
  if (dim == 1) {
    x(0) = h * static_cast<double>(index);
  } else {
    const auto n = static_cast<std::size_t>(points);
    x(0) = h * static_cast<double>(index / n);
    x(1) = h * static_cast<double>(index % n);
  }
  return x;
}

void Domain::validate() const {
  if (dim != 1 && dim != 2) throw InputError("domain.dim must be 1 or 2");
  if (!periodic) return;
  if (points < 8) throw InputError("domain.points must be >= 8");
  if (points % 2 != 0) throw InputError("domain.points must be even");
  if (!(length > 0.0) || !std::isfinite(length)) throw InputError("domain.length must be positive");
}

void require_same_domain(const Domain& a, const Domain& b, const char* op) {
  if (!(a == b)) throw InputError(std::string(op) + ": domain mismatch");
}

GridFieldSampler::GridFieldSampler(const VectorField& field) : dim_(field.dim()) {
  auto spectral = Spectral::for_domain(field.domain());
  comps_.reserve(dim_);
  for (int c = 0; c < dim_; ++c) comps_.emplace_back(*spectral, field.component(c));
}

FieldJet GridFieldSampler::evaluate(const Vec& x) const {
  FieldJet jet{Vec::Zero(dim_), Mat::Zero(dim_, dim_)};
  for (int c = 0; c < dim_; ++c) {
    auto [v, g] = comps_[c].value_and_gradient(x);
    jet.value(c) = v;
    jet.jacobian.row(c) = g.transpose();
  }
  return jet;
}

std::vector<std::vector<double>> spectral_gradient(const Domain& domain, std::span<const double> f) {
  auto spectral = Spectral::for_domain(domain);
  std::vector<std::vector<double>> g;
  g.reserve(domain.dim);
  for (int a = 0; a < domain.dim; ++a) g.push_back(spectral->derivative(f, a));
  return g;
}

}  // namespace metamorph
