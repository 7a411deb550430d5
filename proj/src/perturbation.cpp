#include "blindcal/perturbation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace blindcal {

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::Independent: return "independent";
    case ModelKind::IdentityGroups: return "identity_groups";
    case ModelKind::TomoAngle: return "tomo_angle";
    case ModelKind::MriRadialDelay: return "mri_radial_delay";
  }
  return "unknown";
}

ModelKind parse_model_kind(const std::string& name) {
  if (name == "independent") return ModelKind::Independent;
  if (name == "identity_groups") return ModelKind::IdentityGroups;
  if (name == "tomo_angle") return ModelKind::TomoAngle;
  if (name == "mri_radial_delay") return ModelKind::MriRadialDelay;
  throw InvalidArgument("unknown perturbation model '" + name + "'");
}

PerturbationModel PerturbationModel::independent(int m, double r) {
  PerturbationModel model;
  model.kind = ModelKind::Independent;
  model.bound = r;
  model.groups.resize(static_cast<size_t>(m));
  for (int i = 0; i < m; ++i) model.groups[static_cast<size_t>(i)] = {i};
  model.validate();
  return model;
}

PerturbationModel PerturbationModel::identity_groups(std::vector<std::vector<int>> groups, double r) {
  PerturbationModel model;
  model.kind = ModelKind::IdentityGroups;
  model.bound = r;
  model.groups = std::move(groups);
  model.validate();
  return model;
}

PerturbationModel PerturbationModel::tomo_angle(std::vector<std::vector<int>> groups,
                                                std::vector<double> angles, Vector radii, double r) {
  PerturbationModel model;
  model.kind = ModelKind::TomoAngle;
  model.bound = r;
  model.groups = std::move(groups);
  model.angles = std::move(angles);
  model.radii = std::move(radii);
  model.validate();
  return model;
}

PerturbationModel PerturbationModel::mri_radial_delay(std::vector<std::vector<int>> groups,
                                                      std::vector<double> angles, double k, double r) {
  PerturbationModel model;
  model.kind = ModelKind::MriRadialDelay;
  model.bound = r;
  model.groups = std::move(groups);
  model.angles = std::move(angles);
  model.gradient_constant = k;
  model.validate();
  return model;
}

void PerturbationModel::validate() {
  if (!(bound >= 0.0) || !std::isfinite(bound)) throw InvalidArgument("parameter bound must be >= 0");
  if (groups.empty()) throw InvalidArgument("perturbation model needs at least one group");
  int m = 0;
  for (const auto& g : groups) {
    if (g.empty()) throw InvalidArgument("perturbation group is empty");
    m += static_cast<int>(g.size());
  }
  membership_.assign(static_cast<size_t>(m), -1);
  for (size_t k = 0; k < groups.size(); ++k) {
    for (int i : groups[k]) {
      if (i < 0 || i >= m) throw InvalidArgument("groups do not partition the measurement indices");
      if (membership_[static_cast<size_t>(i)] != -1) {
        throw InvalidArgument("measurement " + std::to_string(i) + " belongs to two groups");
      }
      membership_[static_cast<size_t>(i)] = static_cast<int>(k);
    }
  }
  if (kind == ModelKind::Independent) {
    for (const auto& g : groups) {
      if (g.size() != 1) throw InvalidArgument("independent model needs singleton groups");
    }
  }
  if (kind == ModelKind::TomoAngle || kind == ModelKind::MriRadialDelay) {
    if (angles.size() != groups.size()) throw InvalidArgument("need one spoke angle per group");
  }
  if (kind == ModelKind::TomoAngle && radii.size() != m) {
    throw InvalidArgument("tomography model needs one radius per measurement");
  }
  if (kind == ModelKind::MriRadialDelay && !(gradient_constant > 0.0)) {
    throw InvalidArgument("gradient constant K must be positive");
  }
}

int PerturbationModel::num_measurements() const { return static_cast<int>(membership_.size()); }

int PerturbationModel::num_params() const {
  return kind == ModelKind::MriRadialDelay ? 2 : static_cast<int>(groups.size());
}

int PerturbationModel::delta_dims() const {
  return (kind == ModelKind::TomoAngle || kind == ModelKind::MriRadialDelay) ? 2 : 1;
}

std::vector<int> PerturbationModel::rows_of_param(int p) const {
  if (p < 0 || p >= num_params()) throw InvalidArgument("parameter index out of range");
  if (kind == ModelKind::MriRadialDelay) {
    std::vector<int> all(membership_.size());
    for (size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
    return all;
  }
  return groups[static_cast<size_t>(p)];
}

double PerturbationModel::delta_bound() const {
  switch (kind) {
    case ModelKind::Independent:
    case ModelKind::IdentityGroups:
      return bound;
    case ModelKind::TomoAngle: {
      // |rho (cos(a+b) - cos a)| <= |rho| * 2 sin(|b|/2) <= |rho| * |b|
      const double rho = radii.size() ? radii.cwiseAbs().maxCoeff() : 0.0;
      return rho * 2.0 * std::sin(std::min(bound, std::numbers::pi) / 2.0);
    }
    case ModelKind::MriRadialDelay:
      return gradient_constant * bound;
  }
  return bound;
}

void PerturbationModel::expand_row(int i, const Vector& beta, double* out) const {
  const int k = group_of(i);
  switch (kind) {
    case ModelKind::Independent:
    case ModelKind::IdentityGroups:
      out[0] = beta[k];
      return;
    case ModelKind::TomoAngle: {
      const double a = angles[static_cast<size_t>(k)];
      const double rho = radii[i];
      out[0] = rho * (std::cos(a + beta[k]) - std::cos(a));
      out[1] = rho * (std::sin(a + beta[k]) - std::sin(a));
      return;
    }
    case ModelKind::MriRadialDelay: {
      // Parallel/perpendicular trajectory error of a spoke at angle a for
      // gradient delays (t_x, t_y), rotated back to (u1, u2).
      const double a = angles[static_cast<size_t>(k)];
      const double c = std::cos(a);
      const double s = std::sin(a);
      const double tx = beta[0];
      const double ty = beta[1];
      const double par = gradient_constant * (tx * c * c + ty * s * s);
      const double perp = gradient_constant * (-tx * c * s + ty * s * c);
      out[0] = par * c - perp * s;
      out[1] = par * s + perp * c;
      return;
    }
  }
}

Matrix PerturbationModel::expand(const Vector& beta) const {
  if (beta.size() != num_params()) {
    throw DimensionError("expected " + std::to_string(num_params()) + " parameters, got " +
                         std::to_string(beta.size()));
  }
  const double slack = 1e-12 * std::max(1.0, bound);
  for (Index p = 0; p < beta.size(); ++p) {
    if (!std::isfinite(beta[p]) || std::abs(beta[p]) > bound + slack) {
      throw InvalidArgument("parameter " + std::to_string(p) + " outside [-r, r]");
    }
  }
  const int m = num_measurements();
  Matrix delta(m, delta_dims());
  double row[2] = {0.0, 0.0};
  for (int i = 0; i < m; ++i) {
    expand_row(i, beta, row);
    for (int d = 0; d < delta_dims(); ++d) delta(i, d) = row[d];
  }
  return delta;
}

Matrix PerturbationModel::expand(const Vector& beta, const FrequencySet& freq) const {
  if (freq.size() != num_measurements()) throw DimensionError("model and frequency set disagree on M");
  if (freq.dims() != delta_dims()) throw DimensionError("model and frequency set disagree on axes");
  return expand(beta);
}

RadialGeometry make_radial_spokes(int n_spokes, int per_spoke, int n, double r) {
  if (n_spokes < 1) throw InvalidArgument("need at least one spoke");
  if (per_spoke < 1) throw InvalidArgument("need at least one frequency per spoke");
  if (n < 1) throw InvalidArgument("grid size must be positive");
  const int m = n_spokes * per_spoke;
  Matrix u(m, 2);
  Vector radii(m);
  std::vector<std::vector<int>> groups(static_cast<size_t>(n_spokes));
  std::vector<double> angles(static_cast<size_t>(n_spokes));
  const double rho_max = n / 2.0;
  for (int k = 0; k < n_spokes; ++k) {
    const double a = std::numbers::pi * k / n_spokes;
    angles[static_cast<size_t>(k)] = a;
    for (int j = 0; j < per_spoke; ++j) {
      const int i = k * per_spoke + j;
      const double rho = rho_max * (2.0 * j - (per_spoke - 1)) / per_spoke;
      radii[i] = rho;
      u(i, 0) = rho * std::cos(a);
      u(i, 1) = rho * std::sin(a);
      groups[static_cast<size_t>(k)].push_back(i);
    }
  }
  RadialGeometry out;
  out.model = PerturbationModel::tomo_angle(std::move(groups), std::move(angles), std::move(radii), r);
  out.freq = FrequencySet(u, out.model.delta_bound());
  return out;
}

}  // namespace blindcal
