#pragma once

#include <string>
#include <vector>

#include "blindcal/types.hpp"

namespace blindcal {

enum class ModelKind { Independent, IdentityGroups, TomoAngle, MriRadialDelay };

std::string to_string(ModelKind kind);
ModelKind parse_model_kind(const std::string& name);

/// Link from a few perturbation parameters beta to per-measurement frequency
/// perturbations delta_i = h(beta, u_i).
///
/// Measurements are partitioned into groups. For the independent, identity and
/// tomography kinds every group owns exactly one parameter. The radial MRI
/// kind has two parameters (the x and y gradient delays) shared by all spokes,
/// so both touch every measurement.
struct PerturbationModel {
  ModelKind kind = ModelKind::Independent;
  std::vector<std::vector<int>> groups;
  /// Bound r on every parameter.
  double bound = 0.0;
  /// Spoke angle alpha_k of every group (tomo_angle, mri_radial_delay).
  std::vector<double> angles;
  /// Signed radius rho_i of every measurement along its spoke (tomo_angle).
  Vector radii;
  /// Hardware constant K (mri_radial_delay).
  double gradient_constant = 1.0;

  static PerturbationModel independent(int m, double r);
  static PerturbationModel identity_groups(std::vector<std::vector<int>> groups, double r);
  static PerturbationModel tomo_angle(std::vector<std::vector<int>> groups, std::vector<double> angles,
                                      Vector radii, double r);
  static PerturbationModel mri_radial_delay(std::vector<std::vector<int>> groups,
                                            std::vector<double> angles, double k, double r);

  int num_measurements() const;
  int num_params() const;
  int delta_dims() const;
  /// Group index of measurement i.
  int group_of(int i) const { return membership_[static_cast<size_t>(i)]; }
  /// Measurements whose perturbation depends on parameter p.
  std::vector<int> rows_of_param(int p) const;
  /// Largest |delta| component reachable with |beta| <= bound.
  double delta_bound() const;

  /// delta for every measurement (M x delta_dims). Rejects out-of-bound beta.
  Matrix expand(const Vector& beta, const FrequencySet& freq) const;
  Matrix expand(const Vector& beta) const;
  /// delta of a single measurement; `out` receives delta_dims values.
  void expand_row(int i, const Vector& beta, double* out) const;

  /// Checks the partition and the per-kind constants; builds the membership map.
  void validate();

 private:
  std::vector<int> membership_;
};

struct RadialGeometry {
  FrequencySet freq;
  PerturbationModel model;
};

/// n_spokes spokes through the origin at angles k pi / n_spokes, each holding
/// per_spoke frequencies spaced uniformly on (-n/2, n/2) and symmetric about the
/// origin. One group per spoke; tomography angle-error link with bound r.
RadialGeometry make_radial_spokes(int n_spokes, int per_spoke, int n, double r);

}  // namespace blindcal
