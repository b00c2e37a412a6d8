#pragma once

#include "conclab/manifold.hpp"

#include <nlohmann/json.hpp>

#include <string>
#include <vector>

namespace conclab::geometry {

// Euclidean R^N. The injectivity radius is infinite; r(M) is a declared
// working value that fixes the chart radius a = (3/4) r(M).
ManifoldSpec make_flat(int dim, double declared_inj_radius = 8.0);

// Hyperbolic space H^N in geodesic polar coordinates (t, theta_1, ...):
// g = dt^2 + sinh(t)^2 g_{S^{N-1}}. Valid for t > 0 and theta_l in (0, pi)
// for the non-azimuthal angles.
ManifoldSpec make_hyperbolic(int dim, double declared_inj_radius = 2.0);

// g = (1 + beta * b(|x - c| / R)) delta with the standard mollifier b.
ManifoldSpec make_perturbed_flat(int dim, double beta, double radius, const Vec& center,
                                 double declared_inj_radius = 8.0);

// Catalog lookup by id ("flat", "hyperbolic", "perturbed_flat"); params may
// contain inj_radius, beta, radius, center. Throws ConstraintViolation on
// unknown ids.
ManifoldSpec make_catalog(const std::string& id, int dim, const nlohmann::json& params);

std::vector<std::string> catalog_ids();

// Catalog manifolds whose geometry is Euclidean outside a compact set.
bool flat_at_infinity(const std::string& id);

}  // namespace conclab::geometry
