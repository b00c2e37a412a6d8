#pragma once

#include "conclab/spotlight.hpp"

#include <nlohmann/json.hpp>

#include <string>
#include <vector>

namespace conclab::sequences {

using spotlight::SequenceFamily;

// Analytic sequence families built from the mollifier bump
// A * b(|x - c| / R):
//   zero, fixed_bump, traveling_bump (c_k = c + k v), two_bump,
//   flattening (R_k = s_k R, amplitude s_k^{-N/2}, s_k = 1 + (k - 1) growth),
//   oscillating_sign ((-1)^k bump), decaying_bump (bump / k),
//   oscillatory_energy (traveling bump + sin(w_k x_1) bump(x - c) / w_k,
//   w_k = omega0 sqrt(k)).
// "one_bump" and "perturbed_escape" are aliases of traveling_bump.
// metric_factor scales the declared H^{1,2} bound on non-Euclidean metrics.
SequenceFamily make_family(const std::string& id, int dim, const nlohmann::json& params,
                           double metric_factor = 1.0);

std::vector<std::string> family_ids();

// Euclidean norms of A b(|x| / R) on R^N by radial quadrature.
double bump_l2_square(int dim, double radius, double amplitude);
double bump_grad_square(int dim, double radius, double amplitude);
double bump_lp_power(int dim, double radius, double amplitude, double p);

}  // namespace conclab::sequences
