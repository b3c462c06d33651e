#pragma once

#include <memory>
#include <vector>

#include <nlohmann/json.hpp>

#include "body.hpp"
#include "util.hpp"

namespace capillary {

// Mesh-independent description of a test body. Recipes realize on any mesh
// of the right dimension, which is what refinement ladders need: the same
// shape sampled at several resolutions.
//
// The perturbation modes are chosen to be smooth on the cap and to satisfy
// the boundary condition analytically:
//   radial mode j:    cos(j*pi*psi/theta)       (dim 2), cos(j*pi*x/theta) (dim 1)
//   azimuthal mode k: B_k(psi) * cos(2k*azimuth), with
//     B_k = sin(psi)^(2k) * (1 + 2k*cos(theta)/sin(theta)^2 * (cos(psi) - cos(theta)))
// Both families have vanishing normal derivative at psi = theta and are even.
class BodyRecipe {
public:
  static BodyRecipe cap(double r);
  // h = r * ell * (1 + sum radial + sum azimuthal); coefficient vectors are
  // indexed by mode number starting at 1.
  static BodyRecipe perturbed(double r, std::vector<double> radial, std::vector<double> azimuthal);
  static BodyRecipe translated(BodyRecipe base, std::vector<double> offset);
  static BodyRecipe combined(double p, double alpha, BodyRecipe a, double beta, BodyRecipe b);
  static BodyRecipe dilated(BodyRecipe base, double factor);

  BodyPtr realize(const MeshPtr& mesh) const;
  ScalarField support_field(const CapMesh& mesh) const;
  nlohmann::json describe() const;

private:
  enum class Kind { cap, perturbed, translated, combined, dilated };
  Kind kind_ = Kind::cap;
  double r_ = 1.0;
  std::vector<double> radial_, azimuthal_, offset_;
  double p_ = 2.0, alpha_ = 1.0, beta_ = 1.0, factor_ = 1.0;
  std::vector<std::shared_ptr<const BodyRecipe>> children_;
};

// One random body drawn from the corpus of perturbed caps, horizontal
// translates, and L_p combinations of translated caps. Realized on `mesh`
// and validated; perturbation amplitudes are halved on validation failure
// (deterministic retries), so the returned body always passes. If
// `recipe_out` is given it receives the accepted recipe for re-realization
// on other meshes.
BodyPtr random_body(SplitMix64& rng, const MeshPtr& mesh, BodyRecipe* recipe_out = nullptr);

// Like random_body but drawn from the perturbed-cap family only, whose modes
// are all even; used where the equality-family arguments need evenness.
BodyPtr random_even_body(SplitMix64& rng, const MeshPtr& mesh, BodyRecipe* recipe_out = nullptr);

// Smooth even field built from the same analytic mode families, with entries
// of order one; used by operator diagnostics.
ScalarField random_even_field(SplitMix64& rng, const CapMesh& mesh);

// One named mode field: "cosJ" (J >= 1) is the radial family, "azK" (even
// K >= 2, 2-d caps only) is the azimuthal family with K waves around the
// axis. Modes are scaled so a perturbed cap of amplitude eps keeps its
// minimum area eigenvalue near 1 - eps regardless of the mode index.
// Throws invalid_argument for anything else.
ScalarField perturbation_mode(const CapMesh& mesh, const std::string& name);

}  // namespace capillary
