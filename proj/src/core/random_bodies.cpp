#include "random_bodies.hpp"

#include <cmath>

namespace capillary {

namespace {

constexpr double kPi = 3.14159265358979323846;

ScalarField radial_mode(const CapMesh& mesh, int j) {
  const double th = mesh.theta().value();
  const Eigen::VectorXd& c = mesh.dim() == 1 ? mesh.signed_coord() : mesh.polar();
  ScalarField m(mesh.size());
  for (Eigen::Index i = 0; i < mesh.size(); ++i) m[i] = std::cos(j * kPi * c[i] / th);
  return m;
}

ScalarField azimuthal_mode(const CapMesh& mesh, int k) {
  if (mesh.dim() != 2)
    fail(ErrorCode::invalid_argument, "azimuthal perturbation modes need a 2-d cap");
  const double ct = mesh.theta().cos();
  const double st2 = mesh.theta().sin() * mesh.theta().sin();
  ScalarField m(mesh.size());
  for (Eigen::Index i = 0; i < mesh.size(); ++i) {
    double s = std::sin(mesh.polar()[i]);
    double b = std::pow(s, 2 * k) * (1.0 + 2.0 * k * ct / st2 * (std::cos(mesh.polar()[i]) - ct));
    m[i] = b * std::cos(2 * k * mesh.azimuth()[i]);
  }
  return m;
}

}  // namespace

BodyRecipe BodyRecipe::cap(double r) {
  if (!(r > 0.0)) fail(ErrorCode::invalid_argument, "cap recipe needs a positive radius");
  BodyRecipe rec;
  rec.kind_ = Kind::cap;
  rec.r_ = r;
  return rec;
}

BodyRecipe BodyRecipe::perturbed(double r, std::vector<double> radial, std::vector<double> azimuthal) {
  if (!(r > 0.0)) fail(ErrorCode::invalid_argument, "perturbed recipe needs a positive radius");
  BodyRecipe rec;
  rec.kind_ = Kind::perturbed;
  rec.r_ = r;
  rec.radial_ = std::move(radial);
  rec.azimuthal_ = std::move(azimuthal);
  return rec;
}

BodyRecipe BodyRecipe::translated(BodyRecipe base, std::vector<double> offset) {
  BodyRecipe rec;
  rec.kind_ = Kind::translated;
  rec.offset_ = std::move(offset);
  rec.children_.push_back(std::make_shared<BodyRecipe>(std::move(base)));
  return rec;
}

BodyRecipe BodyRecipe::combined(double p, double alpha, BodyRecipe a, double beta, BodyRecipe b) {
  if (!(p >= 1.0)) fail(ErrorCode::invalid_argument, "combined recipe needs exponent p >= 1");
  if (!(alpha >= 0.0) || !(beta >= 0.0) || alpha + beta <= 0.0)
    fail(ErrorCode::invalid_argument, "combined recipe needs nonnegative weights, not both zero");
  BodyRecipe rec;
  rec.kind_ = Kind::combined;
  rec.p_ = p;
  rec.alpha_ = alpha;
  rec.beta_ = beta;
  rec.children_.push_back(std::make_shared<BodyRecipe>(std::move(a)));
  rec.children_.push_back(std::make_shared<BodyRecipe>(std::move(b)));
  return rec;
}

BodyRecipe BodyRecipe::dilated(BodyRecipe base, double factor) {
  if (!(factor > 0.0)) fail(ErrorCode::invalid_argument, "dilation factor must be positive");
  BodyRecipe rec;
  rec.kind_ = Kind::dilated;
  rec.factor_ = factor;
  rec.children_.push_back(std::make_shared<BodyRecipe>(std::move(base)));
  return rec;
}

ScalarField BodyRecipe::support_field(const CapMesh& mesh) const {
  switch (kind_) {
    case Kind::cap:
      return r_ * mesh.ell();
    case Kind::perturbed: {
      ScalarField u = ScalarField::Ones(mesh.size());
      for (size_t j = 0; j < radial_.size(); ++j)
        if (radial_[j] != 0.0) u += radial_[j] * radial_mode(mesh, static_cast<int>(j) + 1);
      for (size_t k = 0; k < azimuthal_.size(); ++k)
        if (azimuthal_[k] != 0.0) u += azimuthal_[k] * azimuthal_mode(mesh, static_cast<int>(k) + 1);
      return r_ * mesh.ell().cwiseProduct(u);
    }
    case Kind::translated:
      return children_[0]->support_field(mesh) + horizontal_support_term(mesh, offset_);
    case Kind::combined: {
      ScalarField h1 = children_[0]->support_field(mesh);
      ScalarField h2 = children_[1]->support_field(mesh);
      ScalarField h(mesh.size());
      for (Eigen::Index i = 0; i < mesh.size(); ++i)
        h[i] = std::pow(alpha_ * std::pow(h1[i], p_) + beta_ * std::pow(h2[i], p_), 1.0 / p_);
      return h;
    }
    case Kind::dilated:
      return factor_ * children_[0]->support_field(mesh);
  }
  fail(ErrorCode::internal, "unreachable recipe kind");
}

BodyPtr BodyRecipe::realize(const MeshPtr& mesh) const {
  if (!mesh) fail(ErrorCode::invalid_argument, "recipe needs a mesh");
  return make_body_from_support(mesh, support_field(*mesh));
}

nlohmann::json BodyRecipe::describe() const {
  switch (kind_) {
    case Kind::cap:
      return {{"kind", "cap"}, {"r", r_}};
    case Kind::perturbed:
      return {{"kind", "perturbed"}, {"r", r_}, {"radial", radial_}, {"azimuthal", azimuthal_}};
    case Kind::translated:
      return {{"kind", "translated"}, {"offset", offset_}, {"base", children_[0]->describe()}};
    case Kind::combined:
      return {{"kind", "combined"}, {"p", p_},     {"alpha", alpha_},
              {"beta", beta_},      {"first", children_[0]->describe()},
              {"second", children_[1]->describe()}};
    case Kind::dilated:
      return {{"kind", "dilated"}, {"factor", factor_}, {"base", children_[0]->describe()}};
  }
  fail(ErrorCode::internal, "unreachable recipe kind");
}

namespace {

BodyRecipe random_perturbed(SplitMix64& rng, int dim, double damp) {
  double r = rng.uniform(0.6, 1.6);
  double eps = damp * rng.uniform(0.02, 0.08);

  std::vector<double> radial(1 + rng.uniform_int(0, 2), 0.0);
  for (size_t j = 0; j < radial.size(); ++j) {
    double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
    radial[j] = sign * eps * rng.uniform(0.5, 1.0) / double((j + 1) * (j + 1));
  }

  std::vector<double> azimuthal;
  if (dim == 2) {
    azimuthal.resize(rng.uniform_int(0, 2), 0.0);
    for (size_t k = 0; k < azimuthal.size(); ++k) {
      double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
      azimuthal[k] = sign * eps * 0.25 * rng.uniform(0.5, 1.0) / double((k + 1) * (k + 1));
    }
  }
  return BodyRecipe::perturbed(r, std::move(radial), std::move(azimuthal));
}

std::vector<double> random_offset(SplitMix64& rng, int dim, double scale) {
  double mag = scale * rng.uniform(0.05, 0.15);
  if (dim == 1) return {rng.uniform() < 0.5 ? -mag : mag};
  double dir = rng.uniform(0.0, 2.0 * kPi);
  return {mag * std::cos(dir), mag * std::sin(dir)};
}

BodyRecipe random_recipe(SplitMix64& rng, int dim, double damp) {
  double pick = rng.uniform();
  if (pick < 0.5) return random_perturbed(rng, dim, damp);
  if (pick < 0.75) {
    BodyRecipe base = random_perturbed(rng, dim, damp);
    return BodyRecipe::translated(std::move(base), random_offset(rng, dim, damp));
  }
  double p = double(rng.uniform_int(2, 4));
  double alpha = rng.uniform(0.3, 1.0), beta = rng.uniform(0.3, 1.0);
  BodyRecipe a = BodyRecipe::translated(BodyRecipe::cap(rng.uniform(0.6, 1.6)),
                                        random_offset(rng, dim, damp));
  BodyRecipe b = BodyRecipe::translated(BodyRecipe::cap(rng.uniform(0.6, 1.6)),
                                        random_offset(rng, dim, damp));
  return BodyRecipe::combined(p, alpha, std::move(a), beta, std::move(b));
}

}  // namespace

namespace {

BodyPtr draw_validated(SplitMix64& rng, const MeshPtr& mesh, BodyRecipe* recipe_out,
                       bool even_only) {
  if (!mesh) fail(ErrorCode::invalid_argument, "random body needs a mesh");
  double damp = 1.0;
  for (int attempt = 0; attempt < 6; ++attempt, damp *= 0.5) {
    SplitMix64 attempt_rng = rng;  // same draw, smaller amplitudes on retry
    BodyRecipe rec = even_only ? random_perturbed(attempt_rng, mesh->dim(), damp)
                               : random_recipe(attempt_rng, mesh->dim(), damp);
    BodyPtr body = rec.realize(mesh);
    if (validate(*body).pass) {
      rng = attempt_rng;
      if (recipe_out) *recipe_out = rec;
      return body;
    }
  }
  // Amplitude halving failed five times; settle for a cap.
  rng.next();
  BodyRecipe rec = BodyRecipe::cap(1.0);
  if (recipe_out) *recipe_out = rec;
  return rec.realize(mesh);
}

}  // namespace

BodyPtr random_body(SplitMix64& rng, const MeshPtr& mesh, BodyRecipe* recipe_out) {
  return draw_validated(rng, mesh, recipe_out, false);
}

BodyPtr random_even_body(SplitMix64& rng, const MeshPtr& mesh, BodyRecipe* recipe_out) {
  return draw_validated(rng, mesh, recipe_out, true);
}

ScalarField random_even_field(SplitMix64& rng, const CapMesh& mesh) {
  ScalarField g = ScalarField::Zero(mesh.size());
  int modes = 0;
  for (int j = 1; j <= 3; ++j, ++modes)
    g += rng.uniform(-1.0, 1.0) * radial_mode(mesh, j);
  if (mesh.dim() == 2) {
    for (int k = 1; k <= 2; ++k, ++modes)
      g += rng.uniform(-1.0, 1.0) / double(k * k) * azimuthal_mode(mesh, k);
  }
  return g / double(modes);
}

namespace {

// The area matrix of the perturbed cap is I + eps * area_op(ell * g), so
// dividing g by the spectral norm of that operator at unit amplitude makes
// the minimum eigenvalue come out near 1 - eps for any mode index. Without
// this, high modes carry curvature that grows like the mode number squared
// and even small amplitudes lose convexity.
ScalarField normalize_curvature(const CapMesh& mesh, ScalarField g) {
  SymMatrixField a = mesh.area_operator(mesh.ell().cwiseProduct(g).eval());
  double s = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    double lo = a.min_eig(i);
    double hi = a.trace(i) - lo;
    s = std::max(s, std::max(std::abs(lo), std::abs(hi)));
  }
  if (s > 1.0) g /= s;
  return g;
}

}  // namespace

ScalarField perturbation_mode(const CapMesh& mesh, const std::string& name) {
  auto index_after = [&](size_t prefix_len) {
    int value = 0;
    size_t pos = prefix_len;
    if (pos >= name.size()) return -1;
    for (; pos < name.size(); ++pos) {
      if (name[pos] < '0' || name[pos] > '9') return -1;
      value = value * 10 + (name[pos] - '0');
      if (value > 1000) return -1;
    }
    return value;
  };
  if (name.rfind("cos", 0) == 0) {
    int j = index_after(3);
    if (j >= 1) return normalize_curvature(mesh, radial_mode(mesh, j));
  } else if (name.rfind("az", 0) == 0) {
    int waves = index_after(2);
    if (waves >= 2 && waves % 2 == 0)
      return normalize_curvature(mesh, azimuthal_mode(mesh, waves / 2));
  }
  fail(ErrorCode::invalid_argument,
       "unknown perturbation mode '" + name + "' (expected cosJ with J >= 1, or azK with even K >= 2)");
}

}  // namespace capillary
