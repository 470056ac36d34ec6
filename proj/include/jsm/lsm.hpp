#pragma once

#include <vector>

#include "jsm/image.hpp"

namespace jsm {

/// Forward differences with Neumann boundary: the last row of dv and the
/// last column of dh are zero.
struct GradientField {
  int width = 0;
  int height = 0;
  std::vector<double> dv;
  std::vector<double> dh;
};

GradientField gradient(const Image& u);

/// Negative adjoint of gradient: <gradient(u), g> = -<u, divergence(g)>.
Image divergence(const GradientField& g);

/// Anisotropic total variation ||D_v u||_1 + ||D_h u||_1.
double psi_lsm(const Image& u);

/// 0.5 ||w - p||^2 + gamma * psi_lsm(w).
double lsm_prox_objective(const Image& w, const Image& p, double gamma);

/// Dual variables of the TV prox, one per gradient component. Kept by the
/// solver between calls for warm starts.
struct TvDual {
  GradientField q;
  bool empty() const { return q.dv.empty(); }
};

/// Approximate argmin_w 0.5||w - p||^2 + gamma * psi_lsm(w).
///
/// Accelerated (FISTA) projected gradient on the dual
///   min_{|q| <= gamma} 0.5 ||p + div q||^2,
/// step 1/8, fixed iteration count. w = p + div q. Passing a non-empty
/// `dual` warm-starts from it; it is overwritten with the final iterate.
Image prox_lsm(const Image& p, double gamma, int inner_iters, TvDual* dual = nullptr);

}  // namespace jsm
