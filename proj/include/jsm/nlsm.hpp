#pragma once

#include <cmath>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "jsm/image.hpp"

namespace jsm {

struct NlsmParams {
  int block = 8;        // block side length
  int stride = 4;       // spacing between reference blocks
  int window = 40;      // side of the square search region
  int group_size = 10;  // blocks per group, reference included

  void validate() const;
};

struct BlockPos {
  int row = 0;
  int col = 0;
  friend bool operator==(const BlockPos&, const BlockPos&) = default;
};

/// One reference block and its best-matching blocks; members[0] is the
/// reference itself.
struct GroupIndex {
  BlockPos ref;
  std::vector<BlockPos> members;
};

/// Groups in raster order of their reference blocks, plus how many member
/// blocks cover each pixel.
struct GroupingPlan {
  NlsmParams params;
  int width = 0;
  int height = 0;
  std::vector<GroupIndex> groups;
  std::vector<int> coverage;

  std::size_t group_length() const {
    return static_cast<std::size_t>(params.block) * params.block * params.group_size;
  }
  /// K, total number of 3D coefficients.
  std::size_t coeff_count() const { return group_length() * groups.size(); }
};

/// Concatenated group coefficients, group-major in plan order. Within a
/// group the layout is [group axis][row][col].
using CoeffVector = std::vector<double>;

/// Block origins on a stride grid along each axis, plus the position flush
/// with the far border. Raster order.
std::vector<BlockPos> reference_positions(int width, int height, const NlsmParams& p);

/// group_size closest blocks (squared Euclidean distance) within the search
/// window centered on the reference block. Ties go to the raster-first
/// candidate; the reference always leads.
GroupIndex match_blocks(const Image& img, BlockPos ref, const NlsmParams& p);

/// Orthonormal 2D DCT-II per block, then an orthonormal unbalanced Haar
/// transform along the group axis: segments split into ceil/floor halves down
/// to single blocks, so any group size gets a full-depth tree. Coefficient
/// order along the axis is the root average, then details breadth first.
/// `group` holds group_size blocks of block*block samples each.
void forward_3d(std::span<const double> group, std::span<double> coeffs, int block, int group_size);
void inverse_3d(std::span<const double> coeffs, std::span<double> group, int block, int group_size);

/// Grouping plan computed by block matching on `img`.
GroupingPlan make_plan(const Image& img, const NlsmParams& p);

/// Coefficients of `img` under an existing plan.
CoeffVector coefficients(const Image& img, const GroupingPlan& plan);

/// Inverse-transform every group and average the overlapping block
/// estimates back into an image.
Image synthesize(const CoeffVector& theta, const GroupingPlan& plan);

std::pair<GroupingPlan, CoeffVector> analyze(const Image& img, const NlsmParams& p);

/// l1 norm of the coefficients from analyze().
double psi_nlsm(const Image& img, const NlsmParams& p);

inline double soft(double v, double t) {
  const double m = std::abs(v) - t;
  return m > 0.0 ? (v > 0.0 ? m : -m) : 0.0;
}
std::vector<double> soft(std::span<const double> v, double t);

enum class ThresholdRule {
  SqrtTwoRho,  // t = sqrt(2 rho), the published rule
  Rho,         // t = rho, the exact minimizer of the coefficient-domain problem
  SqrtTwoAlpha,  // t = sqrt(2 alpha), rho taken without the K/N factor
};

ThresholdRule parse_threshold_rule(const std::string& name);
std::string to_string(ThresholdRule rule);

/// Threshold for alpha under the given plan: rho = (K/N) * alpha.
double nlsm_threshold(double alpha, std::size_t coeff_count, std::size_t pixel_count, ThresholdRule rule);

struct NlsmProxResult {
  Image x;
  GroupingPlan plan;
  double threshold = 0.0;
};

/// x = synthesize(soft(coefficients(r), t)) with the plan matched on r.
NlsmProxResult prox_nlsm_detailed(const Image& r, double alpha, const NlsmParams& p,
                                  ThresholdRule rule = ThresholdRule::SqrtTwoRho);
Image prox_nlsm(const Image& r, double alpha, const NlsmParams& p,
                ThresholdRule rule = ThresholdRule::SqrtTwoRho);

struct VarianceDiagnostic {
  double var_e = 0.0;      // ||x - r||^2 / N
  double var_theta = 0.0;  // ||Theta_x - Theta_r||^2 / K
};

/// Both coefficient vectors use `plan` (normally the one matched on r).
VarianceDiagnostic variance_diagnostic(const Image& x, const Image& r, const GroupingPlan& plan);
VarianceDiagnostic variance_diagnostic(const Image& x, const Image& r, const NlsmParams& p);

}  // namespace jsm
