#include "jsm/nlsm.hpp"

#include <algorithm>
#include <exception>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace jsm {

void NlsmParams::validate() const {
  if (block < 1 || stride < 1 || window < 1 || group_size < 1)
    throw std::invalid_argument("NLSM parameters must be positive");
  if (stride > block) throw std::invalid_argument("NLSM stride must not exceed block size");
  if (window < block) throw std::invalid_argument("NLSM search window must be at least one block");
}

namespace {

// Rows: the root average, then one detail per split in breadth-first order.
// A segment of n splits into ceil(n/2) + floor(n/2); the detail for halves
// L, R is sqrt(|L||R|/n) * (mean L - mean R).
std::vector<double> haar_basis(int n) {
  std::vector<double> m(static_cast<std::size_t>(n) * n, 0.0);
  for (int j = 0; j < n; ++j) m[j] = 1.0 / std::sqrt(static_cast<double>(n));
  std::vector<std::pair<int, int>> queue{{0, n}};
  int row = 1;
  for (std::size_t q = 0; q < queue.size(); ++q) {
    const auto [start, len] = queue[q];
    if (len < 2) continue;
    const int n1 = (len + 1) / 2, n2 = len - n1;
    const double wl = std::sqrt(static_cast<double>(n2) / (static_cast<double>(len) * n1));
    const double wr = -std::sqrt(static_cast<double>(n1) / (static_cast<double>(len) * n2));
    for (int j = 0; j < n1; ++j) m[static_cast<std::size_t>(row) * n + start + j] = wl;
    for (int j = 0; j < n2; ++j) m[static_cast<std::size_t>(row) * n + start + n1 + j] = wr;
    ++row;
    queue.push_back({start, n1});
    queue.push_back({start + n1, n2});
  }
  return m;
}

// Orthonormal DCT-II basis and scratch space for one (block, group_size).
class GroupTransform {
 public:
  GroupTransform(int block, int group_size)
      : b_(block),
        c_(group_size),
        dct_(static_cast<std::size_t>(block) * block),
        tmp_(dct_.size()),
        tmp2_(dct_.size()),
        col_(static_cast<std::size_t>(group_size)),
        scratch_(static_cast<std::size_t>(group_size)) {
    for (int k = 0; k < b_; ++k) {
      const double a = k == 0 ? std::sqrt(1.0 / b_) : std::sqrt(2.0 / b_);
      for (int n = 0; n < b_; ++n)
        dct_[static_cast<std::size_t>(k) * b_ + n] = a * std::cos(M_PI * (2.0 * n + 1.0) * k / (2.0 * b_));
    }
    haar_ = haar_basis(group_size);
  }

  void forward(std::span<const double> in, std::span<double> out) {
    const std::size_t plane = dct_.size();
    for (int m = 0; m < c_; ++m) dct2(in.subspan(m * plane, plane), out.subspan(m * plane, plane), false);
    for (std::size_t p = 0; p < plane; ++p) {
      for (int m = 0; m < c_; ++m) col_[m] = out[m * plane + p];
      haar_forward();
      for (int m = 0; m < c_; ++m) out[m * plane + p] = col_[m];
    }
  }

  void inverse(std::span<const double> in, std::span<double> out) {
    const std::size_t plane = dct_.size();
    for (std::size_t p = 0; p < plane; ++p) {
      for (int m = 0; m < c_; ++m) col_[m] = in[m * plane + p];
      haar_inverse();
      for (int m = 0; m < c_; ++m) out[m * plane + p] = col_[m];
    }
    for (int m = 0; m < c_; ++m) {
      auto s = out.subspan(m * plane, plane);
      std::copy(s.begin(), s.end(), tmp2_.begin());
      dct2(std::span<const double>(tmp2_.data(), plane), s, true);
    }
  }

 private:
  // Y = C X C^T (forward) or X = C^T Y C (inverse).
  void dct2(std::span<const double> x, std::span<double> y, bool inverse) {
    const int b = b_;
    auto basis = [&](int k, int n) { return inverse ? dct_[static_cast<std::size_t>(n) * b + k] : dct_[static_cast<std::size_t>(k) * b + n]; };
    // tmp = C X  (transform columns)
    for (int k = 0; k < b; ++k)
      for (int j = 0; j < b; ++j) {
        double acc = 0.0;
        for (int n = 0; n < b; ++n) acc += basis(k, n) * x[static_cast<std::size_t>(n) * b + j];
        tmp_[static_cast<std::size_t>(k) * b + j] = acc;
      }
    // y = tmp C^T  (transform rows)
    for (int i = 0; i < b; ++i)
      for (int k = 0; k < b; ++k) {
        double acc = 0.0;
        for (int n = 0; n < b; ++n) acc += tmp_[static_cast<std::size_t>(i) * b + n] * basis(k, n);
        y[static_cast<std::size_t>(i) * b + k] = acc;
      }
  }

  void haar_forward() {
    for (int i = 0; i < c_; ++i) {
      double acc = 0.0;
      for (int j = 0; j < c_; ++j) acc += haar_[static_cast<std::size_t>(i) * c_ + j] * col_[j];
      scratch_[i] = acc;
    }
    std::copy(scratch_.begin(), scratch_.end(), col_.begin());
  }

  void haar_inverse() {
    std::fill(scratch_.begin(), scratch_.end(), 0.0);
    for (int i = 0; i < c_; ++i)
      for (int j = 0; j < c_; ++j) scratch_[j] += haar_[static_cast<std::size_t>(i) * c_ + j] * col_[i];
    std::copy(scratch_.begin(), scratch_.end(), col_.begin());
  }

  int b_, c_;
  std::vector<double> dct_, tmp_, tmp2_;
  std::vector<double> col_, scratch_;
  std::vector<double> haar_;
};

void check_group_span(std::size_t a, std::size_t b, int block, int group_size) {
  const std::size_t len = static_cast<std::size_t>(block) * block * group_size;
  if (a != len || b != len) throw std::invalid_argument("group buffer length must be block^2 * group_size");
}

void gather_group(const Image& img, const GroupIndex& g, int block, std::span<double> out) {
  std::size_t k = 0;
  for (const auto& m : g.members)
    for (int r = 0; r < block; ++r)
      for (int c = 0; c < block; ++c) out[k++] = img(m.row + r, m.col + c);
}

std::vector<int> axis_positions(int extent, int block, int stride) {
  std::vector<int> pos;
  for (int v = 0; v + block <= extent; v += stride) pos.push_back(v);
  if (pos.empty() || pos.back() != extent - block) pos.push_back(extent - block);
  return pos;
}

}  // namespace

void forward_3d(std::span<const double> group, std::span<double> coeffs, int block, int group_size) {
  check_group_span(group.size(), coeffs.size(), block, group_size);
  GroupTransform(block, group_size).forward(group, coeffs);
}

void inverse_3d(std::span<const double> coeffs, std::span<double> group, int block, int group_size) {
  check_group_span(coeffs.size(), group.size(), block, group_size);
  GroupTransform(block, group_size).inverse(coeffs, group);
}

std::vector<BlockPos> reference_positions(int width, int height, const NlsmParams& p) {
  p.validate();
  if (width < p.block || height < p.block) throw std::invalid_argument("image smaller than one block");
  const auto rows = axis_positions(height, p.block, p.stride);
  const auto cols = axis_positions(width, p.block, p.stride);
  std::vector<BlockPos> out;
  out.reserve(rows.size() * cols.size());
  for (int r : rows)
    for (int c : cols) out.push_back({r, c});
  return out;
}

GroupIndex match_blocks(const Image& img, BlockPos ref, const NlsmParams& p) {
  p.validate();
  const int b = p.block;
  const int max_r = img.height() - b, max_c = img.width() - b;
  if (ref.row < 0 || ref.col < 0 || ref.row > max_r || ref.col > max_c)
    throw std::invalid_argument("reference block outside the image");
  const int half = (p.window - b) / 2;
  const int r0 = std::max(0, ref.row - half), r1 = std::min(max_r, ref.row + half);
  const int c0 = std::max(0, ref.col - half), c1 = std::min(max_c, ref.col + half);
  const long candidates = static_cast<long>(r1 - r0 + 1) * (c1 - c0 + 1);
  if (candidates < p.group_size)
    throw std::invalid_argument("search window holds " + std::to_string(candidates) + " blocks, fewer than group size " +
                                std::to_string(p.group_size));

  // Best non-reference candidates, ascending by (distance, raster order).
  // Candidates arrive in raster order, so an equal distance never displaces
  // an entry already held.
  struct Scored {
    double dist;
    BlockPos pos;
  };
  const std::size_t keep = static_cast<std::size_t>(p.group_size) - 1;
  std::vector<Scored> best;
  best.reserve(keep + 1);
  const int w = img.width();
  const auto data = img.data();

  for (int r = r0; r <= r1 && keep > 0; ++r)
    for (int c = c0; c <= c1; ++c) {
      if (r == ref.row && c == ref.col) continue;
      const double bound = best.size() == keep ? best.back().dist : std::numeric_limits<double>::infinity();
      double d = 0.0;
      for (int i = 0; i < b && d < bound; ++i) {
        const double* a = &data[static_cast<std::size_t>(ref.row + i) * w + ref.col];
        const double* q = &data[static_cast<std::size_t>(r + i) * w + c];
        for (int j = 0; j < b; ++j) {
          const double diff = a[j] - q[j];
          d += diff * diff;
        }
      }
      if (d >= bound) continue;
      auto at = std::upper_bound(best.begin(), best.end(), d, [](double v, const Scored& s) { return v < s.dist; });
      best.insert(at, Scored{d, {r, c}});
      if (best.size() > keep) best.pop_back();
    }

  GroupIndex g{ref, {}};
  g.members.reserve(static_cast<std::size_t>(p.group_size));
  g.members.push_back(ref);
  for (const auto& s : best) g.members.push_back(s.pos);
  return g;
}

GroupingPlan make_plan(const Image& img, const NlsmParams& p) {
  const auto refs = reference_positions(img.width(), img.height(), p);
  GroupingPlan plan{p, img.width(), img.height(), std::vector<GroupIndex>(refs.size()), {}};
  const long n = static_cast<long>(refs.size());
  // Exceptions may not leave an OpenMP region; keep the first and rethrow.
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic, 16)
  for (long i = 0; i < n; ++i) {
    try {
      plan.groups[static_cast<std::size_t>(i)] = match_blocks(img, refs[static_cast<std::size_t>(i)], p);
    } catch (...) {
#pragma omp critical(jsm_make_plan)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);

  plan.coverage.assign(img.size(), 0);
  for (const auto& g : plan.groups)
    for (const auto& m : g.members)
      for (int r = 0; r < p.block; ++r)
        for (int c = 0; c < p.block; ++c) ++plan.coverage[static_cast<std::size_t>(m.row + r) * img.width() + m.col + c];
  return plan;
}

CoeffVector coefficients(const Image& img, const GroupingPlan& plan) {
  if (img.width() != plan.width || img.height() != plan.height)
    throw std::invalid_argument("image does not match grouping plan");
  const std::size_t len = plan.group_length();
  CoeffVector theta(plan.coeff_count());
  const long n = static_cast<long>(plan.groups.size());
#pragma omp parallel
  {
    GroupTransform tf(plan.params.block, plan.params.group_size);
    std::vector<double> buf(len);
#pragma omp for schedule(static)
    for (long i = 0; i < n; ++i) {
      gather_group(img, plan.groups[static_cast<std::size_t>(i)], plan.params.block, buf);
      tf.forward(buf, std::span<double>(theta).subspan(static_cast<std::size_t>(i) * len, len));
    }
  }
  return theta;
}

Image synthesize(const CoeffVector& theta, const GroupingPlan& plan) {
  if (theta.size() != plan.coeff_count()) throw std::invalid_argument("coefficient vector does not match plan");
  const std::size_t len = plan.group_length();
  const int b = plan.params.block;
  std::vector<double> estimates(theta.size());
  const long n = static_cast<long>(plan.groups.size());
#pragma omp parallel
  {
    GroupTransform tf(b, plan.params.group_size);
#pragma omp for schedule(static)
    for (long i = 0; i < n; ++i) {
      const std::size_t off = static_cast<std::size_t>(i) * len;
      tf.inverse(std::span<const double>(theta).subspan(off, len), std::span<double>(estimates).subspan(off, len));
    }
  }

  // Scatter in canonical group order so the sums do not depend on threads.
  Image out(plan.width, plan.height, 0.0);
  std::size_t k = 0;
  for (const auto& g : plan.groups)
    for (const auto& m : g.members)
      for (int r = 0; r < b; ++r)
        for (int c = 0; c < b; ++c) out(m.row + r, m.col + c) += estimates[k++];
  for (std::size_t i = 0; i < out.size(); ++i) out[i] /= plan.coverage[i];
  return out;
}

std::pair<GroupingPlan, CoeffVector> analyze(const Image& img, const NlsmParams& p) {
  GroupingPlan plan = make_plan(img, p);
  CoeffVector theta = coefficients(img, plan);
  return {std::move(plan), std::move(theta)};
}

double psi_nlsm(const Image& img, const NlsmParams& p) {
  const auto [plan, theta] = analyze(img, p);
  double acc = 0.0;
  for (double v : theta) acc += std::abs(v);
  return acc;
}

std::vector<double> soft(std::span<const double> v, double t) {
  if (t < 0.0) throw std::invalid_argument("soft threshold must be nonnegative");
  std::vector<double> out(v.size());
  std::transform(v.begin(), v.end(), out.begin(), [t](double x) { return soft(x, t); });
  return out;
}

ThresholdRule parse_threshold_rule(const std::string& name) {
  if (name == "sqrt2rho") return ThresholdRule::SqrtTwoRho;
  if (name == "rho") return ThresholdRule::Rho;
  if (name == "sqrt2alpha") return ThresholdRule::SqrtTwoAlpha;
  throw std::invalid_argument("unknown threshold rule '" + name + "' (expected sqrt2rho|rho|sqrt2alpha)");
}

std::string to_string(ThresholdRule rule) {
  switch (rule) {
    case ThresholdRule::SqrtTwoRho: return "sqrt2rho";
    case ThresholdRule::Rho: return "rho";
    case ThresholdRule::SqrtTwoAlpha: return "sqrt2alpha";
  }
  return "?";
}

double nlsm_threshold(double alpha, std::size_t coeff_count, std::size_t pixel_count, ThresholdRule rule) {
  const double rho = static_cast<double>(coeff_count) / static_cast<double>(pixel_count) * alpha;
  switch (rule) {
    case ThresholdRule::SqrtTwoRho: return std::sqrt(2.0 * rho);
    case ThresholdRule::Rho: return rho;
    case ThresholdRule::SqrtTwoAlpha: return std::sqrt(2.0 * alpha);
  }
  return std::sqrt(2.0 * rho);
}

NlsmProxResult prox_nlsm_detailed(const Image& r, double alpha, const NlsmParams& p, ThresholdRule rule) {
  if (!(alpha > 0.0)) throw std::invalid_argument("prox_nlsm: alpha must be positive");
  auto [plan, theta] = analyze(r, p);
  const double t = nlsm_threshold(alpha, plan.coeff_count(), r.size(), rule);
  for (double& v : theta) v = soft(v, t);
  Image x = synthesize(theta, plan);
  return {std::move(x), std::move(plan), t};
}

Image prox_nlsm(const Image& r, double alpha, const NlsmParams& p, ThresholdRule rule) {
  return prox_nlsm_detailed(r, alpha, p, rule).x;
}

VarianceDiagnostic variance_diagnostic(const Image& x, const Image& r, const GroupingPlan& plan) {
  if (!x.same_shape(r)) throw std::invalid_argument("variance_diagnostic: dimension mismatch");
  Image e(x.width(), x.height());
  double sse = 0.0;
  for (std::size_t i = 0; i < e.size(); ++i) {
    e[i] = x[i] - r[i];
    sse += e[i] * e[i];
  }
  // The 3D transform is linear, so Theta_x - Theta_r = Theta_{x - r}.
  const CoeffVector de = coefficients(e, plan);
  double tse = 0.0;
  for (double v : de) tse += v * v;
  return {sse / static_cast<double>(e.size()), tse / static_cast<double>(de.size())};
}

VarianceDiagnostic variance_diagnostic(const Image& x, const Image& r, const NlsmParams& p) {
  if (!x.same_shape(r)) throw std::invalid_argument("variance_diagnostic: dimension mismatch");
  return variance_diagnostic(x, r, make_plan(r, p));
}

}  // namespace jsm
