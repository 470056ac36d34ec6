#include "jsm/lsm.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace jsm {

GradientField gradient(const Image& u) {
  const int w = u.width(), h = u.height();
  GradientField g{w, h, std::vector<double>(u.size(), 0.0), std::vector<double>(u.size(), 0.0)};
  for (int r = 0; r < h; ++r) {
    const std::size_t row = static_cast<std::size_t>(r) * w;
    for (int c = 0; c < w; ++c) {
      if (r + 1 < h) g.dv[row + c] = u[row + w + c] - u[row + c];
      if (c + 1 < w) g.dh[row + c] = u[row + c + 1] - u[row + c];
    }
  }
  return g;
}

namespace {

// out = p + div(q), written into an existing buffer.
void add_divergence(const GradientField& q, std::span<const double> p, std::span<double> out) {
  const int w = q.width, h = q.height;
  for (int r = 0; r < h; ++r) {
    const std::size_t row = static_cast<std::size_t>(r) * w;
    for (int c = 0; c < w; ++c) {
      const std::size_t i = row + c;
      double d = 0.0;
      if (r + 1 < h) d += q.dv[i];
      if (r > 0) d -= q.dv[i - w];
      if (c + 1 < w) d += q.dh[i];
      if (c > 0) d -= q.dh[i - 1];
      out[i] = p[i] + d;
    }
  }
}

}  // namespace

Image divergence(const GradientField& g) {
  if (g.dv.size() != static_cast<std::size_t>(g.width) * g.height || g.dh.size() != g.dv.size())
    throw std::invalid_argument("gradient field size mismatch");
  Image out(g.width, g.height);
  const std::vector<double> zero(out.size(), 0.0);
  add_divergence(g, zero, out.data());
  return out;
}

double psi_lsm(const Image& u) {
  const auto g = gradient(u);
  double acc = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) acc += std::abs(g.dv[i]) + std::abs(g.dh[i]);
  return acc;
}

double lsm_prox_objective(const Image& w, const Image& p, double gamma) {
  double fit = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double d = w[i] - p[i];
    fit += d * d;
  }
  return 0.5 * fit + gamma * psi_lsm(w);
}

Image prox_lsm(const Image& p, double gamma, int inner_iters, TvDual* dual) {
  if (!(gamma > 0.0)) throw std::invalid_argument("prox_lsm: gamma must be positive");
  if (inner_iters < 1) throw std::invalid_argument("prox_lsm: inner_iters must be positive");
  const int w = p.width(), h = p.height();
  const std::size_t n = p.size();
  constexpr double step = 1.0 / 8.0;

  GradientField q{w, h, std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
  if (dual && !dual->empty() && dual->q.width == w && dual->q.height == h) {
    q = dual->q;
    for (std::size_t i = 0; i < n; ++i) {
      q.dv[i] = std::clamp(q.dv[i], -gamma, gamma);
      q.dh[i] = std::clamp(q.dh[i], -gamma, gamma);
    }
  }
  GradientField y = q;        // extrapolated point
  GradientField q_prev = q;
  std::vector<double> wbuf(n);
  double t = 1.0;

  for (int it = 0; it < inner_iters; ++it) {
    add_divergence(y, p.data(), wbuf);
    // Projected gradient step: q = clamp(y + step * D(p + div y)).
    q_prev.dv.swap(q.dv);
    q_prev.dh.swap(q.dh);
    for (int r = 0; r < h; ++r) {
      const std::size_t row = static_cast<std::size_t>(r) * w;
      for (int c = 0; c < w; ++c) {
        const std::size_t i = row + c;
        const double gv = r + 1 < h ? wbuf[i + w] - wbuf[i] : 0.0;
        const double gh = c + 1 < w ? wbuf[i + 1] - wbuf[i] : 0.0;
        q.dv[i] = std::clamp(y.dv[i] + step * gv, -gamma, gamma);
        q.dh[i] = std::clamp(y.dh[i] + step * gh, -gamma, gamma);
      }
    }
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    const double beta = (t - 1.0) / t_next;
    for (std::size_t i = 0; i < n; ++i) {
      y.dv[i] = q.dv[i] + beta * (q.dv[i] - q_prev.dv[i]);
      y.dh[i] = q.dh[i] + beta * (q.dh[i] - q_prev.dh[i]);
    }
    t = t_next;
  }

  Image out(w, h);
  add_divergence(q, p.data(), out.data());
  if (dual) dual->q = std::move(q);
  return out;
}

}  // namespace jsm
