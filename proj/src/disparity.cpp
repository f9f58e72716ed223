#include "lfuw/disparity.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace lfuw {

SubLF make_sublf(SubLFKind kind, int angular_rows, int angular_cols) {
  const int vc = (angular_rows - 1) / 2, uc = (angular_cols - 1) / 2;
  SubLF s;
  s.id = kind;
  switch (kind) {
    case SubLFKind::kHorizontalRow:
      for (int u = 0; u < angular_cols; ++u) s.views.emplace_back(vc, u);
      break;
    case SubLFKind::kVerticalColumn:
      for (int v = 0; v < angular_rows; ++v) s.views.emplace_back(v, uc);
      break;
    case SubLFKind::kMainDiagonal:
      for (int o = -std::min(vc, uc); o <= std::min(vc, uc); ++o)
        s.views.emplace_back(vc + o, uc + o);
      break;
    case SubLFKind::kAntiDiagonal:
      for (int o = -std::min(vc, uc); o <= std::min(vc, uc); ++o)
        s.views.emplace_back(vc + o, uc - o);
      break;
  }
  return s;
}

std::vector<SubLF> all_sublfs(int angular_rows, int angular_cols) {
  return {make_sublf(SubLFKind::kHorizontalRow, angular_rows, angular_cols),
          make_sublf(SubLFKind::kVerticalColumn, angular_rows, angular_cols),
          make_sublf(SubLFKind::kMainDiagonal, angular_rows, angular_cols),
          make_sublf(SubLFKind::kAntiDiagonal, angular_rows, angular_cols)};
}

std::vector<double> make_hypotheses(double lo, double hi, double step) {
  if (!(step > 0.0) || !(hi >= lo))
    throw EmptyHypotheses("make_hypotheses: bad range");
  std::vector<double> h;
  const int n = static_cast<int>(std::round((hi - lo) / step));
  for (int i = 0; i <= n; ++i) h.push_back(lo + step * i);
  return h;
}

CostVolume build_cost_volume(const LightField& lf, const SubLF& sublf,
                             const std::vector<double>& hypotheses) {
  if (hypotheses.empty())
    throw EmptyHypotheses("build_cost_volume: no hypotheses");
  for (size_t i = 1; i < hypotheses.size(); ++i)
    if (!(hypotheses[i] > hypotheses[i - 1]))
      throw EmptyHypotheses("build_cost_volume: hypotheses must increase");

  const Index h = lf.height, w = lf.width;
  const int vc = lf.center_row(), uc = lf.center_col();
  CostVolume cv;
  cv.hypotheses = hypotheses;
  cv.sublf_id = sublf.id;
  cv.cost.assign(hypotheses.size(), Mat());

#pragma omp parallel for schedule(static)
  for (int hi = 0; hi < static_cast<int>(hypotheses.size()); ++hi) {
    const double d = hypotheses[static_cast<size_t>(hi)];
    Mat cost(h, w);
    std::vector<double> samples;
    samples.reserve(sublf.views.size());
    for (Index x = 0; x < w; ++x) {
      for (Index y = 0; y < h; ++y) {
        double cost_sum = 0.0;
        int n_valid = 0;
        for (int c = 0; c < 3; ++c) {
          samples.clear();
          for (const auto& [v, u] : sublf.views) {
            const double dv = static_cast<double>(v - vc);
            const double du = static_cast<double>(u - uc);
            const double sy = static_cast<double>(y) + dv * d;
            const double sx = static_cast<double>(x) + du * d;
            const Mat& p = lf.view(v, u).plane(c);
            if (!bilinear_valid(p, sy, sx)) continue;
            samples.push_back(bilinear_at(p, sy, sx));
          }
          if (c == 0) n_valid = static_cast<int>(samples.size());
          if (samples.size() >= 2) {
            double mean = 0.0;
            for (double s : samples) mean += s;
            mean /= static_cast<double>(samples.size());
            double var = 0.0;
            for (double s : samples) var += (s - mean) * (s - mean);
            cost_sum += var / static_cast<double>(samples.size());
          }
        }
        cost(y, x) = (n_valid < 2) ? kUnmatchedCost : cost_sum / 3.0;
      }
    }
    cv.cost[static_cast<size_t>(hi)] = std::move(cost);
  }
  return cv;
}

std::pair<DisparityMap, ReliabilityMap> wta_disparity(const CostVolume& cv,
                                                      double tau) {
  const Index h = cv.cost[0].rows(), w = cv.cost[0].cols();
  const int n = static_cast<int>(cv.hypotheses.size());
  DisparityMap disp;
  disp.values = Mat::Zero(h, w);
  disp.valid = BoolMat::Constant(h, w, false);
  ReliabilityMap rel;
  rel.values = Mat::Zero(h, w);

  for (Index x = 0; x < w; ++x) {
    for (Index y = 0; y < h; ++y) {
      int best = 0;
      double best_cost = cv.cost[0](y, x);
      for (int i = 1; i < n; ++i) {
        const double c = cv.cost[static_cast<size_t>(i)](y, x);
        const double d = cv.hypotheses[static_cast<size_t>(i)];
        const double bd = cv.hypotheses[static_cast<size_t>(best)];
        if (c < best_cost ||
            (c == best_cost &&
             (std::abs(d) < std::abs(bd) || (std::abs(d) == std::abs(bd) && d < bd)))) {
          best = i;
          best_cost = c;
        }
      }
      if (best_cost >= kUnmatchedCost) continue;  // stays invalid

      // Margin against the best matched alternative; a lone matched
      // hypothesis carries no confidence.
      double second = kUnmatchedCost;
      for (int i = 0; i < n; ++i) {
        if (i == best) continue;
        second = std::min(second, cv.cost[static_cast<size_t>(i)](y, x));
      }
      if (second >= kUnmatchedCost) second = best_cost;

      double d = cv.hypotheses[static_cast<size_t>(best)];
      if (best > 0 && best < n - 1) {
        const double c0 = cv.cost[static_cast<size_t>(best - 1)](y, x);
        const double c1 = best_cost;
        const double c2 = cv.cost[static_cast<size_t>(best + 1)](y, x);
        const double denom = c0 - 2.0 * c1 + c2;
        if (c0 < kUnmatchedCost && c2 < kUnmatchedCost && denom > 0.0) {
          const double step = cv.hypotheses[static_cast<size_t>(best + 1)] -
                              cv.hypotheses[static_cast<size_t>(best)];
          double delta = 0.5 * (c0 - c2) / denom;
          delta = std::min(0.5, std::max(-0.5, delta));
          d += delta * step;
        }
      }
      disp.values(y, x) = d;
      disp.valid(y, x) = true;
      const double margin = std::max(0.0, second - best_cost);
      rel.values(y, x) = 1.0 - std::exp(-margin / tau);
    }
  }
  return {std::move(disp), std::move(rel)};
}

std::pair<DisparityMap, ReliabilityMap> fuse(
    const std::vector<std::pair<DisparityMap, ReliabilityMap>>& estimates) {
  if (estimates.empty()) throw EmptyInput("fuse: no estimates");
  const Index h = estimates[0].first.height(), w = estimates[0].first.width();
  for (const auto& [d, r] : estimates)
    if (d.height() != h || d.width() != w || r.values.rows() != h ||
        r.values.cols() != w)
      throw ShapeMismatch("fuse: estimate shapes differ");

  DisparityMap disp;
  disp.values = Mat::Zero(h, w);
  disp.valid = BoolMat::Constant(h, w, false);
  ReliabilityMap rel;
  rel.values = Mat::Zero(h, w);
  for (Index x = 0; x < w; ++x) {
    for (Index y = 0; y < h; ++y) {
      double best_rel = -1.0;
      for (const auto& [d, r] : estimates) {
        if (d.valid(y, x)) best_rel = std::max(best_rel, r.values(y, x));
      }
      if (best_rel < 0.0) continue;
      // Reliabilities within kFuseTie are indistinguishable (margin noise);
      // the earliest such estimate wins so weak-texture regions inherit one
      // coherent sub light field instead of a per-pixel coin flip.
      for (size_t i = 0; i < estimates.size(); ++i) {
        if (!estimates[i].first.valid(y, x)) continue;
        if (estimates[i].second.values(y, x) >= best_rel - kFuseTie) {
          disp.values(y, x) = estimates[i].first.values(y, x);
          disp.valid(y, x) = true;
          rel.values(y, x) = best_rel;
          break;
        }
      }
    }
  }
  return {std::move(disp), std::move(rel)};
}

DisparityMap smooth_disparity(const DisparityMap& disp, const Image& guide,
                              int radius, double sigma, double edge_threshold,
                              bool fill_remaining) {
  const Index h = disp.height(), w = disp.width();
  if (guide.height() != h || guide.width() != w)
    throw ShapeMismatch("smooth_disparity: guide shape mismatch");
  if (!disp.valid.any())
    throw EmptyInput("smooth_disparity: no valid disparity pixels");

  DisparityMap out;
  out.values = Mat::Zero(h, w);
  out.valid = BoolMat::Constant(h, w, false);
  const double inv2s2 = 1.0 / (2.0 * sigma * sigma);

#pragma omp parallel for schedule(static)
  for (int xo = 0; xo < static_cast<int>(w); ++xo) {
    const Index x = xo;
    std::vector<std::pair<double, double>> win;  // (value, weight)
    for (Index y = 0; y < h; ++y) {
      win.clear();
      double wsum = 0.0;
      for (Index dy = -radius; dy <= radius; ++dy) {
        const Index yy = y + dy;
        if (yy < 0 || yy >= h) continue;
        for (Index dx = -radius; dx <= radius; ++dx) {
          const Index xx = x + dx;
          if (xx < 0 || xx >= w) continue;
          if (!disp.valid(yy, xx)) continue;
          double diff = 0.0;
          for (int c = 0; c < 3; ++c)
            diff = std::max(diff, std::abs(guide.at(yy, xx, c) - guide.at(y, x, c)));
          if (diff > edge_threshold) continue;
          const double wt = std::exp(-diff * diff * inv2s2);
          win.emplace_back(disp.values(yy, xx), wt);
          wsum += wt;
        }
      }
      if (win.empty() || wsum <= 0.0) continue;  // stays invalid, filled below
      std::sort(win.begin(), win.end());
      double acc = 0.0;
      for (const auto& [val, wt] : win) {
        acc += wt;
        if (acc >= 0.5 * wsum) {
          out.values(y, x) = val;
          out.valid(y, x) = true;
          break;
        }
      }
    }
  }

  // Remaining holes (nothing valid in the window) fill from nearest valid
  // neighbours by iterative dilation.
  while (fill_remaining && !out.valid.all()) {
    DisparityMap next = out;
    bool progressed = false;
    for (Index x = 0; x < w; ++x) {
      for (Index y = 0; y < h; ++y) {
        if (out.valid(y, x)) continue;
        double sum = 0.0;
        int cnt = 0;
        const Index ys[4] = {y - 1, y + 1, y, y};
        const Index xs[4] = {x, x, x - 1, x + 1};
        for (int k = 0; k < 4; ++k) {
          if (ys[k] < 0 || ys[k] >= h || xs[k] < 0 || xs[k] >= w) continue;
          if (!out.valid(ys[k], xs[k])) continue;
          sum += out.values(ys[k], xs[k]);
          ++cnt;
        }
        if (cnt > 0) {
          next.values(y, x) = sum / cnt;
          next.valid(y, x) = true;
          progressed = true;
        }
      }
    }
    out = std::move(next);
    if (!progressed) break;
  }
  return out;
}

std::pair<DisparityMap, ReliabilityMap> estimate_disparity(
    const LightField& lf, const DisparityConfig& config) {
  const auto hyps = make_hypotheses(config.hyp_min, config.hyp_max, config.hyp_step);
  std::vector<std::pair<DisparityMap, ReliabilityMap>> estimates;
  for (const SubLF& s : all_sublfs(lf.angular_rows, lf.angular_cols)) {
    CostVolume cv = build_cost_volume(lf, s, hyps);
    estimates.push_back(wta_disparity(cv));
  }
  auto [disp, rel] = fuse(estimates);
  if (config.smooth) {
    // Only confident pixels vote in the median; the rest are refilled from
    // them. Low-contrast (heavily veiled) inputs lose most of their votes
    // here, so estimates recover as the input is restored.
    DisparityMap gated = disp;
    for (Index x = 0; x < gated.width(); ++x)
      for (Index y = 0; y < gated.height(); ++y)
        if (rel.values(y, x) < config.min_reliability) gated.valid(y, x) = false;
    if (!gated.valid.any()) gated = disp;  // keep the call total
    disp = smooth_disparity(gated, lf.center_view(), config.smooth_radius,
                            config.smooth_sigma, config.edge_threshold);
  }
  return {std::move(disp), std::move(rel)};
}

}  // namespace lfuw
