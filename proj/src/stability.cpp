#include "rss/stability.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "rss/error.hpp"
#include "rss/parallel.hpp"

namespace rss {

void StabilityConfig::validate() const {
  if (K < 1) throw Error("stability: K must be at least 1");
  if (!(alpha > 0 && alpha <= 1)) throw Error("stability: alpha must lie in (0, 1]");
  if (!(beta > 0 && beta <= 1)) throw Error("stability: beta must lie in (0, 1]");
  if (block.x < 1 || block.y < 1 || block.z < 1) throw Error("stability: block dimensions must be >= 1");
  solver.validate();
}

std::int64_t cluster_quota(std::size_t cluster_size, double beta) {
  return std::max<std::int64_t>(1, std::llround(beta * static_cast<double>(cluster_size)));
}

std::vector<std::size_t> draw_row_subsample(Index n, double alpha, RngStream& rng) {
  const auto m = std::llround(alpha * static_cast<double>(n));
  if (m < 1 || m > n) {
    throw Error("row subsample: round(alpha * n) = " + std::to_string(m) + " is outside [1, n]");
  }
  return rng.sample_without_replacement(static_cast<std::size_t>(n), static_cast<std::size_t>(m));
}

namespace {

void trim_to(std::vector<std::int32_t>& set, std::int64_t quota, RngStream& rng) {
  if (static_cast<std::int64_t>(set.size()) > quota) {
    const auto keep = rng.sample_without_replacement(set.size(), static_cast<std::size_t>(quota));
    std::vector<std::int32_t> kept;
    kept.reserve(keep.size());
    for (auto i : keep) kept.push_back(set[i]);
    set = std::move(kept);
  }
  std::sort(set.begin(), set.end());
}

}  // namespace

std::vector<std::vector<std::int32_t>> constrained_block_subsample(const GridGeometry* geometry,
                                                                    const Parcellation& parc,
                                                                    double beta, BlockShape block,
                                                                    RngStream& rng) {
  if (!(beta > 0 && beta <= 1)) throw Error("block subsample: beta must lie in (0, 1]");
  const auto q = static_cast<std::size_t>(parc.q());
  const auto& members = parc.members();
  std::vector<std::int64_t> quota(q);
  for (std::size_t g = 0; g < q; ++g) quota[g] = cluster_quota(members[g].size(), beta);

  std::vector<std::vector<std::int32_t>> picked(q);
  if (geometry == nullptr) {
    for (std::size_t g = 0; g < q; ++g) {
      const auto idx = rng.sample_without_replacement(members[g].size(), static_cast<std::size_t>(quota[g]));
      for (auto i : idx) picked[g].push_back(members[g][i]);
    }
    return picked;
  }

  if (geometry->size() == 0) throw Error("block subsample: degenerate geometry (empty mask)");
  if (geometry->size() != parc.p()) throw Error("block subsample: geometry and parcellation disagree on p");
  if (block.x < 1 || block.y < 1 || block.z < 1) throw Error("block subsample: block dimensions must be >= 1");

  const auto& dims = geometry->dims();
  // Anchors range over every placement that covers at least one grid cell,
  // so each cell is covered by the same number of anchors.
  const std::int64_t ax = dims[0] + block.x - 1;
  const std::int64_t ay = dims[1] + block.y - 1;
  const std::int64_t az = dims[2] + block.z - 1;
  const auto anchors = static_cast<std::uint64_t>(ax * ay * az);

  std::vector<char> taken(parc.p(), 0);
  std::vector<char> full(q, 0);
  std::size_t open = q;
  std::vector<std::int32_t> hits;
  hits.reserve(static_cast<std::size_t>(block.volume()));
  std::vector<std::size_t> touched;

  while (open > 0) {
    const auto a = rng.below(anchors);
    const auto x0 = static_cast<std::int32_t>(a % ax) - (block.x - 1);
    const auto y0 = static_cast<std::int32_t>((a / ax) % ay) - (block.y - 1);
    const auto z0 = static_cast<std::int32_t>(a / (ax * ay)) - (block.z - 1);
    hits.clear();
    for (std::int32_t dz = 0; dz < block.z; ++dz) {
      for (std::int32_t dy = 0; dy < block.y; ++dy) {
        for (std::int32_t dx = 0; dx < block.x; ++dx) {
          const auto f = geometry->feature_at(Coord{x0 + dx, y0 + dy, z0 + dz});
          if (f >= 0) hits.push_back(f);
        }
      }
    }
    // Blocks that miss the mask are redrawn; they carry no voxels.
    if (hits.empty()) continue;
    touched.clear();
    for (auto f : hits) {
      const auto g = static_cast<std::size_t>(parc[static_cast<std::size_t>(f)]);
      if (full[g] || taken[static_cast<std::size_t>(f)]) continue;
      taken[static_cast<std::size_t>(f)] = 1;
      picked[g].push_back(f);
      touched.push_back(g);
    }
    for (auto g : touched) {
      if (!full[g] && static_cast<std::int64_t>(picked[g].size()) >= quota[g]) {
        full[g] = 1;
        --open;
      }
    }
  }
  for (std::size_t g = 0; g < q; ++g) trim_to(picked[g], quota[g], rng);
  return picked;
}

Eigen::MatrixXd average_supervoxels(const RowMatrix& X, std::span<const std::size_t> rows,
                                    const std::vector<std::vector<std::int32_t>>& picked) {
  Eigen::MatrixXd out(static_cast<Index>(rows.size()), static_cast<Index>(picked.size()));
  for (std::size_t g = 0; g < picked.size(); ++g) {
    if (picked[g].empty()) throw Error("average_supervoxels: empty picked set");
    const double inv = 1.0 / static_cast<double>(picked[g].size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const double* row = X.data() + static_cast<std::size_t>(rows[r]) * static_cast<std::size_t>(X.cols());
      double acc = 0.0;
      for (auto j : picked[g]) acc += row[j];
      out(static_cast<Index>(r), static_cast<Index>(g)) = acc * inv;
    }
  }
  return out;
}

SubsampleDraw draw_resampling(const Dataset& d, const Parcellation& parc, const StabilityConfig& cfg,
                              std::uint64_t k) {
  auto rng = derive_stream(cfg.master_seed, k);
  SubsampleDraw draw;
  draw.rows = draw_row_subsample(d.n(), cfg.alpha, rng);
  const GridGeometry* geom = d.geometry() ? &*d.geometry() : nullptr;
  draw.picked = constrained_block_subsample(geom, parc, cfg.beta, cfg.block, rng);
  return draw;
}

StabilityRun run_stability_selection_detailed(const Dataset& d, const Parcellation& parc,
                                              const StabilityConfig& cfg) {
  cfg.validate();
  if (static_cast<Index>(parc.p()) != d.p()) throw Error("stability: parcellation size differs from p");

  struct IterationResult {
    std::vector<std::int32_t> selected;
    bool converged = true;
    double kkt = 0.0;
  };
  std::vector<IterationResult> results(static_cast<std::size_t>(cfg.K));

  parallel_for(results.size(), cfg.threads, [&](std::size_t k) {
    const auto draw = draw_resampling(d, parc, cfg, k);
    const Eigen::MatrixXd Xtilde = average_supervoxels(d.X(), draw.rows, draw.picked);
    Labels ysub(static_cast<Index>(draw.rows.size()));
    for (std::size_t r = 0; r < draw.rows.size(); ++r) ysub[static_cast<Index>(r)] = d.y()[static_cast<Index>(draw.rows[r])];
    const auto sol = fit_l1_logistic(Xtilde, ysub, cfg.solver);
    auto& res = results[k];
    res.converged = sol.converged;
    res.kkt = sol.kkt_residual;
    for (std::size_t g = 0; g < draw.picked.size(); ++g) {
      if (std::abs(sol.w[static_cast<Index>(g)]) > cfg.solver.support_epsilon) {
        res.selected.insert(res.selected.end(), draw.picked[g].begin(), draw.picked[g].end());
      }
    }
  });

  StabilityRun run;
  run.scores.K = cfg.K;
  run.scores.counts.assign(static_cast<std::size_t>(d.p()), 0);
  for (const auto& res : results) {
    if (!res.converged) ++run.failed_fits;
    for (auto j : res.selected) ++run.scores.counts[static_cast<std::size_t>(j)];
  }
  if (run.failed_fits > cfg.max_failure_fraction * cfg.K) {
    std::ostringstream msg;
    msg << "stability: solver failed to converge in " << run.failed_fits << " of " << cfg.K
        << " resamplings (worst KKT residuals:";
    std::vector<double> kkts;
    for (const auto& r : results) {
      if (!r.converged) kkts.push_back(r.kkt);
    }
    std::sort(kkts.rbegin(), kkts.rend());
    for (std::size_t i = 0; i < std::min<std::size_t>(3, kkts.size()); ++i) msg << ' ' << kkts[i];
    msg << ")";
    throw Error(msg.str());
  }
  return run;
}

std::vector<Index> threshold_scores(const StabilityScores& s, double tau) {
  std::vector<Index> out;
  for (std::size_t i = 0; i < s.counts.size(); ++i) {
    if (static_cast<double>(s.counts[i]) / static_cast<double>(s.K) >= tau) out.push_back(static_cast<Index>(i));
  }
  return out;
}

}  // namespace rss
