#include "feddig/privacy/attack.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <limits>
#include <numeric>

#include "feddig/error.hpp"
#include "feddig/util/png.hpp"

namespace feddig::privacy {

namespace {

double mse(std::span<const nn::Real> a, std::span<const nn::Real> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s / static_cast<double>(a.size());
}

ReconstructionScore score(const nn::Tensor& recon, std::span<const std::vector<int>> members,
                          const nn::Tensor& shard_images, std::span<const int> shard) {
  ReconstructionScore s;
  const int n = recon.dim(0);
  int hits = 0;
  // Member sample index -> row in the shard image batch.
  std::vector<std::pair<int, int>> position(shard.size());
  for (std::size_t r = 0; r < shard.size(); ++r) position[r] = {shard[r], static_cast<int>(r)};
  std::sort(position.begin(), position.end());
  auto row_of = [&](int sample) {
    const auto it = std::lower_bound(position.begin(), position.end(), std::pair{sample, -1});
    require(it != position.end() && it->first == sample, ErrorCategory::kContract, "digest member outside the shard");
    return it->second;
  };
  for (int i = 0; i < n; ++i) {
    const auto img = recon.slice0(i);
    double best_member = std::numeric_limits<double>::infinity();
    for (int m : members[static_cast<std::size_t>(i)]) best_member = std::min(best_member, mse(img, shard_images.slice0(row_of(m))));
    int nearest = -1;
    double best_any = std::numeric_limits<double>::infinity();
    for (int r = 0; r < shard_images.dim(0); ++r) {
      const double d = mse(img, shard_images.slice0(r));
      if (d < best_any) {
        best_any = d;
        nearest = shard[static_cast<std::size_t>(r)];
      }
    }
    const auto& mem = members[static_cast<std::size_t>(i)];
    if (std::find(mem.begin(), mem.end(), nearest) != mem.end()) ++hits;
    s.mse.push_back(best_member);
  }
  s.mean_mse = n ? std::accumulate(s.mse.begin(), s.mse.end(), 0.0) / n : 0.0;
  s.identification_rate = n ? static_cast<double>(hits) / n : 0.0;
  return s;
}

}  // namespace

AttackReport mount_pseudo_inverse_attack(const nn::Sequential& inverse, const nn::Sequential* guidance,
                                         const digest::DigestStore& store, const nn::Shape& feature_shape,
                                         std::span<const std::vector<int>> members, const data::ImageSet& images,
                                         std::span<const int> shard, const AttackOptions& options) {
  require(members.size() == store.count(), ErrorCategory::kContract, "need member lists for every stored digest");
  AttackReport report;
  report.attacked = static_cast<int>(std::min<std::size_t>(store.count(), static_cast<std::size_t>(options.max_digests)));
  if (report.attacked == 0) return report;
  std::vector<int> rows(static_cast<std::size_t>(report.attacked));
  std::iota(rows.begin(), rows.end(), 0);
  const nn::Tensor digests = store.feature_batch(rows, feature_shape);
  const auto scored = members.first(rows.size());

  // Decoding uses only the digests.
  const nn::Tensor by_inverse = inverse.infer(digests);
  nn::Tensor by_guidance;
  if (guidance) by_guidance = guidance->infer(digests);

  // Scoring step: the only place raw images are read.
  const nn::Tensor shard_images = images.batch(shard);
  report.inverse = score(by_inverse, scored, shard_images, shard);
  if (guidance) report.guidance = score(by_guidance, scored, shard_images, shard);

  if (!options.grid_dir.empty()) {
    std::filesystem::create_directories(options.grid_dir);
    const auto inv_path = options.grid_dir / "inverse.png";
    util::write_png_grid(inv_path, by_inverse, options.grid_columns);
    report.grids.push_back(inv_path);
    if (guidance) {
      const auto g_path = options.grid_dir / "guidance.png";
      util::write_png_grid(g_path, by_guidance, options.grid_columns);
      report.grids.push_back(g_path);
    }
    std::vector<int> first_members;
    for (const auto& m : scored) first_members.push_back(m.front());
    const auto m_path = options.grid_dir / "members.png";
    util::write_png_grid(m_path, images.batch(first_members), options.grid_columns);
    report.grids.push_back(m_path);
  }
  return report;
}

}  // namespace feddig::privacy
