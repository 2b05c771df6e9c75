#include "previs/corpus.hpp"

#include "previs/error.hpp"
#include "previs/pipeline.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <random>

namespace previs {

double mean_center_offset(const ShotMetrics& m)
{
  if (m.center_offset.empty()) return 0.0;
  return std::accumulate(m.center_offset.begin(), m.center_offset.end(), 0.0) /
         static_cast<double>(m.center_offset.size());
}

bool passes_gates(const ShotMetrics& m, const CleanGates& gates)
{
  return m.degenerate_frames == 0 && m.jerk < gates.max_jerk && mean_center_offset(m) < gates.max_mean_center_offset;
}

ClassLabels labels_for(const GeneratorTag& tag)
{
  return {static_cast<int>(tag.movement), static_cast<int>(tag.scale), static_cast<int>(tag.angle)};
}

std::vector<ShotProposal> gated_clean_shots(const std::vector<StoryParams>& stories, const CameraGridConfig& grid,
                                            ImageSize size, const CleanGates& gates)
{
  std::vector<ShotProposal> out;
  for (const auto& s : stories)
    for (Movement m : kAllMovements)
      for (ShotScale sc : kAllScales)
        for (ShotAngle a : kAllAngles)
          for (auto& cam : enumerate_camera_proposals({m, sc, a}, s, grid)) {
            ShotProposal p = simulate_shot(s, cam, size, "clean." + std::to_string(out.size()));
            if (passes_gates(p.metrics, gates)) out.push_back(std::move(p));
          }
  return out;
}

namespace {

std::vector<std::size_t> pick_sources(const std::vector<ShotProposal>& candidates, int n, std::mt19937_64& rng)
{
  std::map<int, std::vector<std::size_t>> by_movement;
  for (std::size_t i = 0; i < candidates.size(); ++i)
    by_movement[static_cast<int>(candidates[i].camera.tag.movement)].push_back(i);
  for (auto& [m, idx] : by_movement) std::shuffle(idx.begin(), idx.end(), rng);

  std::vector<std::size_t> picked;
  for (std::size_t round = 0; static_cast<int>(picked.size()) < n; ++round) {
    bool any = false;
    for (auto& [m, idx] : by_movement) {
      if (round >= idx.size() || static_cast<int>(picked.size()) == n) continue;
      picked.push_back(idx[round]);
      any = true;
    }
    if (!any) break;
  }
  std::shuffle(picked.begin(), picked.end(), rng);
  return picked;
}

TrainSample make_sample(const SceneMesh& mesh, const ShotProposal& p, int y, const std::string& source,
                        const FeatureConfig& fc, bool with_view_b)
{
  ShotFeatures f = extract_features(mesh, p, fc, with_view_b);
  TrainSample s;
  s.view_a = std::move(f.view_a);
  s.view_b = std::move(f.view_b);
  s.y = y;
  s.labels = labels_for(p.camera.tag);
  s.source = source;
  return s;
}

}  // namespace

Corpus build_corpus(const SceneMesh& mesh, const std::vector<ShotProposal>& candidates, const CorpusOptions& opts)
{
  if (static_cast<int>(candidates.size()) < opts.clean)
    throw Error(ErrorCode::Validation, "corpus needs " + std::to_string(opts.clean) + " clean shots, got " +
                                           std::to_string(candidates.size()));
  std::mt19937_64 rng(opts.seed);
  const auto sources = pick_sources(candidates, opts.clean, rng);
  const int n = static_cast<int>(sources.size());
  const int n_holdout = static_cast<int>(std::lround(opts.holdout_fraction * n));
  const int n_train = n - n_holdout;
  const int per = opts.pool_negatives_per_clean;

  // Job list: per source the clean shot, one paired negative and, for
  // held-out sources, the extra pool perturbations.
  struct Job {
    int source;
    int variant;  // 0 clean, 1 paired negative, 2.. pool-only negatives
  };
  std::vector<Job> jobs;
  for (int i = 0; i < n; ++i) {
    jobs.push_back({i, 0});
    jobs.push_back({i, 1});
    if (i >= n_train)
      for (int v = 2; v <= per; ++v) jobs.push_back({i, v});
  }

  std::vector<TrainSample> samples(jobs.size());
  parallel_for(
      jobs.size(),
      [&](std::size_t j) {
        const ShotProposal& clean = candidates[sources[jobs[j].source]];
        const bool pool_only = jobs[j].variant >= 2;
        if (jobs[j].variant == 0) {
          samples[j] = make_sample(mesh, clean, 1, clean.id, opts.features, true);
          return;
        }
        const std::uint64_t seed = opts.seed * 1000003ULL + static_cast<std::uint64_t>(jobs[j].source) * 101ULL +
                                   static_cast<std::uint64_t>(jobs[j].variant);
        CameraTrajectory neg = perturb_negative(clean.camera, opts.perturb, seed, clean.id);
        const ShotProposal p =
            simulate_shot(clean.story, neg, clean.size, clean.id + ".neg" + std::to_string(jobs[j].variant));
        samples[j] = make_sample(mesh, p, 0, clean.id, opts.features, !pool_only);
      },
      opts.threads);

  Corpus c;
  c.sources = n;
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    const bool held = jobs[j].source >= n_train;
    const int v = jobs[j].variant;
    if (!held) {
      c.train.push_back(std::move(samples[j]));
      continue;
    }
    if (v <= 1) c.heldout.push_back(samples[j]);
    TrainSample pooled = std::move(samples[j]);
    pooled.view_b.resize(0, 0);
    c.pool.push_back(std::move(pooled));
  }
  return c;
}

RankingEvaluation evaluate_ranker(const RankerModel& model, const Corpus& corpus)
{
  auto score_all = [&](const std::vector<TrainSample>& set, std::vector<double>& scores, std::vector<int>& labels) {
    scores.resize(set.size());
    labels.resize(set.size());
    for (std::size_t i = 0; i < set.size(); ++i) {
      scores[i] = model.forward(set[i].view_a).p_b;
      labels[i] = set[i].y;
    }
  };
  RankingEvaluation ev;
  std::vector<double> s;
  std::vector<int> y;
  score_all(corpus.heldout, s, y);
  ev.heldout_auc = auc(s, y);

  score_all(corpus.pool, s, y);
  ev.pool_auc = auc(s, y);
  ev.pool_size = static_cast<int>(s.size());
  ev.pool_clean = static_cast<int>(std::count(y.begin(), y.end(), 1));

  // Rank with ties broken against clean shots so a constant scorer earns nothing.
  std::vector<std::size_t> order(s.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (s[a] != s[b]) return s[a] > s[b];
    return y[a] < y[b];
  });
  const std::size_t top = (s.size() + 9) / 10;
  int clean_top = 0;
  for (std::size_t r = 0; r < top; ++r) clean_top += y[order[r]];
  ev.top_decile_clean_fraction = ev.pool_clean ? static_cast<double>(clean_top) / ev.pool_clean : 0.0;
  return ev;
}

}  // namespace previs
