#pragma once

#include "previs/features.hpp"
#include "previs/ranker.hpp"
#include "previs/shot.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace previs {

/// Smoothness and framing gates a clean training shot must pass.
struct CleanGates {
  double max_jerk = 1e-3;
  double max_mean_center_offset = 0.15;
};

double mean_center_offset(const ShotMetrics& m);
bool passes_gates(const ShotMetrics& m, const CleanGates& gates);

ClassLabels labels_for(const GeneratorTag& tag);

/// Every (movement, scale, angle) camera proposal over the given stories,
/// simulated at `size` and filtered by the gates. Ids are "clean.{n}".
std::vector<ShotProposal> gated_clean_shots(const std::vector<StoryParams>& stories, const CameraGridConfig& grid,
                                            ImageSize size, const CleanGates& gates = {});

struct CorpusOptions {
  int clean = 500;                  // clean sources; each also yields one training negative
  double holdout_fraction = 0.2;    // split by source
  int pool_negatives_per_clean = 9;  // held-out ranking pool: clean : perturbed = 1 : n
  PerturbOptions perturb;
  FeatureConfig features;
  std::uint64_t seed = 5;
  unsigned threads = 1;
};

struct Corpus {
  std::vector<TrainSample> train;
  std::vector<TrainSample> heldout;  // clean and one perturbation per held-out source
  std::vector<TrainSample> pool;     // held-out clean plus n perturbations each, view A only
  int sources = 0;
};

/// Picks `clean` sources round-robin over movement types (shuffled per type),
/// pairs each with a perturbed negative and extracts both views.
/// Validation when fewer candidates than requested sources are supplied.
Corpus build_corpus(const SceneMesh& mesh, const std::vector<ShotProposal>& candidates, const CorpusOptions& opts);

struct RankingEvaluation {
  double heldout_auc = 0.0;
  double pool_auc = 0.0;
  double top_decile_clean_fraction = 0.0;  // share of pool clean shots ranked in the top 10%
  int pool_size = 0;
  int pool_clean = 0;
};

RankingEvaluation evaluate_ranker(const RankerModel& model, const Corpus& corpus);

}  // namespace previs
