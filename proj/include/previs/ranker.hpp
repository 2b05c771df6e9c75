#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace previs {

inline constexpr int kMovementClasses = 11;
inline constexpr int kScaleClasses = 3;
inline constexpr int kAngleClasses = 3;
inline constexpr int kClassOutputs = kMovementClasses + kScaleClasses + kAngleClasses;

struct RankerConfig {
  int input_dim = 32 * 32 + 3;
  int hidden = 128;       // d: per-frame encoder width and embedding size
  int embed = 128;        // projection output size
  int queue_size = 6553;  // K
  double tau = 0.07;
  double momentum = 0.999;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 7;
  bool zero_heads = false;  // binary and class heads start at zero

  bool operator==(const RankerConfig&) const = default;
};

struct ClassLabels {
  int movement = 0;
  int scale = 0;
  int angle = 0;
};

struct TrainSample {
  Eigen::MatrixXd view_a;  // frames x input_dim
  Eigen::MatrixXd view_b;
  int y = 1;
  ClassLabels labels;
  std::string source;  // clean shot this sample derives from
};

struct LossBreakdown {
  double binary = 0.0;
  double cls = 0.0;
  double contrastive = 0.0;

  double total() const { return binary + cls + contrastive; }
};

/// Offsets of each tensor inside the flat parameter vector.
struct ParamLayout {
  int D = 0, d = 0, dz = 0;
  Eigen::Index W1 = 0, b1 = 0, wb = 0, bb = 0, Wc = 0, bc = 0, Wp = 0, bp = 0, size = 0;

  static ParamLayout make(int D, int d, int dz);
};

class RankerModel {
 public:
  RankerModel() : RankerModel(RankerConfig{}) {}
  explicit RankerModel(const RankerConfig& cfg);

  struct Output {
    double p_b = 0.5;
    Eigen::VectorXd class_probs;  // three softmax blocks: 11 | 3 | 3
    Eigen::VectorXd z;            // unit projection
    Eigen::VectorXd embedding;    // mean-pooled encoder output
  };

  const RankerConfig& config() const { return cfg_; }
  const ParamLayout& layout() const { return layout_; }

  Eigen::VectorXd& params() { return theta_q_; }
  const Eigen::VectorXd& params() const { return theta_q_; }
  Eigen::VectorXd& key_params() { return theta_k_; }
  const Eigen::VectorXd& key_params() const { return theta_k_; }

  Eigen::MatrixXd& queue() { return queue_; }  // K x embed, unit rows
  const Eigen::MatrixXd& queue() const { return queue_; }
  int queue_head() const { return head_; }
  /// Writes a key into the oldest slot and returns that slot.
  int enqueue(const Eigen::VectorXd& key);
  void restore_queue_head(int head);

  const Eigen::VectorXd& feature_mean() const { return mean_; }
  const Eigen::VectorXd& feature_scale() const { return scale_; }
  void set_standardization(const Eigen::VectorXd& mean, const Eigen::VectorXd& scale);
  void fit_standardization(const std::vector<TrainSample>& samples);

  Output forward(const Eigen::MatrixXd& frames) const;
  /// Unit key from the momentum encoder.
  Eigen::VectorXd key(const Eigen::MatrixXd& frames) const;

  bool operator==(const RankerModel& o) const;

 private:
  RankerConfig cfg_;
  ParamLayout layout_;
  Eigen::VectorXd theta_q_, theta_k_;
  Eigen::MatrixXd queue_;
  int head_ = 0;
  Eigen::VectorXd mean_, scale_;
};

double loss_binary(double p_b, int y);
/// Sum of the movement, scale and angle cross-entropies over the 17-way block output.
double loss_class(const Eigen::VectorXd& class_probs, const ClassLabels& labels);
/// -log(exp(q.k+/tau) / (exp(q.k+/tau) + sum_n exp(q.n/tau))); negatives are rows.
double loss_contrastive(const Eigen::VectorXd& q, const Eigen::VectorXd& k_plus, const Eigen::MatrixXd& negatives,
                        double tau);

/// Mean composite loss over a batch against the model's current queue.
/// `positive_slots[i]` is the queue row holding sample i's key; every other
/// row acts as a negative. Writes d(loss)/d(params) when grad is non-null.
LossBreakdown composite_loss(const RankerModel& model, const std::vector<const TrainSample*>& batch,
                             const std::vector<int>& positive_slots, Eigen::VectorXd* grad);

struct AdamState {
  Eigen::VectorXd m, v;
  long step = 0;
};

/// Enqueues the batch keys, takes one Adam step on the query parameters,
/// then applies the momentum rule to the key encoder. NumericalFailure on a
/// non-finite loss or gradient.
LossBreakdown train_step(RankerModel& model, const std::vector<const TrainSample*>& batch, AdamState& adam);

struct TrainOptions {
  int epochs = 60;
  int batch = 128;
  std::uint64_t seed = 11;
  std::function<void(int epoch, const LossBreakdown& mean)> on_epoch;
};

std::vector<LossBreakdown> train_ranker(RankerModel& model, const std::vector<TrainSample>& samples,
                                        const TrainOptions& opts = {});

void write_training_log(std::ostream& out, const std::vector<LossBreakdown>& epochs);

/// Descending score; ties by lower jerk, then lower id.
std::vector<std::size_t> rank_order(const std::vector<double>& scores, const std::vector<double>& jerk,
                                    const std::vector<std::string>& ids);

/// Mann-Whitney AUC with ties counted one half. labels: 1 positive, 0 negative.
double auc(const std::vector<double>& scores, const std::vector<int>& labels);

/// Versioned binary checkpoint: "PVRK", u32 version, u32 manifest length,
/// JSON shape manifest, then raw little-endian doubles.
void save_checkpoint(const RankerModel& model, const std::filesystem::path& file);
RankerModel load_checkpoint(const std::filesystem::path& file);

}  // namespace previs
