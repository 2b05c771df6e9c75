#include "previs/ranker.hpp"

#include "previs/error.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <ostream>
#include <random>

namespace previs {

namespace {

constexpr double kProbClamp = 1e-7;
constexpr std::uint32_t kCheckpointVersion = 1;
constexpr int kBlockStart[3] = {0, kMovementClasses, kMovementClasses + kScaleClasses};
constexpr int kBlockSize[3] = {kMovementClasses, kScaleClasses, kAngleClasses};

using CMap = Eigen::Map<const Eigen::MatrixXd>;
using CVec = Eigen::Map<const Eigen::VectorXd>;
using Map = Eigen::Map<Eigen::MatrixXd>;
using Vec = Eigen::Map<Eigen::VectorXd>;

struct Weights {
  CMap W1;
  CVec b1, wb;
  double bb;
  CMap Wc;
  CVec bc;
  CMap Wp;
  CVec bp;

  Weights(const ParamLayout& L, const Eigen::VectorXd& th)
      : W1(th.data() + L.W1, L.d, L.D),
        b1(th.data() + L.b1, L.d),
        wb(th.data() + L.wb, L.d),
        bb(th[L.bb]),
        Wc(th.data() + L.Wc, kClassOutputs, L.d),
        bc(th.data() + L.bc, kClassOutputs),
        Wp(th.data() + L.Wp, L.dz, L.d),
        bp(th.data() + L.bp, L.dz)
  {
  }
};

double clamp_prob(double p) { return std::clamp(p, kProbClamp, 1.0 - kProbClamp); }

double sigmoid(double s) { return s >= 0 ? 1.0 / (1.0 + std::exp(-s)) : std::exp(s) / (1.0 + std::exp(s)); }

void block_softmax(Eigen::MatrixXd& m, Eigen::Index r)
{
  for (int b = 0; b < 3; ++b) {
    auto seg = m.row(r).segment(kBlockStart[b], kBlockSize[b]);
    const double mx = seg.maxCoeff();
    seg = (seg.array() - mx).exp();
    seg /= seg.sum();
  }
}

struct BatchPass {
  int n = 0, k = 0;
  Eigen::MatrixXd X, H, E, C, U, Z;
  Eigen::VectorXd p, unorm;
};

Eigen::MatrixXd stack_views(const std::vector<const Eigen::MatrixXd*>& views, const Eigen::VectorXd& mean,
                            const Eigen::VectorXd& scale, int& k)
{
  k = static_cast<int>(views.front()->rows());
  Eigen::MatrixXd X(static_cast<Eigen::Index>(views.size()) * k, views.front()->cols());
  for (std::size_t i = 0; i < views.size(); ++i) {
    if (views[i]->rows() != k || views[i]->cols() != X.cols())
      throw Error(ErrorCode::LengthMismatch, "ranker: inconsistent view shapes in batch");
    X.middleRows(static_cast<Eigen::Index>(i) * k, k) = *views[i];
  }
  X = (X.rowwise() - mean.transpose()).array().rowwise() / scale.transpose().array();
  return X;
}

BatchPass run(const ParamLayout& L, const Eigen::VectorXd& th, const std::vector<const Eigen::MatrixXd*>& views,
              const Eigen::VectorXd& mean, const Eigen::VectorXd& scale, bool heads)
{
  const Weights w(L, th);
  BatchPass b;
  b.n = static_cast<int>(views.size());
  b.X = stack_views(views, mean, scale, b.k);
  if (b.X.cols() != L.D) throw Error(ErrorCode::LengthMismatch, "ranker: feature width does not match model");
  b.H = ((b.X * w.W1.transpose()).rowwise() + w.b1.transpose()).array().tanh();
  b.E.resize(b.n, L.d);
  for (int i = 0; i < b.n; ++i) b.E.row(i) = b.H.middleRows(static_cast<Eigen::Index>(i) * b.k, b.k).colwise().mean();
  if (heads) {
    b.p.resize(b.n);
    const Eigen::VectorXd s = (b.E * w.wb).array() + w.bb;
    for (int i = 0; i < b.n; ++i) b.p[i] = sigmoid(s[i]);
    b.C = (b.E * w.Wc.transpose()).rowwise() + w.bc.transpose();
    for (int i = 0; i < b.n; ++i) block_softmax(b.C, i);
  }
  b.U = (b.E * w.Wp.transpose()).rowwise() + w.bp.transpose();
  b.unorm = b.U.rowwise().norm();
  b.Z = b.U;
  for (int i = 0; i < b.n; ++i) {
    if (!(b.unorm[i] > 0.0)) throw Error(ErrorCode::NumericalFailure, "ranker: zero projection vector");
    b.Z.row(i) /= b.unorm[i];
  }
  return b;
}

void normal_fill(Eigen::Ref<Eigen::VectorXd> v, double stddev, std::mt19937_64& rng)
{
  std::normal_distribution<double> n(0.0, stddev);
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = n(rng);
}

}  // namespace

ParamLayout ParamLayout::make(int D, int d, int dz)
{
  ParamLayout L;
  L.D = D;
  L.d = d;
  L.dz = dz;
  Eigen::Index o = 0;
  L.W1 = o;
  o += static_cast<Eigen::Index>(d) * D;
  L.b1 = o;
  o += d;
  L.wb = o;
  o += d;
  L.bb = o;
  o += 1;
  L.Wc = o;
  o += static_cast<Eigen::Index>(kClassOutputs) * d;
  L.bc = o;
  o += kClassOutputs;
  L.Wp = o;
  o += static_cast<Eigen::Index>(dz) * d;
  L.bp = o;
  o += dz;
  L.size = o;
  return L;
}

RankerModel::RankerModel(const RankerConfig& cfg) : cfg_(cfg)
{
  if (cfg.input_dim < 1 || cfg.hidden < 1 || cfg.embed < 1 || cfg.queue_size < 1)
    throw Error(ErrorCode::Domain, "ranker: dimensions must be positive");
  if (!(cfg.tau > 0.0) || cfg.momentum < 0.0 || cfg.momentum > 1.0)
    throw Error(ErrorCode::Domain, "ranker: tau must be positive and momentum in [0, 1]");
  layout_ = ParamLayout::make(cfg.input_dim, cfg.hidden, cfg.embed);
  const auto& L = layout_;
  std::mt19937_64 rng(cfg.seed);
  theta_q_ = Eigen::VectorXd::Zero(L.size);
  normal_fill(theta_q_.segment(L.W1, static_cast<Eigen::Index>(L.d) * L.D), 1.0 / std::sqrt(L.D), rng);
  if (!cfg.zero_heads) {
    normal_fill(theta_q_.segment(L.wb, L.d), 0.01, rng);
    normal_fill(theta_q_.segment(L.Wc, static_cast<Eigen::Index>(kClassOutputs) * L.d), 0.01, rng);
  }
  normal_fill(theta_q_.segment(L.Wp, static_cast<Eigen::Index>(L.dz) * L.d), 1.0 / std::sqrt(L.d), rng);
  theta_k_ = theta_q_;

  queue_.resize(cfg.queue_size, cfg.embed);
  std::normal_distribution<double> n(0.0, 1.0);
  for (Eigen::Index r = 0; r < queue_.rows(); ++r) {
    for (Eigen::Index c = 0; c < queue_.cols(); ++c) queue_(r, c) = n(rng);
    queue_.row(r).normalize();
  }
  mean_ = Eigen::VectorXd::Zero(cfg.input_dim);
  scale_ = Eigen::VectorXd::Ones(cfg.input_dim);
}

void RankerModel::restore_queue_head(int head)
{
  if (head < 0 || head >= cfg_.queue_size) throw Error(ErrorCode::Schema, "ranker: queue head out of range");
  head_ = head;
}

int RankerModel::enqueue(const Eigen::VectorXd& key)
{
  const int slot = head_;
  const double n = key.norm();
  if (!(n > 0.0)) throw Error(ErrorCode::NumericalFailure, "ranker: zero key vector");
  queue_.row(slot) = key.transpose() / n;
  head_ = (head_ + 1) % cfg_.queue_size;
  return slot;
}

void RankerModel::set_standardization(const Eigen::VectorXd& mean, const Eigen::VectorXd& scale)
{
  if (mean.size() != cfg_.input_dim || scale.size() != cfg_.input_dim)
    throw Error(ErrorCode::LengthMismatch, "ranker: standardization width does not match model");
  if ((scale.array() <= 0.0).any()) throw Error(ErrorCode::Domain, "ranker: standardization scale must be > 0");
  mean_ = mean;
  scale_ = scale;
}

void RankerModel::fit_standardization(const std::vector<TrainSample>& samples)
{
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(cfg_.input_dim), sq = sum;
  double n = 0;
  for (const auto& s : samples)
    for (const Eigen::MatrixXd* v : {&s.view_a, &s.view_b}) {
      if (v->size() == 0) continue;
      sum += v->colwise().sum().transpose();
      sq += v->array().square().colwise().sum().matrix().transpose();
      n += static_cast<double>(v->rows());
    }
  if (n == 0) return;
  const Eigen::VectorXd mean = sum / n;
  Eigen::VectorXd var = (sq / n).array() - mean.array().square();
  const Eigen::VectorXd scale = var.array().max(0.0).sqrt().max(1e-3);
  set_standardization(mean, scale);
}

RankerModel::Output RankerModel::forward(const Eigen::MatrixXd& frames) const
{
  const BatchPass b = run(layout_, theta_q_, {&frames}, mean_, scale_, true);
  Output o;
  o.p_b = b.p[0];
  o.class_probs = b.C.row(0).transpose();
  o.z = b.Z.row(0).transpose();
  o.embedding = b.E.row(0).transpose();
  return o;
}

Eigen::VectorXd RankerModel::key(const Eigen::MatrixXd& frames) const
{
  return run(layout_, theta_k_, {&frames}, mean_, scale_, false).Z.row(0).transpose();
}

bool RankerModel::operator==(const RankerModel& o) const
{
  return cfg_ == o.cfg_ && theta_q_ == o.theta_q_ && theta_k_ == o.theta_k_ && queue_ == o.queue_ &&
         head_ == o.head_ && mean_ == o.mean_ && scale_ == o.scale_;
}

double loss_binary(double p_b, int y)
{
  const double p = clamp_prob(p_b);
  return -(y ? std::log(p) : std::log(1.0 - p));
}

double loss_class(const Eigen::VectorXd& probs, const ClassLabels& labels)
{
  if (probs.size() != kClassOutputs) throw Error(ErrorCode::LengthMismatch, "loss_class: expected 17 outputs");
  const int lab[3] = {labels.movement, labels.scale, labels.angle};
  double l = 0.0;
  for (int b = 0; b < 3; ++b) {
    if (lab[b] < 0 || lab[b] >= kBlockSize[b]) throw Error(ErrorCode::Domain, "loss_class: label out of range");
    l -= std::log(clamp_prob(probs[kBlockStart[b] + lab[b]]));
  }
  return l;
}

double loss_contrastive(const Eigen::VectorXd& q, const Eigen::VectorXd& k_plus, const Eigen::MatrixXd& negatives,
                        double tau)
{
  const double pos = q.dot(k_plus) / tau;
  Eigen::VectorXd logits(negatives.rows() + 1);
  logits[0] = pos;
  if (negatives.rows() > 0) logits.tail(negatives.rows()) = negatives * q / tau;
  const double mx = logits.maxCoeff();
  return mx + std::log((logits.array() - mx).exp().sum()) - pos;
}

LossBreakdown composite_loss(const RankerModel& model, const std::vector<const TrainSample*>& batch,
                             const std::vector<int>& positive_slots, Eigen::VectorXd* grad)
{
  if (batch.empty()) return {};
  if (positive_slots.size() != batch.size())
    throw Error(ErrorCode::LengthMismatch, "composite_loss: one positive slot per sample");
  const auto& L = model.layout();
  const auto& cfg = model.config();
  std::vector<const Eigen::MatrixXd*> views;
  for (const auto* s : batch) views.push_back(&s->view_a);
  const BatchPass b = run(L, model.params(), views, model.feature_mean(), model.feature_scale(), true);
  const int n = b.n;
  const Eigen::MatrixXd& Q = model.queue();

  LossBreakdown out;
  Eigen::MatrixXd S = (b.Z * Q.transpose()) / cfg.tau;  // n x K
  Eigen::MatrixXd P(n, Q.rows());
  for (int i = 0; i < n; ++i) {
    const TrainSample& s = *batch[i];
    out.binary += loss_binary(b.p[i], s.y);
    out.cls += loss_class(b.C.row(i).transpose(), s.labels);
    const double mx = S.row(i).maxCoeff();
    const Eigen::ArrayXd ex = (S.row(i).array() - mx).exp().transpose();
    const double z = ex.sum();
    out.contrastive += mx + std::log(z) - S(i, positive_slots[i]);
    P.row(i) = (ex / z).transpose();
  }
  out.binary /= n;
  out.cls /= n;
  out.contrastive /= n;
  if (!grad) return out;

  const Weights w(L, model.params());
  const double inv_n = 1.0 / n;
  grad->setZero(L.size);

  Eigen::VectorXd gs(n);
  for (int i = 0; i < n; ++i) gs[i] = (b.p[i] - batch[i]->y) * inv_n;

  Eigen::MatrixXd GC = b.C;
  for (int i = 0; i < n; ++i) {
    const int lab[3] = {batch[i]->labels.movement, batch[i]->labels.scale, batch[i]->labels.angle};
    for (int blk = 0; blk < 3; ++blk) GC(i, kBlockStart[blk] + lab[blk]) -= 1.0;
  }
  GC *= inv_n;

  Eigen::MatrixXd GZ = P * Q;
  for (int i = 0; i < n; ++i) GZ.row(i) -= Q.row(positive_slots[i]);
  GZ *= inv_n / cfg.tau;
  Eigen::MatrixXd GU(n, L.dz);
  for (int i = 0; i < n; ++i) {
    const Eigen::RowVectorXd z = b.Z.row(i);
    GU.row(i) = (GZ.row(i) - GZ.row(i).dot(z) * z) / b.unorm[i];
  }

  Vec(grad->data() + L.wb, L.d) = b.E.transpose() * gs;
  (*grad)[L.bb] = gs.sum();
  Map(grad->data() + L.Wc, kClassOutputs, L.d) = GC.transpose() * b.E;
  Vec(grad->data() + L.bc, kClassOutputs) = GC.colwise().sum().transpose();
  Map(grad->data() + L.Wp, L.dz, L.d) = GU.transpose() * b.E;
  Vec(grad->data() + L.bp, L.dz) = GU.colwise().sum().transpose();

  const Eigen::MatrixXd GE = gs * w.wb.transpose() + GC * w.Wc + GU * w.Wp;  // n x d
  Eigen::MatrixXd GA(b.H.rows(), L.d);
  for (int i = 0; i < n; ++i)
    for (int f = 0; f < b.k; ++f) {
      const Eigen::Index r = static_cast<Eigen::Index>(i) * b.k + f;
      GA.row(r) = (GE.row(i) / b.k).array() * (1.0 - b.H.row(r).array().square());
    }
  Map(grad->data() + L.W1, L.d, L.D) = GA.transpose() * b.X;
  Vec(grad->data() + L.b1, L.d) = GA.colwise().sum().transpose();
  return out;
}

LossBreakdown train_step(RankerModel& model, const std::vector<const TrainSample*>& batch, AdamState& adam)
{
  const auto& cfg = model.config();
  if (static_cast<int>(batch.size()) > cfg.queue_size)
    throw Error(ErrorCode::Domain, "train_step: batch larger than the queue");
  // Keys go in first so each positive sits inside its own denominator.
  std::vector<int> slots;
  slots.reserve(batch.size());
  for (const auto* s : batch) slots.push_back(model.enqueue(model.key(s->view_b)));

  Eigen::VectorXd g;
  const LossBreakdown loss = composite_loss(model, batch, slots, &g);
  if (!std::isfinite(loss.total()) || !g.allFinite())
    throw Error(ErrorCode::NumericalFailure,
                "train_step: non-finite loss (binary " + std::to_string(loss.binary) + ", class " +
                    std::to_string(loss.cls) + ", contrastive " + std::to_string(loss.contrastive) + ")");

  auto& th = model.params();
  if (adam.m.size() != th.size()) {
    adam.m = Eigen::VectorXd::Zero(th.size());
    adam.v = Eigen::VectorXd::Zero(th.size());
    adam.step = 0;
  }
  ++adam.step;
  adam.m = cfg.beta1 * adam.m + (1.0 - cfg.beta1) * g;
  adam.v = cfg.beta2 * adam.v + (1.0 - cfg.beta2) * g.cwiseProduct(g);
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(adam.step));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(adam.step));
  th.array() -= cfg.lr * (adam.m.array() / c1) / ((adam.v.array() / c2).sqrt() + cfg.adam_eps);

  model.key_params() = cfg.momentum * model.key_params() + (1.0 - cfg.momentum) * th;
  return loss;
}

std::vector<LossBreakdown> train_ranker(RankerModel& model, const std::vector<TrainSample>& samples,
                                        const TrainOptions& opts)
{
  if (samples.empty()) throw Error(ErrorCode::Domain, "train_ranker: no samples");
  if (opts.batch < 1) throw Error(ErrorCode::Domain, "train_ranker: batch must be >= 1");
  model.fit_standardization(samples);
  AdamState adam;
  std::vector<LossBreakdown> log;
  std::vector<std::size_t> order(samples.size());
  for (int epoch = 0; epoch < opts.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(opts.seed + static_cast<std::uint64_t>(epoch));
    std::shuffle(order.begin(), order.end(), rng);
    LossBreakdown sum;
    double weight = 0;
    for (std::size_t start = 0; start < order.size(); start += opts.batch) {
      std::vector<const TrainSample*> batch;
      for (std::size_t i = start; i < std::min(order.size(), start + opts.batch); ++i)
        batch.push_back(&samples[order[i]]);
      const LossBreakdown l = train_step(model, batch, adam);
      const double n = static_cast<double>(batch.size());
      sum.binary += l.binary * n;
      sum.cls += l.cls * n;
      sum.contrastive += l.contrastive * n;
      weight += n;
    }
    sum.binary /= weight;
    sum.cls /= weight;
    sum.contrastive /= weight;
    log.push_back(sum);
    if (opts.on_epoch) opts.on_epoch(epoch, sum);
  }
  return log;
}

void write_training_log(std::ostream& out, const std::vector<LossBreakdown>& epochs)
{
  out << "epoch,loss_binary,loss_class,loss_contrastive,loss_total\n";
  char buf[160];
  for (std::size_t e = 0; e < epochs.size(); ++e) {
    std::snprintf(buf, sizeof buf, "%zu,%.6f,%.6f,%.6f,%.6f\n", e + 1, epochs[e].binary, epochs[e].cls,
                  epochs[e].contrastive, epochs[e].total());
    out << buf;
  }
}

std::vector<std::size_t> rank_order(const std::vector<double>& scores, const std::vector<double>& jerk,
                                    const std::vector<std::string>& ids)
{
  if (scores.size() != jerk.size() || scores.size() != ids.size())
    throw Error(ErrorCode::LengthMismatch, "rank_order: mismatched inputs");
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    if (jerk[a] != jerk[b]) return jerk[a] < jerk[b];
    return ids[a] < ids[b];
  });
  return idx;
}

double auc(const std::vector<double>& scores, const std::vector<int>& labels)
{
  if (scores.size() != labels.size()) throw Error(ErrorCode::LengthMismatch, "auc: mismatched inputs");
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Average ranks over ties.
  double rank_sum = 0.0;
  long npos = 0, nneg = 0;
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t t = i; t < j; ++t)
      if (labels[idx[t]]) rank_sum += avg;
    i = j;
  }
  for (int l : labels) (l ? npos : nneg)++;
  if (npos == 0 || nneg == 0) throw Error(ErrorCode::Domain, "auc: need both classes");
  return (rank_sum - 0.5 * npos * (npos + 1)) / (static_cast<double>(npos) * nneg);
}

namespace {

void write_doubles(std::ostream& out, const double* p, std::size_t n)
{
  out.write(reinterpret_cast<const char*>(p), static_cast<std::streamsize>(n * sizeof(double)));
}

void read_doubles(std::istream& in, double* p, std::size_t n)
{
  in.read(reinterpret_cast<char*>(p), static_cast<std::streamsize>(n * sizeof(double)));
  if (!in) throw Error(ErrorCode::Io, "checkpoint: truncated payload");
}

void write_u32(std::ostream& out, std::uint32_t v)
{
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32(std::istream& in)
{
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw Error(ErrorCode::Io, "checkpoint: truncated header");
  return b[0] | (b[1] << 8) | (b[2] << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace

void save_checkpoint(const RankerModel& model, const std::filesystem::path& file)
{
  const auto& c = model.config();
  const nlohmann::json manifest = {
      {"input_dim", c.input_dim}, {"hidden", c.hidden},     {"embed", c.embed},
      {"queue_size", c.queue_size}, {"tau", c.tau},       {"momentum", c.momentum},
      {"lr", c.lr},               {"seed", c.seed},         {"queue_head", model.queue_head()},
      {"param_count", model.params().size()},
      {"tensors", {"theta_q", "theta_k", "queue", "feature_mean", "feature_scale"}},
  };
  const std::string m = manifest.dump();
  const auto tmp = file.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw Error(ErrorCode::Io, "cannot write checkpoint " + file.string());
    out.write("PVRK", 4);
    write_u32(out, kCheckpointVersion);
    write_u32(out, static_cast<std::uint32_t>(m.size()));
    out.write(m.data(), static_cast<std::streamsize>(m.size()));
    write_doubles(out, model.params().data(), model.params().size());
    write_doubles(out, model.key_params().data(), model.key_params().size());
    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> q = model.queue();
    write_doubles(out, q.data(), q.size());
    write_doubles(out, model.feature_mean().data(), model.feature_mean().size());
    write_doubles(out, model.feature_scale().data(), model.feature_scale().size());
    if (!out) throw Error(ErrorCode::Io, "short write to checkpoint " + file.string());
  }
  std::filesystem::rename(tmp, file);
}

RankerModel load_checkpoint(const std::filesystem::path& file)
{
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error(ErrorCode::NotFound, "checkpoint not found: " + file.string());
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "PVRK", 4) != 0) throw Error(ErrorCode::Schema, "checkpoint: bad magic");
  const std::uint32_t version = read_u32(in);
  if (version != kCheckpointVersion)
    throw Error(ErrorCode::VersionMismatch, "checkpoint: version " + std::to_string(version) + " unsupported");
  const std::uint32_t len = read_u32(in);
  std::string m(len, '\0');
  in.read(m.data(), len);
  if (!in) throw Error(ErrorCode::Io, "checkpoint: truncated manifest");
  RankerConfig c;
  int head = 0;
  try {
    const auto j = nlohmann::json::parse(m);
    c.input_dim = j.at("input_dim");
    c.hidden = j.at("hidden");
    c.embed = j.at("embed");
    c.queue_size = j.at("queue_size");
    c.tau = j.at("tau");
    c.momentum = j.at("momentum");
    c.lr = j.value("lr", c.lr);
    c.seed = j.value("seed", c.seed);
    head = j.at("queue_head");
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Schema, std::string("checkpoint manifest: ") + e.what());
  }
  RankerModel model(c);
  read_doubles(in, model.params().data(), model.params().size());
  read_doubles(in, model.key_params().data(), model.key_params().size());
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> q(c.queue_size, c.embed);
  read_doubles(in, q.data(), q.size());
  model.queue() = q;
  Eigen::VectorXd mean(c.input_dim), scale(c.input_dim);
  read_doubles(in, mean.data(), mean.size());
  read_doubles(in, scale.data(), scale.size());
  model.set_standardization(mean, scale);
  model.restore_queue_head(head);
  return model;
}

}  // namespace previs
