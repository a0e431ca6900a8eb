#include "embeval/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "embeval/error.hpp"
#include "embeval/metrics.hpp"
#include "embeval/optim.hpp"
#include "embeval/random.hpp"

namespace embeval {

void RetrievalConfig::validate() const {
  if (joint_dim == 0) throw ConfigError("retrieval joint_dim must be > 0");
  if (!(margin > 0.0)) throw ConfigError("retrieval margin must be > 0");
  if (batch_size < 2) throw ConfigError("retrieval batch_size must be >= 2");
  if (!(lr > 0.0)) throw ConfigError("retrieval lr must be > 0");
  if (tenacity <= 0 || epoch_size <= 0 || max_epochs <= 0) {
    throw ConfigError("retrieval tenacity, epoch_size and max_epochs must be > 0");
  }
  if (n_splits == 0) throw ConfigError("retrieval n_splits must be > 0");
}

double hinge(double margin, double positive, double negative) {
  return std::max(0.0, margin - positive + negative);
}

namespace {

struct Projected {
  Matrix unit;             // row-normalized projections
  std::vector<double> norm;
};

Projected project(const Matrix& inputs, const Matrix& map) {
  Projected p{affine(inputs, map, {}), {}};
  p.norm.resize(p.unit.rows());
  for (std::size_t i = 0; i < p.unit.rows(); ++i) {
    auto r = p.unit.row(i);
    const double n = l2_norm(r);
    if (n == 0.0) throw MetricError("cosine similarity undefined: zero projection in joint space");
    p.norm[i] = n;
    for (double& v : r) v /= n;
  }
  return p;
}

Matrix projected_units(const Matrix& inputs, const Matrix& map) { return project(inputs, map).unit; }

}  // namespace

RankingLoss ranking_loss(const RetrievalModel& model, const Matrix& captions, const Matrix& images,
                         std::span<const std::size_t> groups) {
  const std::size_t n = captions.rows();
  if (n < 2) throw ShapeError("ranking_loss needs a batch of at least 2 pairs for negatives");
  if (images.rows() != n) throw ShapeError("ranking_loss: caption and image batches differ in size");
  if (!groups.empty() && groups.size() != n) throw ShapeError("ranking_loss: group ids length mismatch");
  if (captions.cols() != model.u.cols() || images.cols() != model.v.cols()) {
    throw ShapeError("ranking_loss: input dims do not match projections");
  }
  if (model.u.rows() != model.v.rows()) throw ShapeError("ranking_loss: joint dims differ");
  if (!(model.margin > 0.0)) throw ConfigError("ranking_loss: margin must be > 0");

  const Projected a = project(captions, model.u);
  const Projected b = project(images, model.v);
  // sim(c, m): caption c against image m.
  Matrix sim(n, n);
  for (std::size_t c = 0; c < n; ++c) {
    for (std::size_t m = 0; m < n; ++m) sim(c, m) = dot(a.unit.row(c), b.unit.row(m));
  }
  auto negative = [&](std::size_t i, std::size_t k) {
    return k != i && (groups.empty() || groups[k] != groups[i]);
  };

  // dL/dsim
  Matrix g(n, n);
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double pos = sim(i, i);
    for (std::size_t k = 0; k < n; ++k) {
      if (!negative(i, k)) continue;
      // Image i anchors, caption k is the negative.
      const double h1 = model.margin - pos + sim(k, i);
      if (h1 > 0.0) {
        loss += h1;
        g(i, i) -= 1.0;
        g(k, i) += 1.0;
      }
      // Caption i anchors, image k is the negative.
      const double h2 = model.margin - pos + sim(i, k);
      if (h2 > 0.0) {
        loss += h2;
        g(i, i) -= 1.0;
        g(i, k) += 1.0;
      }
    }
  }

  const std::size_t joint = model.u.rows();
  Matrix da(n, joint), db(n, joint);
  for (std::size_t c = 0; c < n; ++c) {
    for (std::size_t m = 0; m < n; ++m) {
      const double w = g(c, m);
      if (w == 0.0) continue;
      const double s = sim(c, m);
      auto ac = a.unit.row(c);
      auto bm = b.unit.row(m);
      auto dac = da.row(c);
      auto dbm = db.row(m);
      for (std::size_t j = 0; j < joint; ++j) {
        dac[j] += w * (bm[j] - s * ac[j]) / a.norm[c];
        dbm[j] += w * (ac[j] - s * bm[j]) / b.norm[m];
      }
    }
  }

  RankingLoss out{loss, Matrix(joint, captions.cols()), Matrix(joint, images.cols())};
  for (std::size_t i = 0; i < n; ++i) {
    auto dai = da.row(i);
    auto dbi = db.row(i);
    auto xi = captions.row(i);
    auto yi = images.row(i);
    for (std::size_t j = 0; j < joint; ++j) {
      if (dai[j] != 0.0) {
        auto gu = out.grad_u.row(j);
        for (std::size_t t = 0; t < xi.size(); ++t) gu[t] += dai[j] * xi[t];
      }
      if (dbi[j] != 0.0) {
        auto gv = out.grad_v.row(j);
        for (std::size_t t = 0; t < yi.size(); ++t) gv[t] += dbi[j] * yi[t];
      }
    }
  }
  return out;
}

RetrievalModel init_retrieval_model(std::size_t caption_dim, std::size_t image_dim,
                                    const RetrievalConfig& config) {
  config.validate();
  Rng rng(derive_seed(config.seed, 0x52455452ULL));
  RetrievalModel m{Matrix(config.joint_dim, caption_dim), Matrix(config.joint_dim, image_dim),
                   config.margin};
  const double bu = 1.0 / std::sqrt(static_cast<double>(std::max<std::size_t>(caption_dim, 1)));
  const double bv = 1.0 / std::sqrt(static_cast<double>(std::max<std::size_t>(image_dim, 1)));
  for (double& x : m.u.values()) x = rng.uniform(-bu, bu);
  for (double& x : m.v.values()) x = rng.uniform(-bv, bv);
  return m;
}

namespace {

DirectionScores summarize(std::span<const std::size_t> ranks) {
  return {recall_from_ranks(ranks, 1), recall_from_ranks(ranks, 5), recall_from_ranks(ranks, 10),
          median_rank(ranks)};
}

void check_set(const CaptionImageSet& set) {
  if (set.captions.rows() == 0 || set.images.rows() == 0) {
    throw DataError("retrieval set needs at least one caption and one image");
  }
  if (set.image_of.size() != set.captions.rows()) {
    throw ShapeError("retrieval set: caption/image mapping length mismatch");
  }
  for (std::size_t m : set.image_of) {
    if (m >= set.images.rows()) throw ShapeError("retrieval set: caption refers to missing image");
  }
}

}  // namespace

RetrievalScores evaluate_retrieval(const RetrievalModel& model, const CaptionImageSet& set) {
  check_set(set);
  const Matrix a = projected_units(set.captions, model.u);
  const Matrix b = projected_units(set.images, model.v);
  const std::size_t nc = a.rows();
  const std::size_t ni = b.rows();

  std::vector<std::vector<std::size_t>> captions_of(ni);
  for (std::size_t c = 0; c < nc; ++c) captions_of[set.image_of[c]].push_back(c);

  std::vector<std::size_t> image_ranks(nc);
  std::vector<double> scores(ni);
  for (std::size_t c = 0; c < nc; ++c) {
    for (std::size_t m = 0; m < ni; ++m) scores[m] = dot(a.row(c), b.row(m));
    image_ranks[c] = rank_of(scores, set.image_of[c]);
  }

  std::vector<std::size_t> caption_ranks;
  caption_ranks.reserve(ni);
  scores.assign(nc, 0.0);
  for (std::size_t m = 0; m < ni; ++m) {
    if (captions_of[m].empty()) continue;
    for (std::size_t c = 0; c < nc; ++c) scores[c] = dot(b.row(m), a.row(c));
    caption_ranks.push_back(best_rank_of(scores, captions_of[m]));
  }

  RetrievalScores out;
  out.n_images = ni;
  out.n_captions = nc;
  out.image_retrieval = summarize(image_ranks);
  out.caption_retrieval = summarize(caption_ranks);
  return out;
}

std::vector<std::vector<std::size_t>> partition_images(std::size_t n_images, std::size_t n_splits,
                                                       std::uint64_t seed) {
  if (n_splits == 0) throw ConfigError("n_splits must be > 0");
  if (n_images < n_splits) {
    throw DataError("cannot split " + std::to_string(n_images) + " images into " +
                    std::to_string(n_splits) + " sets");
  }
  std::vector<std::size_t> order(n_images);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(order));
  std::vector<std::vector<std::size_t>> parts(n_splits);
  const std::size_t base = n_images / n_splits;
  const std::size_t extra = n_images % n_splits;
  std::size_t pos = 0;
  for (std::size_t s = 0; s < n_splits; ++s) {
    const std::size_t len = base + (s < extra ? 1 : 0);
    parts[s].assign(order.begin() + static_cast<std::ptrdiff_t>(pos),
                    order.begin() + static_cast<std::ptrdiff_t>(pos + len));
    std::sort(parts[s].begin(), parts[s].end());
    pos += len;
  }
  return parts;
}

CaptionImageSet restrict_to_images(const CaptionImageSet& set, std::span<const std::size_t> images) {
  check_set(set);
  std::vector<std::size_t> new_index(set.images.rows(), std::numeric_limits<std::size_t>::max());
  for (std::size_t i = 0; i < images.size(); ++i) new_index.at(images[i]) = i;
  std::vector<std::size_t> keep;
  CaptionImageSet out;
  for (std::size_t c = 0; c < set.image_of.size(); ++c) {
    const std::size_t mapped = new_index[set.image_of[c]];
    if (mapped == std::numeric_limits<std::size_t>::max()) continue;
    keep.push_back(c);
    out.image_of.push_back(mapped);
  }
  out.captions = gather_rows(set.captions, keep);
  out.images = gather_rows(set.images, images);
  return out;
}

RetrievalFit train_retrieval(const RetrievalConfig& config, const CaptionImageSet& train_set,
                             const CaptionImageSet& dev_set) {
  config.validate();
  check_set(train_set);
  check_set(dev_set);
  if (train_set.captions.rows() < 2) throw TrainingError("retrieval training needs >= 2 captions");

  RetrievalModel model =
      init_retrieval_model(train_set.captions.cols(), train_set.images.cols(), config);
  const std::array<std::size_t, 2> sizes{model.u.size(), model.v.size()};
  Optimizer optimizer(OptimKind::adam, config.lr, sizes);
  Rng rng(derive_seed(config.seed, 0x53485546ULL));

  const std::size_t n = train_set.captions.rows();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});

  RetrievalFit fit{model, {}};
  double best = -1.0;
  int stale = 0;
  std::vector<std::size_t> batch, groups, image_rows;
  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    for (int pass = 0; pass < config.epoch_size; ++pass) {
      rng.shuffle(std::span<std::size_t>(order));
      for (std::size_t start = 0; start + 1 < n; start += config.batch_size) {
        const std::size_t stop = std::min(n, start + config.batch_size);
        if (stop - start < 2) break;
        batch.assign(order.begin() + static_cast<std::ptrdiff_t>(start),
                     order.begin() + static_cast<std::ptrdiff_t>(stop));
        image_rows.clear();
        for (std::size_t c : batch) image_rows.push_back(train_set.image_of[c]);
        const Matrix xb = gather_rows(train_set.captions, batch);
        const Matrix yb = gather_rows(train_set.images, image_rows);
        const RankingLoss rl = ranking_loss(model, xb, yb, image_rows);
        if (!std::isfinite(rl.loss)) throw TrainingError("retrieval training diverged (non-finite loss)");
        optimizer.step(0, model.u.values(), rl.grad_u.values());
        optimizer.step(1, model.v.values(), rl.grad_v.values());
      }
    }
    fit.report.epochs_run = epoch;
    const RetrievalScores dev = evaluate_retrieval(model, dev_set);
    const double score = 0.5 * (dev.caption_retrieval.r1 + dev.image_retrieval.r1);
    if (score > best) {
      best = score;
      fit.model = model;
      stale = 0;
    } else if (++stale >= config.tenacity) {
      fit.report.stopped_by = StopReason::tenacity;
      break;
    }
  }
  fit.report.best_dev_score = best;
  return fit;
}

}  // namespace embeval
