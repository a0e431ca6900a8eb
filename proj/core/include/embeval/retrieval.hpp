#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "embeval/classifier.hpp"
#include "embeval/matrix.hpp"

namespace embeval {

/// Linear maps into a shared space: u projects captions, v projects images.
struct RetrievalModel {
  Matrix u;  // joint x caption_dim
  Matrix v;  // joint x image_dim
  double margin = 0.2;
};

struct RetrievalConfig {
  std::size_t joint_dim = 512;
  double margin = 0.2;
  std::size_t batch_size = 128;
  double lr = 1e-3;
  int tenacity = 5;
  int epoch_size = 4;
  int max_epochs = 200;
  std::size_t n_splits = 5;
  std::uint64_t seed = 1111;

  void validate() const;
};

/// Captions paired with images; several captions may share an image.
struct CaptionImageSet {
  Matrix captions;                  // n_captions x caption_dim
  std::vector<std::size_t> image_of;  // caption -> row of `images`
  Matrix images;                    // n_images x image_dim
};

/// max(0, margin - positive + negative)
double hinge(double margin, double positive, double negative);

struct RankingLoss {
  double loss = 0.0;
  Matrix grad_u;
  Matrix grad_v;
};

/// Bidirectional hinge loss over in-batch negatives: row i of `captions`
/// pairs with row i of `images`. Rows sharing a group id are not used as
/// negatives for each other; an empty `groups` means all rows are distinct.
/// Cosine similarity in the joint space; subgradient 0 at inactive hinges.
RankingLoss ranking_loss(const RetrievalModel& model, const Matrix& captions, const Matrix& images,
                         std::span<const std::size_t> groups = {});

RetrievalModel init_retrieval_model(std::size_t caption_dim, std::size_t image_dim,
                                    const RetrievalConfig& config);

struct DirectionScores {
  double r1 = 0.0;
  double r5 = 0.0;
  double r10 = 0.0;
  double medr = 0.0;
};

struct RetrievalScores {
  std::size_t n_images = 0;
  std::size_t n_captions = 0;
  DirectionScores caption_retrieval;  // image query, rank captions
  DirectionScores image_retrieval;    // caption query, rank images
};

/// Both-direction Recall@{1,5,10} and median rank over one set. For caption
/// retrieval the best-ranked of an image's captions counts.
RetrievalScores evaluate_retrieval(const RetrievalModel& model, const CaptionImageSet& set);

/// Seeded partition of image indices into `n_splits` near-equal groups.
std::vector<std::vector<std::size_t>> partition_images(std::size_t n_images, std::size_t n_splits,
                                                       std::uint64_t seed);

/// Keeps only the given images and their captions (image order as given).
CaptionImageSet restrict_to_images(const CaptionImageSet& set, std::span<const std::size_t> images);

struct RetrievalTrainReport {
  int epochs_run = 0;
  double best_dev_score = 0.0;  // mean of the two R@1 values
  StopReason stopped_by = StopReason::max_epochs;
};

struct RetrievalFit {
  RetrievalModel model;
  RetrievalTrainReport report;
};

/// Adam on ranking_loss in shuffled caption minibatches; early stopping on
/// dev mean R@1 with tenacity semantics.
RetrievalFit train_retrieval(const RetrievalConfig& config, const CaptionImageSet& train_set,
                             const CaptionImageSet& dev_set);

}  // namespace embeval
