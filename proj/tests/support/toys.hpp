#pragma once

// Synthetic data shared by the unit and acceptance tests. Uses the standard
// library generators so the data does not depend on the code under test.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <random>
#include <vector>

#include "embeval/classifier.hpp"
#include "embeval/matrix.hpp"
#include "embeval/retrieval.hpp"

namespace toys {

inline std::vector<double> normals(std::size_t n, std::mt19937_64& gen, double sd = 1.0) {
  std::normal_distribution<double> dist(0.0, sd);
  std::vector<double> out(n);
  for (double& x : out) x = dist(gen);
  return out;
}

inline embeval::Matrix random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& gen,
                                     double sd = 1.0) {
  return embeval::Matrix(rows, cols, normals(rows * cols, gen, sd));
}

struct Labeled {
  embeval::Matrix x;
  std::vector<int> y;
};

/// Balanced two-class data, strictly separable on the first coordinate:
/// x0 = +-(0.5 + |noise|), other coordinates pure noise.
inline Labeled separable(std::size_t n, std::size_t d, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  Labeled out{random_matrix(n, d, gen), std::vector<int>(n)};
  std::normal_distribution<double> noise(0.0, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    const int label = static_cast<int>(i % 2);
    out.y[i] = label;
    const double mag = 0.5 + std::abs(noise(gen));
    out.x(i, 0) = label == 1 ? mag : -mag;
  }
  return out;
}

/// Same features as `separable` but labels are a random balanced permutation,
/// unrelated to x.
inline Labeled shuffled_labels(std::size_t n, std::size_t d, std::uint64_t seed) {
  Labeled out = separable(n, d, seed);
  std::mt19937_64 gen(seed ^ 0xA5A5A5A5ULL);
  std::shuffle(out.y.begin(), out.y.end(), gen);
  return out;
}

inline embeval::Split as_split(const Labeled& data, std::size_t classes = 2) {
  return {data.x, embeval::Targets::labels(data.y, classes)};
}

inline embeval::ClassifierConfig fast_config() {
  embeval::ClassifierConfig c = embeval::ClassifierConfig::default_profile();
  c.l2_grid = {1e-5, 1e-3, 1e-1};
  return c;
}

/// Sentence pairs whose gold score is an affine function of their cosine:
/// y = mid + half_width * cos(u, v) over the given range. u and v are unit
/// vectors with v mixing u and fresh noise in random proportion, so cosines
/// cover most of [-1, 1].
struct ScoredPairs {
  embeval::Matrix u;
  embeval::Matrix v;
  std::vector<double> y;
};

inline ScoredPairs cosine_affine_pairs(std::size_t n, std::size_t d, double lo, double hi,
                                       std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> mix(-1.0, 1.0);
  ScoredPairs out{embeval::Matrix(n, d), embeval::Matrix(n, d), std::vector<double>(n)};
  for (std::size_t i = 0; i < n; ++i) {
    auto a = normals(d, gen);
    auto noise = normals(d, gen);
    const double t = mix(gen);
    std::vector<double> b(d);
    for (std::size_t j = 0; j < d; ++j) b[j] = t * a[j] + (1 - std::abs(t)) * noise[j];
    const double na = embeval::l2_norm(a), nb = embeval::l2_norm(b);
    for (std::size_t j = 0; j < d; ++j) {
      out.u(i, j) = a[j] / na;
      out.v(i, j) = b[j] / nb;
    }
    const double c = std::clamp(embeval::dot(out.u.row(i), out.v.row(i)), -1.0, 1.0);
    out.y[i] = (lo + hi) / 2 + (hi - lo) / 2 * c;
  }
  return out;
}

/// Images are Gaussian feature vectors; each of an image's captions is the
/// image vector plus Gaussian noise of the given scale.
inline embeval::CaptionImageSet aligned_pairs(std::size_t n_images, std::size_t captions_per_image,
                                              std::size_t d, double noise, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  embeval::CaptionImageSet set;
  set.images = random_matrix(n_images, d, gen);
  set.captions = embeval::Matrix(n_images * captions_per_image, d);
  for (std::size_t i = 0; i < n_images; ++i) {
    for (std::size_t c = 0; c < captions_per_image; ++c) {
      const std::size_t row = i * captions_per_image + c;
      const auto eps = normals(d, gen, noise);
      for (std::size_t j = 0; j < d; ++j) set.captions(row, j) = set.images(i, j) + eps[j];
      set.image_of.push_back(i);
    }
  }
  return set;
}

}  // namespace toys
