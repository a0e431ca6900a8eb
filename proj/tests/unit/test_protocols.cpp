#include <algorithm>
#include <map>
#include <set>

#include "doctest.h"
#include "embeval/error.hpp"
#include "embeval/protocols.hpp"
#include "support/toys.hpp"

using namespace embeval;

namespace {

std::vector<int> class_labels(std::vector<std::size_t> counts) {
  std::vector<int> y;
  for (std::size_t c = 0; c < counts.size(); ++c) y.insert(y.end(), counts[c], static_cast<int>(c));
  // Interleave a little so classes are not contiguous.
  std::rotate(y.begin(), y.begin() + static_cast<long>(y.size() / 3), y.end());
  return y;
}

}  // namespace

TEST_SUITE("protocols") {

TEST_CASE("balanced two-class folds have five of each class") {
  const auto y = class_labels({50, 50});
  const auto folds = make_folds(y, 10, 1111);
  for (std::size_t f = 0; f < 10; ++f) {
    const auto test = folds.test_indices(f);
    CHECK(test.size() == 10);
    std::size_t ones = 0;
    for (auto i : test) ones += y[i] == 1;
    CHECK(ones == 5);
  }
}

TEST_CASE("folds partition the indices and are deterministic") {
  for (std::size_t n : {10u, 37u, 101u}) {
    const auto y = class_labels({n / 2, n - n / 2});
    const auto folds = make_folds(y, 10, 7);
    std::multiset<std::size_t> seen;
    for (std::size_t f = 0; f < 10; ++f) {
      const auto test = folds.test_indices(f);
      const auto train = folds.train_indices(f);
      CHECK(test.size() + train.size() == n);
      seen.insert(test.begin(), test.end());
      for (auto i : test) CHECK(std::find(train.begin(), train.end(), i) == train.end());
    }
    CHECK(seen.size() == n);
    CHECK(std::set<std::size_t>(seen.begin(), seen.end()).size() == n);
    const auto again = make_folds(y, 10, 7);
    CHECK(std::equal(folds.fold_of().begin(), folds.fold_of().end(), again.fold_of().begin()));
  }
}

TEST_CASE("stratification holds within one sample per class and fold") {
  const std::vector<std::size_t> counts{23, 7, 41};
  const auto y = class_labels(counts);
  const std::size_t n = y.size(), k = 5;
  const auto folds = make_folds(y, k, 3);
  std::vector<std::size_t> sizes(k, 0);
  for (std::size_t f = 0; f < k; ++f) {
    std::map<int, std::size_t> hist;
    for (auto i : folds.test_indices(f)) ++hist[y[i]];
    sizes[f] = folds.test_indices(f).size();
    for (std::size_t c = 0; c < counts.size(); ++c) {
      const double expected = static_cast<double>(counts[c]) / static_cast<double>(k);
      CHECK(std::abs(static_cast<double>(hist[static_cast<int>(c)]) - expected) < 1.0);
    }
  }
  CHECK(*std::max_element(sizes.begin(), sizes.end()) - *std::min_element(sizes.begin(), sizes.end()) <= 1);
  (void)n;
}

TEST_CASE("too few samples for k folds") {
  const std::vector<int> y{0, 1, 0};
  CHECK_THROWS_AS(make_folds(y, 10, 1), DataError);
}

TEST_CASE("stratified holdout is a 90/10 partition") {
  const auto y = class_labels({60, 40});
  const auto h = stratified_holdout(y, 10, 5);
  CHECK(h.dev.size() == 10);
  CHECK(h.train.size() == 90);
  std::set<std::size_t> all(h.train.begin(), h.train.end());
  all.insert(h.dev.begin(), h.dev.end());
  CHECK(all.size() == 100);
}

TEST_CASE("nested cv on the separable toy") {
  const auto data = toys::separable(200, 10, 41);
  const auto r = eval_nested_cv(data.x, data.y, 2, toys::fast_config(), 10);
  CHECK(r.fold_accuracies.size() == 10);
  CHECK(r.fold_l2.size() == 10);
  CHECK(r.mean_accuracy >= 0.95);
}

TEST_CASE("nested cv on shuffled labels is at chance") {
  const auto data = toys::shuffled_labels(200, 10, 42);
  const auto r = eval_nested_cv(data.x, data.y, 2, toys::fast_config(), 10);
  CHECK(std::abs(r.mean_accuracy - 0.5) <= 0.1);
}

TEST_CASE("lambda for an outer fold ignores that fold's labels") {
  const auto data = toys::shuffled_labels(120, 6, 43);
  const auto outer = make_folds(data.y, 5, 99);
  const auto base = eval_nested_cv(data.x, data.y, 2, toys::fast_config(), 5, &outer);
  const std::size_t f = 2;
  auto perturbed = data.y;
  for (auto i : outer.test_indices(f)) perturbed[i] = 1 - perturbed[i];
  const auto changed = eval_nested_cv(data.x, perturbed, 2, toys::fast_config(), 5, &outer);
  CHECK(changed.fold_l2[f] == base.fold_l2[f]);
}

TEST_CASE("select_l2_by_cv with a single lambda") {
  const auto data = toys::separable(60, 4, 44);
  auto cfg = toys::fast_config();
  cfg.l2_grid = {0.01};
  const auto sel = select_l2_by_cv(cfg, toys::as_split(data), 5, 1);
  CHECK(sel.best_l2 == 0.01);
  CHECK(sel.mean_scores.size() == 1);
}

TEST_CASE("cv on train with a fixed test set") {
  const auto data = toys::separable(120, 6, 45);
  const auto r = eval_cv_train_fixed_test(data.x, data.y, data.x, data.y, 2, toys::fast_config(), 10);
  CHECK(r.test_accuracy >= 0.95);
  CHECK(r.test_predictions.size() == 120);
  const auto again = eval_cv_train_fixed_test(data.x, data.y, data.x, data.y, 2, toys::fast_config(), 10);
  CHECK(again.test_predictions == r.test_predictions);
  CHECK(again.best_l2 == r.best_l2);
}

TEST_CASE("fixed split with dev equal to train") {
  const auto s = toys::as_split(toys::separable(150, 6, 46));
  const auto r = eval_fixed_split(s, s, s, toys::fast_config());
  CHECK(r.dev_accuracy >= 0.95);
  CHECK(r.test_accuracy >= 0.95);
  const auto again = eval_fixed_split(s, s, s, toys::fast_config());
  CHECK(again.test_predictions == r.test_predictions);
}

TEST_CASE("constant features predict the majority class") {
  std::vector<int> y(30, 0);
  for (std::size_t i = 0; i < 10; ++i) y[i * 3] = 1;  // 20 zeros, 10 ones
  const Split s{Matrix(30, 4, 0.7), Targets::labels(y, 2)};
  const auto r = eval_fixed_split(s, s, s, toys::fast_config());
  CHECK(r.test_accuracy == doctest::Approx(20.0 / 30.0));
}

}  // TEST_SUITE
