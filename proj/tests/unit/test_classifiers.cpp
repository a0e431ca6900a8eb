#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "doctest.h"
#include "embeval/classifier.hpp"
#include "embeval/error.hpp"
#include "embeval/metrics.hpp"
#include "support/gradcheck.hpp"
#include "support/toys.hpp"

using namespace embeval;

namespace {

Model random_model(std::size_t d, std::size_t c, std::size_t nhid, std::mt19937_64& gen) {
  ClassifierConfig cfg;
  cfg.nhid = nhid;
  Rng rng(gen());
  Model m = init_model(d, c, cfg, rng);
  for (auto block : parameter_blocks(m)) {
    const auto vals = toys::normals(block.size(), gen, 0.5);
    std::copy(vals.begin(), vals.end(), block.begin());
  }
  return m;
}

Targets random_targets(std::size_t n, std::size_t c, bool soft, std::mt19937_64& gen) {
  if (!soft) {
    std::vector<int> y(n);
    for (auto& v : y) v = static_cast<int>(gen() % c);
    return Targets::labels(y, c);
  }
  Matrix p(n, c);
  std::uniform_real_distribution<double> u(0.05, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0;
    for (std::size_t j = 0; j < c; ++j) s += p(i, j) = u(gen);
    for (std::size_t j = 0; j < c; ++j) p(i, j) /= s;
  }
  return Targets::distributions(p);
}

double worst_block_error(Model model, const Matrix& x, const Targets& y, double l2) {
  const LossAndGrads lg = loss_and_grads(model, x, y, l2);
  auto analytic = parameter_blocks(lg.grads);
  auto params = parameter_blocks(model);
  double worst = 0;
  for (std::size_t b = 0; b < params.size(); ++b) {
    const auto numeric = gradcheck::numeric_gradient(
        params[b], [&] { return loss_and_grads(model, x, y, l2).loss; });
    worst = std::max(worst, gradcheck::relative_error(analytic[b], numeric));
  }
  return worst;
}

/// Dev split on which every model makes the same prediction for every row
/// and gets exactly half of them wrong.
Split constant_dev(std::size_t d) {
  return {Matrix(2, d, 0.0), Targets::labels({0, 1}, 2)};
}

}  // namespace

TEST_SUITE("classifiers") {

TEST_CASE("pair_features layout") {
  const std::vector<double> u{1, 2}, v{3, 1};
  CHECK(pair_features(u, v) == Vector{1, 2, 3, 1, 2, 1, 3, 2});
  CHECK(pair_features(u, u) == Vector{1, 2, 1, 2, 0, 0, 1, 4});
  CHECK(pair_features(Vector(300, 1.0), Vector(300, 2.0)).size() == 1200);
  CHECK_THROWS_AS(pair_features(u, std::vector<double>{1}), ShapeError);

  const Matrix mu{{1, 2}, {0, -1}}, mv{{3, 1}, {2, 2}};
  const Matrix pf = pair_features(mu, mv);
  CHECK(pf.cols() == 8);
  const Vector row1 = pair_features(mu.row(1), mv.row(1));
  CHECK(std::equal(row1.begin(), row1.end(), pf.row(1).begin()));

  // Swapping u and v changes only the first two blocks.
  const Vector a = pair_features(u, v), b = pair_features(v, u);
  for (std::size_t i = 4; i < 8; ++i) CHECK(a[i] == b[i]);
}

TEST_CASE("zero model loss is ln C") {
  std::mt19937_64 gen(3);
  for (std::size_t c : {2u, 3u, 5u}) {
    LogRegModel m{Matrix(c, 4), Vector(c, 0.0)};
    const auto x = toys::random_matrix(7, 4, gen);
    const auto y = random_targets(7, c, false, gen);
    CHECK(std::abs(loss_and_grads(m, x, y, 0.0).loss - std::log(static_cast<double>(c))) < 1e-12);
  }
}

TEST_CASE("l2 term contributes 2 lambda W to weight gradients only") {
  std::mt19937_64 gen(4);
  for (std::size_t nhid : {0u, 5u}) {
    const Model m = random_model(4, 3, nhid, gen);
    const auto x = toys::random_matrix(6, 4, gen);
    const auto y = random_targets(6, 3, false, gen);
    const double l2 = 0.37;
    const auto with = loss_and_grads(m, x, y, l2);
    const auto without = loss_and_grads(m, x, y, 0.0);
    const auto gw = parameter_blocks(with.grads);
    const auto g0 = parameter_blocks(without.grads);
    const auto params = parameter_blocks(m);
    const auto reg = regularized_blocks(m);
    double penalty = 0;
    for (std::size_t b = 0; b < params.size(); ++b) {
      for (std::size_t i = 0; i < params[b].size(); ++i) {
        const double expected = reg[b] ? 2 * l2 * params[b][i] : 0.0;
        CHECK(std::abs((gw[b][i] - g0[b][i]) - expected) < 1e-12);
        if (reg[b]) penalty += params[b][i] * params[b][i];
      }
    }
    CHECK(std::abs((with.loss - without.loss) - l2 * penalty) < 1e-12);
  }
}

TEST_CASE("analytic gradients match finite differences") {
  std::mt19937_64 gen(5);
  for (int rep = 0; rep < 10; ++rep) {
    const std::size_t d = 2 + gen() % 9, c = 2 + gen() % 4, n = 3 + gen() % 8;
    const double l2 = rep % 2 ? 0.01 : 0.0;
    for (bool soft : {false, true}) {
      const auto x = toys::random_matrix(n, d, gen);
      const auto y = random_targets(n, c, soft, gen);
      CHECK(worst_block_error(random_model(d, c, 0, gen), x, y, l2) < 1e-5);
      CHECK(worst_block_error(random_model(d, c, 1 + gen() % 6, gen), x, y, l2) < 1e-5);
    }
  }
}

TEST_CASE("loss rejects bad inputs") {
  LogRegModel m{Matrix(2, 3), Vector(2, 0.0)};
  CHECK_THROWS_AS(Targets::labels({0, 2}, 2), DataError);
  CHECK_THROWS_AS(loss_and_grads(m, Matrix(2, 4), Targets::labels({0, 1}, 2), 0.0), ShapeError);
  CHECK_THROWS_AS(loss_and_grads(m, Matrix(3, 3), Targets::labels({0, 1}, 2), 0.0), ShapeError);
}

TEST_CASE("config profiles and validation") {
  const auto d = ClassifierConfig::default_profile();
  CHECK(d.nhid == 0);
  CHECK(d.optim == OptimKind::adam);
  CHECK(d.batch_size == 64);
  CHECK(d.tenacity == 5);
  CHECK(d.epoch_size == 4);
  const auto p = ClassifierConfig::prototyping_profile();
  CHECK(p.optim == OptimKind::rmsprop);
  CHECK(p.batch_size == 128);
  CHECK(p.tenacity == 3);
  CHECK(p.epoch_size == 2);
  CHECK(default_l2_grid() == std::vector<double>{1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 1});
  ClassifierConfig bad = d;
  bad.l2_grid.clear();
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = d;
  bad.dropout = 1.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = d;
  bad.tenacity = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("logistic regression learns the separable toy") {
  const auto train_set = toys::as_split(toys::separable(200, 10, 21));
  const auto dev_set = toys::as_split(toys::separable(200, 10, 22));
  const auto out = train(ClassifierConfig::default_profile(), 1e-5, train_set, dev_set, 1);
  CHECK(out.report.dev_score >= 0.95);
  CHECK(accuracy(predict_labels(out.model, dev_set.x), dev_set.y.labels()) == out.report.dev_score);
  CHECK(out.report.epochs_run <= 200);
}

TEST_CASE("mlp with dropout learns the separable toy") {
  auto cfg = ClassifierConfig::default_profile();
  cfg.nhid = 16;
  cfg.dropout = 0.3;
  const auto train_set = toys::as_split(toys::separable(200, 10, 23));
  const auto dev_set = toys::as_split(toys::separable(100, 10, 24));
  const auto out = train(cfg, 1e-5, train_set, dev_set, 2);
  CHECK(std::holds_alternative<MlpModel>(out.model));
  CHECK(out.report.dev_score >= 0.95);
}

TEST_CASE("tenacity 1 stops at epoch 2 when dev error never improves") {
  auto cfg = ClassifierConfig::default_profile();
  cfg.tenacity = 1;
  const auto out = train(cfg, 0.0, toys::as_split(toys::separable(100, 4, 25)), constant_dev(4), 3);
  CHECK(out.report.epochs_run == 2);
  CHECK(out.report.stopped_by == StopReason::tenacity);
  CHECK(out.report.dev_error_history.size() == 2);
}

TEST_CASE("max_epochs caps training") {
  auto cfg = ClassifierConfig::default_profile();
  cfg.max_epochs = 3;
  cfg.tenacity = 50;
  const auto out = train(cfg, 0.0, toys::as_split(toys::separable(60, 4, 26)),
                         toys::as_split(toys::separable(60, 4, 27)), 3);
  CHECK(out.report.epochs_run == 3);
  CHECK(out.report.stopped_by == StopReason::max_epochs);
}

TEST_CASE("returned model is the best dev snapshot") {
  const auto train_set = toys::as_split(toys::shuffled_labels(120, 6, 28));
  const auto dev_set = toys::as_split(toys::shuffled_labels(60, 6, 29));
  for (std::size_t nhid : {0u, 8u}) {
    auto cfg = ClassifierConfig::default_profile();
    cfg.nhid = nhid;
    cfg.tenacity = 4;
    const auto out = train(cfg, 1e-4, train_set, dev_set, 4);
    for (double e : out.report.dev_error_history) CHECK(out.report.dev_error <= e);
    CHECK(validation_error(out.model, dev_set) == out.report.dev_error);
  }
}

TEST_CASE("training is deterministic for a fixed seed") {
  auto cfg = ClassifierConfig::default_profile();
  cfg.nhid = 6;
  cfg.dropout = 0.2;
  const auto train_set = toys::as_split(toys::separable(80, 5, 30));
  const auto dev_set = toys::as_split(toys::separable(40, 5, 31));
  const auto a = train(cfg, 1e-3, train_set, dev_set, 77);
  const auto b = train(cfg, 1e-3, train_set, dev_set, 77);
  const auto pa = parameter_blocks(a.model), pb = parameter_blocks(b.model);
  for (std::size_t i = 0; i < pa.size(); ++i) CHECK(std::equal(pa[i].begin(), pa[i].end(), pb[i].begin()));
  const auto c = train(cfg, 1e-3, train_set, dev_set, 78);
  const auto pc = parameter_blocks(c.model);
  CHECK_FALSE(std::equal(pa[0].begin(), pa[0].end(), pc[0].begin()));
}

TEST_CASE("divergence is reported with the offending lambda") {
  auto cfg = ClassifierConfig::default_profile();
  cfg.lr = 1e300;
  Matrix x(8, 3, 1e300);
  for (std::size_t i = 0; i < 8; i += 2) x(i, 0) = -1e300;
  const Split s{x, Targets::labels({0, 1, 0, 1, 0, 1, 0, 1}, 2)};
  try {
    train(cfg, 0.25, s, s, 1);
    FAIL("expected TrainingError");
  } catch (const TrainingError& e) {
    CHECK(std::string(e.what()).find("l2=0.25") != std::string::npos);
  }
}

TEST_CASE("empty splits are rejected") {
  const Split empty{Matrix(0, 3), Targets::labels({}, 2)};
  const auto s = toys::as_split(toys::separable(10, 3, 1));
  CHECK_THROWS_AS(train(ClassifierConfig{}, 0.0, empty, s, 1), TrainingError);
  CHECK_THROWS_AS(train(ClassifierConfig{}, 0.0, toys::as_split(toys::separable(10, 3, 1)), empty, 1),
                  TrainingError);
}

TEST_CASE("grid search") {
  const auto train_set = toys::as_split(toys::separable(200, 10, 32));
  const auto dev_set = toys::as_split(toys::separable(100, 10, 33));

  SUBCASE("single element grid") {
    auto cfg = ClassifierConfig::default_profile();
    cfg.l2_grid = {0.01};
    CHECK(grid_search_l2(cfg, train_set, dev_set, 1).best_l2 == 0.01);
  }
  SUBCASE("huge penalty loses") {
    auto cfg = ClassifierConfig::default_profile();
    cfg.l2_grid = {1e3, 0.0};
    const auto r = grid_search_l2(cfg, train_set, dev_set, 1);
    CHECK(r.best_l2 == 0.0);
    CHECK(r.grid == std::vector<double>{0.0, 1e3});
    CHECK(r.scores[0] > r.scores[1]);
  }
  SUBCASE("ties go to the smallest lambda") {
    auto cfg = ClassifierConfig::default_profile();
    cfg.l2_grid = {0.1, 1e-3, 1.0, 1e-2};
    const auto r = grid_search_l2(cfg, train_set, constant_dev(10), 1);
    CHECK(r.best_l2 == 1e-3);
    for (double s : r.scores) CHECK(s == 0.5);
  }
  SUBCASE("worker count does not change the result") {
    auto cfg = ClassifierConfig::default_profile();
    const auto one = grid_search_l2(cfg, train_set, dev_set, 9);
    cfg.workers = 4;
    const auto four = grid_search_l2(cfg, train_set, dev_set, 9);
    CHECK(one.scores == four.scores);
    CHECK(one.best_l2 == four.best_l2);
  }
}

TEST_CASE("larger lambda never grows the converged weight norm") {
  const auto data = toys::shuffled_labels(40, 4, 34);
  const Targets y = Targets::labels(data.y, 2);
  double previous = std::numeric_limits<double>::infinity();
  for (double l2 : {1e-3, 1e-2, 1e-1, 1.0}) {
    Model m = LogRegModel{Matrix(2, 4), Vector(2, 0.0)};
    const std::vector<std::size_t> sizes{8, 2};
    Optimizer opt(OptimKind::adam, 0.05, sizes);
    for (int step = 0; step < 4000; ++step) {
      const auto lg = loss_and_grads(m, data.x, y, l2);
      auto params = parameter_blocks(m);
      auto grads = parameter_blocks(lg.grads);
      for (std::size_t b = 0; b < params.size(); ++b) opt.step(b, params[b], grads[b]);
    }
    const double norm = l2_norm(std::get<LogRegModel>(m).w.values());
    CHECK(norm <= previous * (1 + 1e-3));
    previous = norm;
  }
}

TEST_CASE("predict_labels takes the argmax") {
  LogRegModel m{Matrix{{1, 0}, {0, 1}}, Vector{0, 0}};
  CHECK(predict_labels(m, Matrix{{2, 1}, {0, 3}}) == std::vector<int>{0, 1});
}

}  // TEST_SUITE
