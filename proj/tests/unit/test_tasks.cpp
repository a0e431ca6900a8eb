#include <cmath>
#include <random>
#include <string>

#include "doctest.h"
#include "embeval/error.hpp"
#include "embeval/tasks.hpp"
#include "support/stub_encoders.hpp"

using namespace embeval;

namespace {

const std::filesystem::path kData = std::filesystem::path(EMBEVAL_FIXTURES_DIR) / "data";
const std::filesystem::path kVectors = std::filesystem::path(EMBEVAL_FIXTURES_DIR) / "vectors.vec";

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

Record single(std::vector<double> values, int label) {
  Record r;
  for (double v : values) r.first.push_back(num(v));
  r.label = label;
  return r;
}

/// Labels = sign of the first coordinate, kept at least 0.5 from zero; three
/// noise coordinates.
std::vector<Record> sign_records(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<Record> out;
  for (std::size_t i = 0; i < n; ++i) {
    double x0 = g(gen);
    x0 = x0 < 0 ? x0 - 0.5 : x0 + 0.5;
    out.push_back(single({x0, g(gen), g(gen), g(gen)}, x0 > 0 ? 1 : 0));
  }
  return out;
}

TaskData with_spec(const std::string& name) {
  TaskData d;
  d.spec = find_task(name);
  return d;
}

TaskRunOptions quick_options() {
  TaskRunOptions o;
  o.classifier.l2_grid = {1e-5, 1e-2};
  o.kfold = 5;
  return o;
}

const ClassificationResult& classification(const EvalResult& r) { return std::get<ClassificationResult>(r.payload); }

}  // namespace

TEST_SUITE("tasks") {

TEST_CASE("task catalog") {
  CHECK(find_task("TREC").n_classes == 6);
  CHECK(find_task("SST-5").n_classes == 5);
  CHECK(find_task("SICK-R").score_range.bins() == 5);
  CHECK(find_task("STS-B").score_range.bins() == 6);
  CHECK(find_task("MR").protocol == SplitKind::nested_kfold);
  CHECK(find_task("TREC").protocol == SplitKind::cv_train_fixed_test);
  CHECK(find_task("SST-2").protocol == SplitKind::fixed_split);
  CHECK(find_task("MRPC").kind == TaskKind::paraphrase);
  CHECK(find_task("COCO").kind == TaskKind::caption_retrieval);
  CHECK(task_names().size() == 18);
  try {
    find_task("FOO");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("FOO") != std::string::npos);
    CHECK(msg.find("SICK-R") != std::string::npos);
  }
}

TEST_CASE("sign-of-first-coordinate task is learned under every protocol") {
  stubs::NumericEncoder enc(4);
  SUBCASE("nested cv") {
    auto d = with_spec("MR");
    d.splits["train"] = sign_records(100, 1);
    const auto r = classification(run_task(d, enc, quick_options()));
    CHECK(r.test_accuracy >= 0.95);
    CHECK(r.fold_accuracies.size() == 5);
    CHECK(enc.prepared == 100);
  }
  SUBCASE("fixed split") {
    auto d = with_spec("SST-2");
    d.splits["train"] = sign_records(100, 2);
    d.splits["dev"] = sign_records(40, 3);
    d.splits["test"] = sign_records(40, 4);
    const auto r = classification(run_task(d, enc, quick_options()));
    CHECK(r.test_accuracy >= 0.95);
    CHECK(r.n_test == 40);
  }
  SUBCASE("cv on train, fixed test") {
    auto d = with_spec("TREC");
    d.spec.n_classes = 2;
    d.splits["train"] = sign_records(100, 5);
    d.splits["test"] = sign_records(50, 6);
    CHECK(classification(run_task(d, enc, quick_options())).test_accuracy >= 0.95);
  }
}

TEST_CASE("identical pairs with a constant label") {
  stubs::NumericEncoder enc(4);
  auto d = with_spec("SICK-E");
  for (const char* split : {"train", "dev", "test"}) {
    auto recs = sign_records(30, std::string(split).size());
    for (auto& r : recs) {
      r.second = r.first;
      r.label = 2;
    }
    d.splits[split] = recs;
  }
  CHECK(classification(run_task(d, enc, quick_options())).test_accuracy == 1.0);
}

TEST_CASE("wrong runner for a task kind") {
  stubs::NumericEncoder enc(2);
  auto d = with_spec("SICK-R");
  CHECK_THROWS_AS(run_classification(d, enc, quick_options()), ConfigError);
}

TEST_CASE("relatedness with constant gold reports the correlation error") {
  stubs::NumericEncoder enc(2);
  auto d = with_spec("SICK-R");
  for (const char* split : {"train", "dev", "test"}) {
    std::vector<Record> recs;
    for (int i = 0; i < 20; ++i) {
      Record r = single({static_cast<double>(i), 1.0}, -1);
      r.second = r.first;
      r.score = 3.0;
      recs.push_back(r);
    }
    d.splits[split] = recs;
  }
  try {
    run_task(d, enc, quick_options());
    FAIL("expected MetricError");
  } catch (const MetricError& e) {
    CHECK(std::string(e.what()).find("constant") != std::string::npos);
  }
}

TEST_CASE("sts from embeddings") {
  SUBCASE("monotone construction gives spearman 1") {
    StsSubtaskEmbeddings s{"mono", Matrix(30, 2), Matrix(30, 2), {}};
    for (std::size_t i = 0; i < 30; ++i) {
      const double angle = 0.05 * static_cast<double>(i);
      s.left(i, 0) = 1.0;
      s.right(i, 0) = std::cos(angle);
      s.right(i, 1) = std::sin(angle);
      s.gold.push_back(5.0 - 0.1 * static_cast<double>(i));
    }
    const auto agg = sts_from_embeddings(std::span<const StsSubtaskEmbeddings>(&s, 1));
    CHECK(std::abs(agg.mean.spearman - 1.0) < 1e-9);
    CHECK(agg.subtasks.at(0).count == 30);

    // Scaling all embeddings by a positive constant changes nothing.
    StsSubtaskEmbeddings scaled = s;
    for (double& v : scaled.left.values()) v *= 7.5;
    for (double& v : scaled.right.values()) v *= 0.01;
    const auto agg2 = sts_from_embeddings(std::span<const StsSubtaskEmbeddings>(&scaled, 1));
    CHECK(agg2.mean.pearson == doctest::Approx(agg.mean.pearson).epsilon(1e-12));
    CHECK(agg2.mean.spearman == agg.mean.spearman);
  }
}

TEST_CASE("sts identical sentences and zero embeddings") {
  stubs::NumericEncoder enc(2);
  auto d = with_spec("STS12");
  Subtask sub{"part", {}};
  for (int i = 1; i <= 5; ++i) {
    Record r = single({static_cast<double>(i), 1.0}, -1);
    r.second = single({1.0, static_cast<double>(i)}, -1).first;
    r.score = i;
    sub.records.push_back(r);
  }
  Record same = single({2.0, 3.0}, -1);
  same.second = same.first;
  same.score = 5;
  sub.records.push_back(same);
  d.subtasks.push_back(sub);
  const auto agg = run_sts_unsupervised(d, enc);
  CHECK(agg.subtasks.size() == 1);

  Record zero;
  zero.first = {"nothing", "known"};
  zero.second = {"1", "1"};
  zero.score = 1;
  d.subtasks[0].records.push_back(zero);
  try {
    run_sts_unsupervised(d, enc);
    FAIL("expected MetricError");
  } catch (const MetricError& e) {
    CHECK(std::string(e.what()).find("nothing known") != std::string::npos);
  }
}

TEST_CASE("fixture tasks run end to end with the bow encoder") {
  TaskRunOptions opts = quick_options();
  opts.retrieval.joint_dim = 32;
  for (const char* name : {"MR", "SICK-E", "MRPC", "SICK-R", "STS14", "COCO"}) {
    CAPTURE(name);
    BowEncoder enc(kVectors);
    const TaskData data = load_task(name, kData);
    const EvalResult r = run_task(data, enc, opts);
    CHECK(r.task == name);
    std::visit(
        [&](const auto& p) {
          using T = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<T, ClassificationResult>) {
            CHECK(p.test_accuracy >= 0.0);
            CHECK(p.test_accuracy <= 1.0);
            CHECK(p.f1.has_value() == (std::string(name) == "MRPC"));
          } else if constexpr (std::is_same_v<T, RelatednessResult>) {
            CHECK(std::abs(p.pearson) <= 1.0);
          } else if constexpr (std::is_same_v<T, StsAggregate>) {
            CHECK(p.subtasks.size() == 2);
          } else {
            CHECK(p.splits.size() == 5);
            CHECK(p.mean.n_images == 4);
          }
        },
        r.payload);
  }
}

}  // TEST_SUITE
