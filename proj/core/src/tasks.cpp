#include "embeval/tasks.hpp"

#include <unordered_map>

#include "embeval/error.hpp"
#include "embeval/protocols.hpp"
#include "embeval/relatedness.hpp"

namespace embeval {

namespace {

std::vector<Tokens> firsts(const std::vector<Record>& records) {
  std::vector<Tokens> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(r.first);
  return out;
}

std::vector<Tokens> seconds(const std::vector<Record>& records) {
  std::vector<Tokens> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(r.second);
  return out;
}

std::vector<int> labels_of(const std::vector<Record>& records) {
  std::vector<int> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(r.label);
  return out;
}

std::vector<double> scores_of(const std::vector<Record>& records) {
  std::vector<double> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(r.score);
  return out;
}

Matrix encode_single(Encoder& encoder, const std::vector<Record>& records, std::size_t batch) {
  return encode_dataset(encoder, firsts(records), batch);
}

Matrix encode_pairs(Encoder& encoder, const std::vector<Record>& records, std::size_t batch) {
  const Matrix u = encode_dataset(encoder, firsts(records), batch);
  const Matrix v = encode_dataset(encoder, seconds(records), batch);
  return pair_features(u, v);
}

Split labeled(Matrix x, const std::vector<Record>& records, std::size_t n_classes) {
  return Split{std::move(x), Targets::labels(labels_of(records), n_classes)};
}

void require_kind(const TaskData& data, std::initializer_list<TaskKind> kinds, const char* runner) {
  for (TaskKind k : kinds) {
    if (data.spec.kind == k) return;
  }
  throw ConfigError(std::string(runner) + " cannot run task " + data.spec.name + " of kind " +
                    std::string(to_string(data.spec.kind)));
}

}  // namespace

EvalResult run_classification(const TaskData& data, Encoder& encoder, const TaskRunOptions& options) {
  require_kind(data, {TaskKind::classification}, "run_classification");
  const TaskSpec& spec = data.spec;
  const std::size_t bs = options.encoder_batch_size;
  ClassificationResult res;

  switch (spec.protocol) {
    case SplitKind::nested_kfold: {
      const auto& all = data.split("train");
      const Matrix x = encode_single(encoder, all, bs);
      const auto y = labels_of(all);
      const NestedCvResult cv = eval_nested_cv(x, y, spec.n_classes, options.classifier, options.kfold);
      res.test_accuracy = cv.mean_accuracy;
      res.dev_accuracy = cv.mean_dev_accuracy;
      res.fold_accuracies = cv.fold_accuracies;
      res.fold_l2 = cv.fold_l2;
      res.n_train = all.size();
      break;
    }
    case SplitKind::cv_train_fixed_test: {
      const auto& train_r = data.split("train");
      const auto& test_r = data.split("test");
      const Matrix train_x = encode_single(encoder, train_r, bs);
      const Matrix test_x = encode_single(encoder, test_r, bs);
      const CvTestResult r = eval_cv_train_fixed_test(train_x, labels_of(train_r), test_x,
                                                      labels_of(test_r), spec.n_classes,
                                                      options.classifier, options.kfold);
      res.dev_accuracy = r.cv_accuracy;
      res.test_accuracy = r.test_accuracy;
      res.best_l2 = r.best_l2;
      res.n_train = train_r.size();
      res.n_test = test_r.size();
      break;
    }
    case SplitKind::fixed_split: {
      const auto& train_r = data.split("train");
      const auto& dev_r = data.split("dev");
      const auto& test_r = data.split("test");
      const Split train_s = labeled(encode_single(encoder, train_r, bs), train_r, spec.n_classes);
      const Split dev_s = labeled(encode_single(encoder, dev_r, bs), dev_r, spec.n_classes);
      const Split test_s = labeled(encode_single(encoder, test_r, bs), test_r, spec.n_classes);
      const FixedSplitResult r = eval_fixed_split(train_s, dev_s, test_s, options.classifier);
      res.dev_accuracy = r.dev_accuracy;
      res.test_accuracy = r.test_accuracy;
      res.best_l2 = r.best_l2;
      res.n_train = train_r.size();
      res.n_dev = dev_r.size();
      res.n_test = test_r.size();
      break;
    }
  }
  return {spec.name, spec.kind, res};
}

EvalResult run_pair_classification(const TaskData& data, Encoder& encoder,
                                   const TaskRunOptions& options) {
  require_kind(data, {TaskKind::pair_classification, TaskKind::paraphrase}, "run_pair_classification");
  const TaskSpec& spec = data.spec;
  const std::size_t bs = options.encoder_batch_size;
  ClassificationResult res;

  if (spec.protocol == SplitKind::cv_train_fixed_test) {
    const auto& train_r = data.split("train");
    const auto& test_r = data.split("test");
    const Matrix train_x = encode_pairs(encoder, train_r, bs);
    const Matrix test_x = encode_pairs(encoder, test_r, bs);
    const auto test_y = labels_of(test_r);
    const CvTestResult r = eval_cv_train_fixed_test(train_x, labels_of(train_r), test_x, test_y,
                                                    spec.n_classes, options.classifier, options.kfold);
    res.dev_accuracy = r.cv_accuracy;
    res.test_accuracy = r.test_accuracy;
    res.best_l2 = r.best_l2;
    res.n_train = train_r.size();
    res.n_test = test_r.size();
    if (spec.kind == TaskKind::paraphrase) res.f1 = f1_binary(r.test_predictions, test_y, 1);
  } else {
    const auto& train_r = data.split("train");
    const auto& dev_r = data.split("dev");
    const auto& test_r = data.split("test");
    const Split train_s = labeled(encode_pairs(encoder, train_r, bs), train_r, spec.n_classes);
    const Split dev_s = labeled(encode_pairs(encoder, dev_r, bs), dev_r, spec.n_classes);
    const Split test_s = labeled(encode_pairs(encoder, test_r, bs), test_r, spec.n_classes);
    const FixedSplitResult r = eval_fixed_split(train_s, dev_s, test_s, options.classifier);
    res.dev_accuracy = r.dev_accuracy;
    res.test_accuracy = r.test_accuracy;
    res.best_l2 = r.best_l2;
    res.n_train = train_r.size();
    res.n_dev = dev_r.size();
    res.n_test = test_r.size();
    if (spec.kind == TaskKind::paraphrase) {
      res.f1 = f1_binary(r.test_predictions, test_s.y.labels(), 1);
    }
  }
  return {spec.name, spec.kind, res};
}

EvalResult run_relatedness(const TaskData& data, Encoder& encoder, const TaskRunOptions& options) {
  require_kind(data, {TaskKind::relatedness}, "run_relatedness");
  const std::size_t bs = options.encoder_batch_size;
  const auto& train_r = data.split("train");
  const auto& dev_r = data.split("dev");
  const auto& test_r = data.split("test");
  const Matrix train_x = encode_pairs(encoder, train_r, bs);
  const Matrix dev_x = encode_pairs(encoder, dev_r, bs);
  const Matrix test_x = encode_pairs(encoder, test_r, bs);

  const RelatednessHead head(data.spec.score_range);
  const RelatednessFit fit =
      head.fit(options.classifier, train_x, scores_of(train_r), dev_x, scores_of(dev_r));
  const auto predicted = head.predict(fit.model, test_x);
  const auto gold = scores_of(test_r);

  RelatednessResult res;
  const CorrelationPair corr = correlations(predicted, gold);
  res.pearson = corr.pearson;
  res.spearman = corr.spearman;
  double se = 0.0;
  for (std::size_t i = 0; i < gold.size(); ++i) se += (predicted[i] - gold[i]) * (predicted[i] - gold[i]);
  res.mse = se / static_cast<double>(gold.size());
  res.dev_pearson = fit.dev_pearson;
  res.best_l2 = fit.best_l2;
  res.n_train = train_r.size();
  res.n_dev = dev_r.size();
  res.n_test = test_r.size();
  return {data.spec.name, data.spec.kind, res};
}

StsAggregate sts_from_embeddings(std::span<const StsSubtaskEmbeddings> subtasks) {
  std::vector<SubtaskCorrelation> per;
  for (const auto& sub : subtasks) {
    if (!sub.left.same_shape(sub.right) || sub.left.rows() != sub.gold.size()) {
      throw ShapeError("STS subtask " + sub.name + ": embeddings and gold differ in shape");
    }
    std::vector<double> sims(sub.gold.size());
    for (std::size_t i = 0; i < sims.size(); ++i) {
      try {
        sims[i] = cosine(sub.left.row(i), sub.right.row(i));
      } catch (const MetricError&) {
        throw MetricError("STS subtask " + sub.name + " pair " + std::to_string(i + 1) +
                          ": cosine undefined, an embedding is the zero vector");
      }
    }
    per.push_back({sub.name, sims.size(), correlations(sims, sub.gold)});
  }
  return sts_aggregate(std::move(per));
}

StsAggregate run_sts_unsupervised(const TaskData& data, Encoder& encoder, std::size_t encoder_batch_size) {
  require_kind(data, {TaskKind::sts_unsupervised}, "run_sts_unsupervised");
  std::vector<StsSubtaskEmbeddings> subs;
  for (const auto& sub : data.subtasks) {
    StsSubtaskEmbeddings e;
    e.name = sub.name;
    e.left = encode_dataset(encoder, firsts(sub.records), encoder_batch_size);
    e.right = encode_dataset(encoder, seconds(sub.records), encoder_batch_size);
    e.gold = scores_of(sub.records);
    for (std::size_t i = 0; i < sub.records.size(); ++i) {
      const bool left_zero = l2_norm(e.left.row(i)) == 0.0;
      if (left_zero || l2_norm(e.right.row(i)) == 0.0) {
        const Tokens& s = left_zero ? sub.records[i].first : sub.records[i].second;
        throw MetricError("STS " + data.spec.name + "/" + sub.name + " line " + std::to_string(i + 1) +
                          ": cosine undefined, zero embedding for sentence \"" + join_tokens(s) + "\"");
      }
    }
    subs.push_back(std::move(e));
  }
  return sts_from_embeddings(subs);
}

namespace {

CaptionImageSet build_retrieval_set(const TaskData& data, const std::vector<Record>& records,
                                    Encoder& encoder, std::size_t batch) {
  CaptionImageSet set;
  set.captions = encode_single(encoder, records, batch);
  std::unordered_map<std::string, std::size_t> image_index;
  std::vector<std::string> order;
  for (const auto& r : records) {
    auto [it, inserted] = image_index.emplace(r.image_id, order.size());
    if (inserted) order.push_back(r.image_id);
    set.image_of.push_back(it->second);
  }
  set.images = Matrix(order.size(), data.images.dim());
  for (std::size_t i = 0; i < order.size(); ++i) {
    const auto vec = data.images.table.find(order[i]);
    if (!vec) throw DataError("missing image features for '" + order[i] + "'");
    std::copy(vec->begin(), vec->end(), set.images.row(i).begin());
  }
  return set;
}

RetrievalScores mean_scores(std::span<const RetrievalScores> parts) {
  RetrievalScores m;
  const double k = static_cast<double>(parts.size());
  double images = 0.0, captions = 0.0;
  auto add = [k](DirectionScores& acc, const DirectionScores& s) {
    acc.r1 += s.r1 / k;
    acc.r5 += s.r5 / k;
    acc.r10 += s.r10 / k;
    acc.medr += s.medr / k;
  };
  for (const auto& p : parts) {
    add(m.caption_retrieval, p.caption_retrieval);
    add(m.image_retrieval, p.image_retrieval);
    images += static_cast<double>(p.n_images);
    captions += static_cast<double>(p.n_captions);
  }
  m.n_images = static_cast<std::size_t>(images / k);
  m.n_captions = static_cast<std::size_t>(captions / k);
  return m;
}

}  // namespace

EvalResult run_caption_retrieval(const TaskData& data, Encoder& encoder, const TaskRunOptions& options) {
  require_kind(data, {TaskKind::caption_retrieval}, "run_caption_retrieval");
  const std::size_t bs = options.encoder_batch_size;
  const CaptionImageSet train_set = build_retrieval_set(data, data.split("train"), encoder, bs);
  const CaptionImageSet dev_set = build_retrieval_set(data, data.split("dev"), encoder, bs);
  const CaptionImageSet test_set = build_retrieval_set(data, data.split("test"), encoder, bs);

  const RetrievalFit fit = train_retrieval(options.retrieval, train_set, dev_set);
  RetrievalResult res;
  res.dev_score = fit.report.best_dev_score;
  res.epochs_run = fit.report.epochs_run;
  const auto parts = partition_images(test_set.images.rows(), options.retrieval.n_splits,
                                      derive_seed(options.retrieval.seed, 0x53504C54ULL));
  for (const auto& part : parts) {
    res.splits.push_back(evaluate_retrieval(fit.model, restrict_to_images(test_set, part)));
  }
  res.mean = mean_scores(res.splits);
  return {data.spec.name, data.spec.kind, res};
}

EvalResult run_task(const TaskData& data, Encoder& encoder, const TaskRunOptions& options) {
  encoder.prepare(task_sentences(data));
  return run_prepared_task(data, encoder, options);
}

EvalResult run_prepared_task(const TaskData& data, Encoder& encoder, const TaskRunOptions& options) {
  switch (data.spec.kind) {
    case TaskKind::classification:
      return run_classification(data, encoder, options);
    case TaskKind::pair_classification:
    case TaskKind::paraphrase:
      return run_pair_classification(data, encoder, options);
    case TaskKind::relatedness:
      return run_relatedness(data, encoder, options);
    case TaskKind::sts_unsupervised:
      return {data.spec.name, data.spec.kind,
              run_sts_unsupervised(data, encoder, options.encoder_batch_size)};
    case TaskKind::caption_retrieval:
      return run_caption_retrieval(data, encoder, options);
  }
  throw ConfigError("unhandled task kind");
}

}  // namespace embeval
