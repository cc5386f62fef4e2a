// SPDX-License-Identifier: Apache-2.0
#include "stssl/dataset/batches.hpp"

#include "stssl/common/hash.hpp"
#include "stssl/common/rng.hpp"

#include <numeric>

namespace stssl::dataset {

BatchSampler::BatchSampler(std::vector<std::size_t> labeled_pool,
                           std::vector<std::size_t> unlabeled_pool, int n_labeled,
                           int n_unlabeled, std::uint64_t seed, bool with_replacement)
    : labeled_pool_(std::move(labeled_pool)),
      unlabeled_pool_(std::move(unlabeled_pool)),
      n_labeled_(n_labeled),
      n_unlabeled_(n_unlabeled),
      seed_(seed) {
  if (n_labeled < 1) throw Error("n_labeled must be at least 1");
  if (n_unlabeled < 0) throw Error("n_unlabeled must be non-negative");
  if (labeled_pool_.empty()) throw Error("labeled pool is empty");
  if (n_unlabeled > 0 && unlabeled_pool_.empty()) throw Error("unlabeled pool is empty");
  if (!with_replacement) {
    if (static_cast<std::size_t>(n_labeled) > labeled_pool_.size()) {
      throw Error("n_labeled (" + std::to_string(n_labeled) + ") exceeds labeled pool size (" +
                  std::to_string(labeled_pool_.size()) + ") and replacement is disabled");
    }
    if (static_cast<std::size_t>(n_unlabeled) > unlabeled_pool_.size()) {
      throw Error("n_unlabeled (" + std::to_string(n_unlabeled) + ") exceeds unlabeled pool size (" +
                  std::to_string(unlabeled_pool_.size()) + ") and replacement is disabled");
    }
  }
}

std::vector<std::size_t> BatchSampler::draw(const std::vector<std::size_t>& pool,
                                            std::uint64_t stream, std::int64_t start,
                                            int count) const {
  std::vector<std::size_t> out;
  out.reserve(count);
  const auto n = static_cast<std::int64_t>(pool.size());
  std::int64_t epoch = -1;
  std::vector<std::size_t> order;
  for (std::int64_t pos = start; pos < start + count; ++pos) {
    const std::int64_t e = pos / n;
    if (e != epoch) {
      epoch = e;
      order.resize(pool.size());
      std::iota(order.begin(), order.end(), std::size_t{0});
      Rng rng(hash_combine(hash_combine(seed_, stream), static_cast<std::uint64_t>(epoch)));
      rng.shuffle(order);
    }
    out.push_back(pool[order[pos % n]]);
  }
  return out;
}

BatchIndices BatchSampler::at(std::int64_t step) const {
  BatchIndices b;
  b.step = step;
  b.labeled = draw(labeled_pool_, fnv1a64("labeled"), step * n_labeled_, n_labeled_);
  if (n_unlabeled_ > 0) {
    b.unlabeled = draw(unlabeled_pool_, fnv1a64("unlabeled"), step * n_unlabeled_, n_unlabeled_);
  }
  return b;
}

BatchSampler make_batches(const LoadedDataset& data, const std::vector<std::string>& labeled_ids,
                          const std::vector<std::string>& unlabeled_ids, int n_labeled,
                          int n_unlabeled, std::uint64_t seed, bool with_replacement) {
  return BatchSampler(data.indices_of(labeled_ids), data.indices_of(unlabeled_ids), n_labeled,
                      n_unlabeled, seed, with_replacement);
}

Mat stack_images(const std::vector<const Image*>& images) {
  if (images.empty()) return Mat();
  const auto width = static_cast<Eigen::Index>(images.front()->size());
  Mat out(static_cast<Eigen::Index>(images.size()), width);
  for (std::size_t r = 0; r < images.size(); ++r) {
    if (static_cast<Eigen::Index>(images[r]->size()) != width) throw Error("stack_images: size mismatch");
    for (Eigen::Index k = 0; k < width; ++k) out(static_cast<Eigen::Index>(r), k) = images[r]->pixels[k];
  }
  return out;
}

namespace {

Mat augmented_views(const LoadedDataset& data, const std::vector<std::size_t>& indices,
                    Branch branch, std::int64_t step, const AugmentationPolicy& policy) {
  std::vector<Image> views;
  views.reserve(indices.size());
  for (auto i : indices) {
    views.push_back(augment_image(data[i].image, data[i].id, branch, static_cast<std::uint64_t>(step), policy));
  }
  std::vector<const Image*> ptrs;
  for (const auto& v : views) ptrs.push_back(&v);
  return stack_images(ptrs);
}

}  // namespace

Batch assemble_batch(const LoadedDataset& data, const BatchIndices& indices,
                     const AugmentationPolicy& policy, BatchViews views) {
  Batch b;
  b.step = indices.step;
  b.labeled = indices.labeled;
  b.unlabeled = indices.unlabeled;
  b.labeled_weak = augmented_views(data, b.labeled, Branch::weak, b.step, policy);
  if (views.labeled_strong) b.labeled_strong = augmented_views(data, b.labeled, Branch::strong, b.step, policy);
  for (auto i : b.labeled) {
    if (!data[i].label) throw Error("sample '" + data[i].id + "' in the labeled pool has no label");
    b.labeled_meta.push_back(data[i].meta);
  }
  b.labeled_targets = data.targets(b.labeled);
  if (views.unlabeled && !b.unlabeled.empty()) {
    b.unlabeled_weak = augmented_views(data, b.unlabeled, Branch::weak, b.step, policy);
    b.unlabeled_strong = augmented_views(data, b.unlabeled, Branch::strong, b.step, policy);
  }
  b.has_hidden_targets = !b.unlabeled.empty();
  for (auto i : b.unlabeled) {
    b.unlabeled_meta.push_back(data[i].meta);
    if (!data[i].label) b.has_hidden_targets = false;
  }
  if (b.has_hidden_targets) b.unlabeled_hidden_targets = data.targets(b.unlabeled);
  return b;
}

}  // namespace stssl::dataset
