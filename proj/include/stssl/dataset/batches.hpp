// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "stssl/dataset/augment.hpp"
#include "stssl/dataset/dataset.hpp"

#include <cstdint>
#include <vector>

namespace stssl::dataset {

/// Sample indices drawn for one training step.
struct BatchIndices {
  std::int64_t step = 0;
  std::vector<std::size_t> labeled;
  std::vector<std::size_t> unlabeled;
};

/// Deterministic labeled/unlabeled index streams.
///
/// Each pool is consumed in epochs: a seeded permutation per (pool, epoch) is
/// walked front to back and the next epoch starts where the previous one
/// ended. The two pools cycle independently. Because the permutation of every
/// epoch is a pure function of (seed, pool, epoch), the batch at any step is
/// computable without replaying earlier steps.
class BatchSampler {
 public:
  /// Throws Error on empty pools, or when a batch is larger than its pool and
  /// with_replacement is false.
  BatchSampler(std::vector<std::size_t> labeled_pool, std::vector<std::size_t> unlabeled_pool,
               int n_labeled, int n_unlabeled, std::uint64_t seed, bool with_replacement = true);

  BatchIndices at(std::int64_t step) const;
  BatchIndices next() { return at(cursor_++); }

  std::int64_t cursor() const { return cursor_; }
  void seek(std::int64_t step) { cursor_ = step; }
  int n_labeled() const { return n_labeled_; }
  int n_unlabeled() const { return n_unlabeled_; }

 private:
  std::vector<std::size_t> draw(const std::vector<std::size_t>& pool, std::uint64_t stream,
                                std::int64_t start, int count) const;

  std::vector<std::size_t> labeled_pool_;
  std::vector<std::size_t> unlabeled_pool_;
  int n_labeled_;
  int n_unlabeled_;
  std::uint64_t seed_;
  std::int64_t cursor_ = 0;
};

/// Index-only entry point mirroring the batch contract.
BatchSampler make_batches(const LoadedDataset& data, const std::vector<std::string>& labeled_ids,
                          const std::vector<std::string>& unlabeled_ids, int n_labeled,
                          int n_unlabeled, std::uint64_t seed, bool with_replacement = true);

/// Images of a set of samples stacked one per row (HWC flattened).
Mat stack_images(const std::vector<const Image*>& images);

/// Tensors for one step. Weak and strong views are produced for both pools;
/// views that a training mode does not need are simply left unused.
struct Batch {
  std::int64_t step = 0;
  std::vector<std::size_t> labeled;
  std::vector<std::size_t> unlabeled;
  Mat labeled_weak;
  Mat labeled_strong;
  Mat unlabeled_weak;
  Mat unlabeled_strong;
  std::vector<GeoTemporal> labeled_meta;
  std::vector<GeoTemporal> unlabeled_meta;
  Mat labeled_targets;
  /// Ground truth of the unlabeled samples, when the dataset has it. Used only
  /// for pseudo-label quality bookkeeping, never by a loss.
  Mat unlabeled_hidden_targets;
  bool has_hidden_targets = false;
};

struct BatchViews {
  bool labeled_strong = false;
  bool unlabeled = true;
};

Batch assemble_batch(const LoadedDataset& data, const BatchIndices& indices,
                     const AugmentationPolicy& policy, BatchViews views = {});

}  // namespace stssl::dataset
