#include "emsa/data.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace emsa {

Batch Dataset::select(const std::vector<Eigen::Index>& idx) const {
  Batch b;
  b.inputs.resize(inputs.rows(), static_cast<Eigen::Index>(idx.size()));
  if (scalar_targets.size() > 0) b.scalar_targets.resize(static_cast<Eigen::Index>(idx.size()));
  if (labels.size() > 0) b.labels.resize(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) {
    const Eigen::Index j = static_cast<Eigen::Index>(k);
    b.inputs.col(j) = inputs.col(idx[k]);
    if (scalar_targets.size() > 0) b.scalar_targets[j] = scalar_targets[idx[k]];
    if (labels.size() > 0) b.labels[j] = labels[idx[k]];
  }
  return b;
}

Dataset sine_dataset(Eigen::Index n, std::uint64_t seed) {
  if (n <= 0) {
    throw ShapeError("sine_dataset: sample count must be positive");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(-M_PI, M_PI);
  Dataset ds;
  ds.name = "sine";
  ds.normalization = "none";
  ds.inputs.resize(1, n);
  ds.scalar_targets.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double x = unif(rng);
    ds.inputs(0, i) = x;
    ds.scalar_targets[i] = std::sin(x);
  }
  return ds;
}

Eigen::MatrixXd lift_input(const Eigen::MatrixXd& x, int d) {
  if (d < 1) {
    throw ShapeError("lift_input: target dim must be >= 1");
  }
  if (x.rows() != 1) {
    throw ShapeError("lift_input expects scalar inputs (one row)");
  }
  return x.replicate(d, 1);
}

Dataset lift_dataset(const Dataset& ds, int d) {
  Dataset out = ds;
  out.inputs = lift_input(ds.inputs, d);
  return out;
}

Dataset slice_dataset(const Dataset& ds, Eigen::Index first, Eigen::Index count) {
  if (first < 0 || count <= 0 || first + count > ds.size()) {
    throw ShapeError("slice_dataset: range out of bounds");
  }
  Dataset out;
  out.name = ds.name;
  out.normalization = ds.normalization;
  out.inputs = ds.inputs.middleCols(first, count);
  if (ds.scalar_targets.size() > 0) out.scalar_targets = ds.scalar_targets.segment(first, count);
  if (ds.labels.size() > 0) out.labels = ds.labels.segment(first, count);
  return out;
}

MinibatchSampler::MinibatchSampler(const Dataset& dataset, Eigen::Index batch_size,
                                   std::uint64_t seed)
    : dataset_(&dataset), batch_size_(batch_size), rng_(seed) {
  if (dataset.size() == 0) {
    throw ShapeError("minibatch sampler: empty dataset");
  }
  if (batch_size < 1 || batch_size > dataset.size()) {
    throw ShapeError("minibatch sampler: batch size out of range");
  }
  order_.resize(static_cast<std::size_t>(dataset.size()));
  std::iota(order_.begin(), order_.end(), Eigen::Index{0});
  reshuffle();
}

void MinibatchSampler::reshuffle() {
  std::shuffle(order_.begin(), order_.end(), rng_);
  cursor_ = 0;
}

Eigen::Index MinibatchSampler::batches_per_epoch() const {
  return (dataset_->size() + batch_size_ - 1) / batch_size_;
}

Batch MinibatchSampler::next() {
  if (cursor_ >= dataset_->size()) reshuffle();
  const Eigen::Index count = std::min(batch_size_, dataset_->size() - cursor_);
  std::vector<Eigen::Index> idx(order_.begin() + cursor_, order_.begin() + cursor_ + count);
  cursor_ += count;
  return dataset_->select(idx);
}

}  // namespace emsa
