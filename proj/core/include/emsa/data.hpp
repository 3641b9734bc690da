#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "emsa/network.hpp"

namespace emsa {

/// An immutable collection of sample input-label pairs. Either scalar_targets
/// (regression) or labels (classification) is populated.
struct Dataset {
  Eigen::MatrixXd inputs;  // raw_dim x n, no non-finite entries
  Eigen::VectorXd scalar_targets;
  Eigen::VectorXi labels;
  std::string name;
  std::string normalization;  // e.g. "none", "pixels scaled to [0,1]"

  Eigen::Index size() const { return inputs.cols(); }
  bool is_classification() const { return labels.size() > 0; }
  Batch full_batch() const { return Batch{inputs, scalar_targets, labels}; }
  Batch select(const std::vector<Eigen::Index>& idx) const;
};

/// n inputs uniform on [-pi, pi] under a seeded generator, targets sin(x).
Dataset sine_dataset(Eigen::Index n, std::uint64_t seed);

/// Copies each scalar into all d components: the input lifting used for
/// scalar regression through a d-dimensional state.
Eigen::MatrixXd lift_input(const Eigen::MatrixXd& x, int d);

/// Convenience: dataset with lifted inputs, targets untouched.
Dataset lift_dataset(const Dataset& ds, int d);

/// Takes samples [first, first+count) of a dataset.
Dataset slice_dataset(const Dataset& ds, Eigen::Index first, Eigen::Index count);

/// Seeded epoch sampler: each epoch shuffles the sample indices and yields a
/// contiguous partition; the last short batch is kept. Deterministic.
class MinibatchSampler {
 public:
  MinibatchSampler(const Dataset& dataset, Eigen::Index batch_size, std::uint64_t seed);

  Batch next();
  Eigen::Index batches_per_epoch() const;
  Eigen::Index batch_size() const { return batch_size_; }

 private:
  void reshuffle();

  const Dataset* dataset_;
  Eigen::Index batch_size_;
  std::mt19937_64 rng_;
  std::vector<Eigen::Index> order_;
  Eigen::Index cursor_ = 0;
};

}  // namespace emsa
