#include <doctest.h>

#include <cmath>
#include <set>

#include "emsa/data.hpp"

using namespace emsa;

TEST_CASE("sine dataset: targets are sin(input), inputs in range, seeded") {
  const Dataset ds = sine_dataset(1000, 42);
  REQUIRE(ds.size() == 1000);
  for (Eigen::Index i = 0; i < ds.size(); ++i) {
    const double x = ds.inputs(0, i);
    CHECK(x >= -M_PI);
    CHECK(x <= M_PI);
    CHECK(std::abs(ds.scalar_targets[i]) <= 1.0);
    CHECK(ds.scalar_targets[i] == std::sin(x));
  }
  const Dataset again = sine_dataset(1000, 42);
  CHECK((ds.inputs - again.inputs).lpNorm<Eigen::Infinity>() == 0.0);
  const Dataset other = sine_dataset(1000, 43);
  CHECK((ds.inputs - other.inputs).lpNorm<Eigen::Infinity>() != 0.0);

  // Uniform-distribution moment oracle: mean within 3 sigma of 0.
  const double sigma = M_PI / std::sqrt(3.0 * 1000.0);
  CHECK(std::abs(ds.inputs.row(0).mean()) < 3.0 * sigma);

  CHECK_THROWS_AS(sine_dataset(0, 1), ShapeError);
}

TEST_CASE("lift_input replicates scalars into all components") {
  Eigen::MatrixXd x(1, 2);
  x << 0.5, -1.25;
  const Eigen::MatrixXd lifted = lift_input(x, 5);
  REQUIRE(lifted.rows() == 5);
  for (int i = 0; i < 5; ++i) {
    CHECK(lifted(i, 0) == 0.5);
    CHECK(lifted(i, 1) == -1.25);
  }
  CHECK((lift_input(x, 1) - x).norm() == 0.0);    // d = 1 is the identity
  CHECK((lifted.row(0) - x.row(0)).norm() == 0.0);  // first row equals original
}

TEST_CASE("minibatch sampler partitions each epoch exactly once") {
  Dataset ds = sine_dataset(10, 7);
  MinibatchSampler sampler(ds, 4, 3);
  CHECK(sampler.batches_per_epoch() == 3);  // 4 + 4 + 2, short batch kept
  std::multiset<double> seen;
  Eigen::Index total = 0;
  for (int b = 0; b < 3; ++b) {
    const Batch batch = sampler.next();
    total += batch.size();
    for (Eigen::Index i = 0; i < batch.size(); ++i) seen.insert(batch.inputs(0, i));
  }
  CHECK(total == 10);
  std::multiset<double> expected;
  for (Eigen::Index i = 0; i < 10; ++i) expected.insert(ds.inputs(0, i));
  CHECK(seen == expected);
}

TEST_CASE("batch_size = n yields one shuffled batch per epoch") {
  Dataset ds = sine_dataset(16, 9);
  MinibatchSampler sampler(ds, 16, 11);
  CHECK(sampler.batches_per_epoch() == 1);
  const Batch whole = sampler.next();
  CHECK(whole.size() == 16);
}

TEST_CASE("sampler is deterministic under a fixed seed") {
  Dataset ds = sine_dataset(20, 13);
  MinibatchSampler a(ds, 6, 5);
  MinibatchSampler b(ds, 6, 5);
  for (int k = 0; k < 7; ++k) {  // crosses an epoch boundary
    const Batch ba = a.next();
    const Batch bb = b.next();
    CHECK((ba.inputs - bb.inputs).lpNorm<Eigen::Infinity>() == 0.0);
  }
}

TEST_CASE("a 55000-sample set with batch 100 yields 550 batches per epoch") {
  Dataset ds;
  ds.inputs = Eigen::MatrixXd::Zero(1, 55000);
  ds.scalar_targets = Eigen::VectorXd::Zero(55000);
  MinibatchSampler sampler(ds, 100, 1);
  CHECK(sampler.batches_per_epoch() == 550);
}

TEST_CASE("sampler rejects bad sizes") {
  Dataset ds = sine_dataset(4, 1);
  CHECK_THROWS_AS(MinibatchSampler(ds, 0, 1), ShapeError);
  CHECK_THROWS_AS(MinibatchSampler(ds, 5, 1), ShapeError);
}
