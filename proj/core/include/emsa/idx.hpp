#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <variant>
#include <vector>

#include "emsa/data.hpp"

// Parser for the big-endian IDX binary container used by MNIST-style
// datasets. Images: magic 0x00000803, then u32 count/rows/cols and u8 pixels
// row-major, scaled by 1/255. Labels: magic 0x00000801, then u32 count and u8
// labels. Malformed streams raise ParseError carrying the byte offset.

namespace emsa {

struct IdxImages {
  int count = 0;
  int rows = 0;
  int cols = 0;
  Eigen::MatrixXd pixels;  // (rows*cols) x count, values in [0,1]
};

struct IdxLabels {
  Eigen::VectorXi labels;
};

using IdxContent = std::variant<IdxImages, IdxLabels>;

IdxContent idx_parse(std::span<const std::uint8_t> bytes);
IdxImages idx_parse_images(std::span<const std::uint8_t> bytes);
IdxLabels idx_parse_labels(std::span<const std::uint8_t> bytes);

IdxContent idx_parse_file(const std::filesystem::path& path);

/// Pairs an image file with a label file into a classification dataset.
Dataset load_idx_dataset(const std::filesystem::path& images,
                         const std::filesystem::path& labels, const std::string& name);

struct MnistSplit {
  Dataset train;       // 55000 samples when the canonical 60000-image files are given
  Dataset validation;  // first 5000 samples of the raw training files
  Dataset test;        // present when the t10k files exist
};

/// Loads train-images/train-labels (and t10k-* when present) from a
/// directory. The canonical 60000-image files are split into the first 5000
/// (validation) and remaining 55000 (train); files of any other size go to
/// train unsplit.
MnistSplit load_mnist_split(const std::filesystem::path& dir, const std::string& name = "mnist");

}  // namespace emsa
