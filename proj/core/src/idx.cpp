#include "emsa/idx.hpp"

#include <fstream>

namespace emsa {

namespace {

constexpr std::uint32_t kImagesMagic = 0x00000803u;
constexpr std::uint32_t kLabelsMagic = 0x00000801u;

std::uint32_t read_u32(std::span<const std::uint8_t> bytes, std::size_t offset) {
  if (offset + 4 > bytes.size()) {
    throw ParseError("truncated IDX header", offset);
  }
  return (static_cast<std::uint32_t>(bytes[offset]) << 24) |
         (static_cast<std::uint32_t>(bytes[offset + 1]) << 16) |
         (static_cast<std::uint32_t>(bytes[offset + 2]) << 8) |
         static_cast<std::uint32_t>(bytes[offset + 3]);
}

}  // namespace

IdxImages idx_parse_images(std::span<const std::uint8_t> bytes) {
  const std::uint32_t magic = read_u32(bytes, 0);
  if (magic != kImagesMagic) {
    throw ParseError("bad IDX image magic", 0);
  }
  IdxImages out;
  out.count = static_cast<int>(read_u32(bytes, 4));
  out.rows = static_cast<int>(read_u32(bytes, 8));
  out.cols = static_cast<int>(read_u32(bytes, 12));
  const std::size_t pixel_count =
      static_cast<std::size_t>(out.count) * out.rows * out.cols;
  if (bytes.size() < 16 + pixel_count) {
    throw ParseError("truncated IDX image payload", bytes.size());
  }
  if (bytes.size() > 16 + pixel_count) {
    throw ParseError("trailing bytes after IDX image payload", 16 + pixel_count);
  }
  out.pixels.resize(static_cast<Eigen::Index>(out.rows) * out.cols, out.count);
  const std::uint8_t* px = bytes.data() + 16;
  for (int i = 0; i < out.count; ++i) {
    for (Eigen::Index k = 0; k < out.pixels.rows(); ++k) {
      out.pixels(k, i) = static_cast<double>(*px++) / 255.0;
    }
  }
  return out;
}

IdxLabels idx_parse_labels(std::span<const std::uint8_t> bytes) {
  const std::uint32_t magic = read_u32(bytes, 0);
  if (magic != kLabelsMagic) {
    throw ParseError("bad IDX label magic", 0);
  }
  const std::uint32_t count = read_u32(bytes, 4);
  if (bytes.size() < 8 + count) {
    throw ParseError("truncated IDX label payload", bytes.size());
  }
  if (bytes.size() > 8 + count) {
    throw ParseError("trailing bytes after IDX label payload", 8 + static_cast<std::size_t>(count));
  }
  IdxLabels out;
  out.labels.resize(static_cast<Eigen::Index>(count));
  for (std::uint32_t i = 0; i < count; ++i) {
    out.labels[static_cast<Eigen::Index>(i)] = bytes[8 + i];
  }
  return out;
}

IdxContent idx_parse(std::span<const std::uint8_t> bytes) {
  const std::uint32_t magic = read_u32(bytes, 0);
  if (magic == kImagesMagic) return idx_parse_images(bytes);
  if (magic == kLabelsMagic) return idx_parse_labels(bytes);
  throw ParseError("unrecognized IDX magic", 0);
}

IdxContent idx_parse_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ParseError("cannot open " + path.string(), 0);
  }
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  try {
    return idx_parse(bytes);
  } catch (const ParseError& e) {
    throw ParseError(path.filename().string() + ": " + e.what(), e.offset());
  }
}

Dataset load_idx_dataset(const std::filesystem::path& images,
                         const std::filesystem::path& labels, const std::string& name) {
  IdxContent ic = idx_parse_file(images);
  IdxContent lc = idx_parse_file(labels);
  if (!std::holds_alternative<IdxImages>(ic)) {
    throw ParseError(images.string() + " is not an IDX image file", 0);
  }
  if (!std::holds_alternative<IdxLabels>(lc)) {
    throw ParseError(labels.string() + " is not an IDX label file", 0);
  }
  IdxImages& im = std::get<IdxImages>(ic);
  IdxLabels& lb = std::get<IdxLabels>(lc);
  if (im.count != lb.labels.size()) {
    throw ParseError("image/label count mismatch: " + std::to_string(im.count) + " vs " +
                         std::to_string(lb.labels.size()),
                     0);
  }
  Dataset ds;
  ds.name = name;
  ds.normalization = "pixels scaled to [0,1]";
  ds.inputs = std::move(im.pixels);
  ds.labels = std::move(lb.labels);
  return ds;
}

MnistSplit load_mnist_split(const std::filesystem::path& dir, const std::string& name) {
  MnistSplit split;
  const Dataset raw = load_idx_dataset(dir / "train-images-idx3-ubyte",
                                       dir / "train-labels-idx1-ubyte", name + "-train");
  if (raw.size() == 60000) {
    split.validation = slice_dataset(raw, 0, 5000);
    split.validation.name = name + "-validation";
    split.train = slice_dataset(raw, 5000, 55000);
  } else {
    split.train = raw;
  }
  const auto test_images = dir / "t10k-images-idx3-ubyte";
  const auto test_labels = dir / "t10k-labels-idx1-ubyte";
  if (std::filesystem::exists(test_images) && std::filesystem::exists(test_labels)) {
    split.test = load_idx_dataset(test_images, test_labels, name + "-test");
  }
  return split;
}

}  // namespace emsa
