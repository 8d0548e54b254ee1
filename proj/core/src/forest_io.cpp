#include <array>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "mfl/errors.hpp"
#include "mfl/forest.hpp"

namespace mfl {

namespace {

constexpr char kMagic[4] = {'M', 'F', 'L', 'F'};
constexpr std::uint16_t kFormatVersion = 1;

std::uint32_t crc32(const std::uint8_t* data, std::size_t size) {
  static const auto table = [] {
    std::array<std::uint32_t, 256> t{};
    for (std::uint32_t i = 0; i < 256; ++i) {
      std::uint32_t c = i;
      for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
      t[i] = c;
    }
    return t;
  }();
  std::uint32_t crc = 0xFFFFFFFFu;
  for (std::size_t i = 0; i < size; ++i) {
    crc = table[(crc ^ data[i]) & 0xFFu] ^ (crc >> 8);
  }
  return crc ^ 0xFFFFFFFFu;
}

class Writer {
 public:
  void u8(std::uint8_t v) { buf_.push_back(v); }
  void u16(std::uint16_t v) { le(v); }
  void u32(std::uint32_t v) { le(v); }
  void u64(std::uint64_t v) { le(v); }
  void f64(double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof(bits));
    le(bits);
  }
  void raw(const char* data, std::size_t size) {
    buf_.insert(buf_.end(), data, data + size);
  }
  const std::vector<std::uint8_t>& bytes() const { return buf_; }

 private:
  template <class T>
  void le(T v) {
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
  }
  std::vector<std::uint8_t> buf_;
};

class Reader {
 public:
  Reader(const std::uint8_t* data, std::size_t size) : data_(data), size_(size) {}

  std::uint8_t u8() { return take<std::uint8_t>(); }
  std::uint16_t u16() { return take<std::uint16_t>(); }
  std::uint32_t u32() { return take<std::uint32_t>(); }
  std::uint64_t u64() { return take<std::uint64_t>(); }
  double f64() {
    const std::uint64_t bits = take<std::uint64_t>();
    double v;
    std::memcpy(&v, &bits, sizeof(v));
    return v;
  }
  std::size_t offset() const { return at_; }

 private:
  template <class T>
  T take() {
    if (at_ + sizeof(T) > size_) throw DataError("corrupted model file: truncated payload");
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      v = static_cast<T>(v | (static_cast<std::uint64_t>(data_[at_ + i]) << (8 * i)));
    }
    at_ += sizeof(T);
    return v;
  }
  const std::uint8_t* data_;
  std::size_t size_;
  std::size_t at_ = 0;
};

// Pre-order flattening with an explicit stack; child links are rebuilt on
// load from the structure tags alone.
void write_tree(Writer& w, const TreeModel& t) {
  const auto& nodes = t.nodes();
  w.u32(static_cast<std::uint32_t>(nodes.size()));
  std::vector<int> stack{0};
  while (!stack.empty()) {
    const int at = stack.back();
    stack.pop_back();
    const TreeNode& node = nodes[static_cast<std::size_t>(at)];
    if (node.is_leaf) {
      w.u8(1);
      w.f64(node.positive_fraction);
      w.u64(static_cast<std::uint64_t>(node.sample_count));
    } else {
      w.u8(0);
      w.u32(static_cast<std::uint32_t>(node.feature_index));
      w.f64(node.threshold);
      stack.push_back(node.right);
      stack.push_back(node.left);
    }
  }
}

TreeModel read_tree(Reader& r, std::size_t n_features) {
  const std::uint32_t count = r.u32();
  if (count == 0 || count > (1u << 28)) {
    throw DataError("corrupted model file: bad node count");
  }
  std::vector<TreeNode> nodes;
  nodes.reserve(count);

  struct Pending {
    int parent;
    bool is_left;
  };
  std::vector<Pending> stack{{-1, false}};
  while (!stack.empty()) {
    if (nodes.size() >= count) throw DataError("corrupted model file: node overflow");
    const Pending p = stack.back();
    stack.pop_back();
    const int slot = static_cast<int>(nodes.size());
    nodes.emplace_back();
    if (p.parent >= 0) {
      auto& parent = nodes[static_cast<std::size_t>(p.parent)];
      (p.is_left ? parent.left : parent.right) = slot;
    }
    const std::uint8_t tag = r.u8();
    TreeNode& node = nodes.back();
    if (tag == 1) {
      node.is_leaf = true;
      node.positive_fraction = r.f64();
      node.sample_count = static_cast<int>(r.u64());
    } else if (tag == 0) {
      node.is_leaf = false;
      node.feature_index = static_cast<int>(r.u32());
      node.threshold = r.f64();
      stack.push_back({slot, false});
      stack.push_back({slot, true});
    } else {
      throw DataError("corrupted model file: bad node tag");
    }
  }
  if (nodes.size() != count) {
    throw DataError("corrupted model file: node count mismatch");
  }
  try {
    return TreeModel::from_nodes(std::move(nodes), n_features);
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("corrupted model file: ") + e.what());
  }
}

}  // namespace

void save_model(const ForestModel& fm, const std::string& path) {
  Writer w;
  w.raw(kMagic, 4);
  w.u16(kFormatVersion);
  w.u32(static_cast<std::uint32_t>(fm.n_trees()));
  w.u32(static_cast<std::uint32_t>(fm.n_features()));
  w.u8(fm.complexity_mode() == ComplexityMode::leaves ? 0 : 1);
  w.u8(static_cast<std::uint8_t>(fm.aggregation()));
  if (fm.loss_spec_used()) {
    w.u8(1);
    w.u8(static_cast<std::uint8_t>(fm.loss_spec_used()->kind));
    w.f64(fm.loss_spec_used()->alpha);
    w.f64(fm.loss_spec_used()->gamma);
  } else {
    w.u8(0);
  }
  for (const auto& tree : fm.trees()) write_tree(w, tree);
  for (std::size_t m = 0; m < fm.n_trees(); ++m) w.f64(fm.weights()[m]);

  const std::uint32_t checksum = crc32(w.bytes().data(), w.bytes().size());
  Writer tail;
  tail.u32(checksum);

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write model file: " + path);
  out.write(reinterpret_cast<const char*>(w.bytes().data()),
            static_cast<std::streamsize>(w.bytes().size()));
  out.write(reinterpret_cast<const char*>(tail.bytes().data()),
            static_cast<std::streamsize>(tail.bytes().size()));
  if (!out) throw DataError("write failed: " + path);
}

ForestModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open model file: " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (bytes.size() < 4 + 2 + 4) throw DataError("corrupted model file: too short");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw DataError("corrupted model file: bad magic");
  }
  Reader header(bytes.data() + 4, bytes.size() - 4);
  const std::uint16_t version = header.u16();
  if (version != kFormatVersion) {
    throw DataError("unsupported model format version " + std::to_string(version));
  }
  const std::size_t payload = bytes.size() - 4;  // checksum trails everything
  const std::uint32_t stored = static_cast<std::uint32_t>(bytes[payload]) |
                               (static_cast<std::uint32_t>(bytes[payload + 1]) << 8) |
                               (static_cast<std::uint32_t>(bytes[payload + 2]) << 16) |
                               (static_cast<std::uint32_t>(bytes[payload + 3]) << 24);
  if (crc32(bytes.data(), payload) != stored) {
    throw DataError("corrupted model file: checksum mismatch");
  }

  Reader r(bytes.data() + 6, payload - 6);
  const std::uint32_t n_trees = r.u32();
  const std::uint32_t n_features = r.u32();
  if (n_trees == 0 || n_features == 0) {
    throw DataError("corrupted model file: empty model");
  }
  const std::uint8_t mode_tag = r.u8();
  if (mode_tag > 1) throw DataError("corrupted model file: bad complexity mode");
  const auto mode = mode_tag == 0 ? ComplexityMode::leaves : ComplexityMode::internal;
  const std::uint8_t agg_tag = r.u8();
  if (agg_tag > 2) throw DataError("corrupted model file: bad aggregation");
  const auto aggregation = static_cast<Aggregation>(agg_tag);
  std::optional<LossSpec> loss_used;
  if (const std::uint8_t has_loss = r.u8(); has_loss == 1) {
    LossSpec spec;
    const std::uint8_t kind = r.u8();
    if (kind > 4) throw DataError("corrupted model file: bad loss kind");
    spec.kind = static_cast<LossKind>(kind);
    spec.alpha = r.f64();
    spec.gamma = r.f64();
    loss_used = spec;
  } else if (has_loss != 0) {
    throw DataError("corrupted model file: bad loss flag");
  }

  std::vector<TreeModel> trees;
  trees.reserve(n_trees);
  for (std::uint32_t m = 0; m < n_trees; ++m) trees.push_back(read_tree(r, n_features));

  std::vector<double> weights(n_trees);
  for (auto& wv : weights) wv = r.f64();
  if (r.offset() != payload - 6) {
    throw DataError("corrupted model file: trailing bytes");
  }

  try {
    return ForestModel(std::move(trees), WeightVector::checked(std::move(weights)),
                       aggregation, std::move(loss_used), mode);
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("corrupted model file: ") + e.what());
  }
}

}  // namespace mfl
