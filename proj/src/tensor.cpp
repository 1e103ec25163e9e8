#include "fsnn/tensor.hpp"

#include <algorithm>
#include <cstring>
#include <sstream>
#include <unordered_set>

#include "fsnn/rng.hpp"

namespace fsnn {

std::string hex64(uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[i] = digits[v & 0xf];
    v >>= 4;
  }
  return s;
}

bool Tensor::bitwise_equal(const Tensor& o) const {
  if (shape != o.shape) return false;
  return std::memcmp(data.data(), o.data.data(), data.size() * sizeof(float)) == 0;
}

uint64_t Tensor::bits_hash() const {
  uint64_t h = fnv1a64(data.data(), data.size() * sizeof(float));
  for (uint32_t d : shape) h = fnv1a64(&d, sizeof(d), h);
  return h;
}

std::string Tensor::shape_str() const {
  std::ostringstream os;
  os << "(";
  for (size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
  os << ")";
  return os.str();
}

void Dataset::validate() const {
  check(!labels.empty(), Err::EmptyDataset, "dataset has no samples");
  check(images.rank() == 4, Err::ShapeMismatch, "dataset images must be N x C x H x W");
  check(images.dim(0) == labels.size(), Err::ShapeMismatch,
        "image count != label count");
  for (uint32_t l : labels)
    check(l < class_count, Err::BadFormat, "label out of range for class count");
}

Tensor Dataset::sample(size_t i) const {
  const size_t per = images.numel() / images.dim(0);
  Tensor t({images.dim(1), images.dim(2), images.dim(3)});
  std::memcpy(t.data.data(), images.data.data() + i * per, per * sizeof(float));
  return t;
}

Dataset Dataset::subset(size_t offset, size_t n) const {
  check(offset + n <= size(), Err::BadArgument, "subset out of range");
  const size_t per = images.numel() / images.dim(0);
  Dataset d;
  d.images = Tensor({static_cast<uint32_t>(n), images.dim(1), images.dim(2), images.dim(3)});
  std::memcpy(d.images.data.data(), images.data.data() + offset * per,
              n * per * sizeof(float));
  d.labels.assign(labels.begin() + offset, labels.begin() + offset + n);
  d.class_count = class_count;
  d.split = split;
  return d;
}

std::vector<uint64_t> Rng::sample_distinct(uint64_t n, uint64_t k) {
  // declared in rng.hpp; lives here to keep the header light
  std::vector<uint64_t> out;
  out.reserve(k);
  std::unordered_set<uint64_t> seen;
  seen.reserve(k * 2);
  // Floyd: for j in n-k..n-1, draw t in [0, j]; take t unless taken, else j.
  for (uint64_t j = n - k; j < n; ++j) {
    uint64_t t = below(j + 1);
    if (seen.count(t)) t = j;
    seen.insert(t);
    out.push_back(t);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace fsnn
