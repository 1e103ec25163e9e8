#include "fsnn/io.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <memory>
#include <sstream>

namespace fsnn {

namespace {

struct File {
  FILE* f = nullptr;
  std::string path;
  File(const std::string& p, const char* mode) : path(p) {
    f = std::fopen(p.c_str(), mode);
    check(f != nullptr, Err::IoError, "cannot open " + p);
  }
  ~File() {
    if (f) std::fclose(f);
  }
  void write(const void* p, size_t n) {
    check(std::fwrite(p, 1, n, f) == n, Err::IoError, "short write to " + path);
  }
  void read(void* p, size_t n) {
    check(std::fread(p, 1, n, f) == n, Err::Truncated, "truncated file " + path);
  }
};

void put_u32(File& f, uint32_t v) { f.write(&v, 4); }
void put_i32(File& f, int32_t v) { f.write(&v, 4); }
void put_f32(File& f, float v) { f.write(&v, 4); }
uint32_t get_u32(File& f) {
  uint32_t v;
  f.read(&v, 4);
  return v;
}
int32_t get_i32(File& f) {
  int32_t v;
  f.read(&v, 4);
  return v;
}
float get_f32(File& f) {
  float v;
  f.read(&v, 4);
  return v;
}
void put_str(File& f, const std::string& s) {
  put_u32(f, static_cast<uint32_t>(s.size()));
  f.write(s.data(), s.size());
}
std::string get_str(File& f) {
  uint32_t n = get_u32(f);
  check(n < (1u << 24), Err::BadFormat, "unreasonable string length in " + f.path);
  std::string s(n, '\0');
  f.read(s.data(), n);
  return s;
}
void put_tensor(File& f, const Tensor& t) {
  put_u32(f, static_cast<uint32_t>(t.rank()));
  for (uint32_t d : t.shape) put_u32(f, d);
  f.write(t.data.data(), t.data.size() * sizeof(float));
}
Tensor get_tensor(File& f) {
  uint32_t rank = get_u32(f);
  check(rank <= 8, Err::BadFormat, "tensor rank > 8 in " + f.path);
  std::vector<uint32_t> shape(rank);
  for (auto& d : shape) d = get_u32(f);
  Tensor t(shape);
  f.read(t.data.data(), t.data.size() * sizeof(float));
  return t;
}

// big-endian helpers for IDX
uint32_t get_be32(File& f) {
  unsigned char b[4];
  f.read(b, 4);
  return (uint32_t(b[0]) << 24) | (uint32_t(b[1]) << 16) | (uint32_t(b[2]) << 8) | b[3];
}
void put_be32(File& f, uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v >> 24), static_cast<unsigned char>(v >> 16),
                        static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
  f.write(b, 4);
}

constexpr uint32_t kModelVersion = 1;

}  // namespace

void save_model(const Model& m, const std::string& path) {
  File f(path, "wb");
  f.write("FSNN", 4);
  put_u32(f, kModelVersion);
  put_str(f, m.meta.name);
  put_u32(f, static_cast<uint32_t>(m.meta.input_shape.size()));
  for (uint32_t d : m.meta.input_shape) put_u32(f, d);
  put_u32(f, m.meta.class_count);
  put_u32(f, static_cast<uint32_t>(m.meta.hardening));
  put_str(f, m.meta.notes);
  put_u32(f, static_cast<uint32_t>(m.layers.size()));
  for (const Layer& l : m.layers) {
    put_u32(f, static_cast<uint32_t>(l.kind));
    put_str(f, l.name);
    put_f32(f, l.tau);
    put_f32(f, l.lo);
    put_f32(f, l.hi);
    put_u32(f, l.k);
    put_u32(f, l.s);
    put_u32(f, l.stride);
    put_u32(f, l.pad);
    put_i32(f, l.src);
    const uint32_t nparams = l.has_params() || l.kind == LayerKind::BatchNorm2dFolded ? 2 : 0;
    put_u32(f, nparams);
    if (nparams == 2) {
      put_tensor(f, l.weight);
      put_tensor(f, l.bias);
    }
  }
}

Model load_model(const std::string& path) {
  File f(path, "rb");
  char magic[4];
  f.read(magic, 4);
  check(std::memcmp(magic, "FSNN", 4) == 0, Err::BadMagic, "bad magic in " + path);
  const uint32_t version = get_u32(f);
  check(version == kModelVersion, Err::BadVersion,
        "unsupported model version " + std::to_string(version) + " in " + path);
  Model m;
  m.meta.name = get_str(f);
  uint32_t rank = get_u32(f);
  check(rank <= 8, Err::BadFormat, "input rank > 8");
  m.meta.input_shape.resize(rank);
  for (auto& d : m.meta.input_shape) d = get_u32(f);
  m.meta.class_count = get_u32(f);
  m.meta.hardening = static_cast<HardeningTag>(get_u32(f));
  m.meta.notes = get_str(f);
  const uint32_t nlayers = get_u32(f);
  check(nlayers < (1u << 16), Err::BadFormat, "unreasonable layer count");
  m.layers.reserve(nlayers);
  for (uint32_t i = 0; i < nlayers; ++i) {
    Layer l;
    l.kind = static_cast<LayerKind>(get_u32(f));
    l.name = get_str(f);
    l.tau = get_f32(f);
    l.lo = get_f32(f);
    l.hi = get_f32(f);
    l.k = get_u32(f);
    l.s = get_u32(f);
    l.stride = get_u32(f);
    l.pad = get_u32(f);
    l.src = get_i32(f);
    const uint32_t nparams = get_u32(f);
    check(nparams <= 2, Err::BadFormat, "bad param count");
    if (nparams == 2) {
      l.weight = get_tensor(f);
      l.bias = get_tensor(f);
    }
    m.layers.push_back(std::move(l));
  }
  m.validate();
  return m;
}

Dataset load_mnist_idx(const std::string& images_path, const std::string& labels_path) {
  Dataset ds;
  {
    File f(images_path, "rb");
    const uint32_t magic = get_be32(f);
    check(magic == 0x00000803u, Err::BadMagic,
          "images magic mismatch (want 0x00000803) in " + images_path);
    const uint32_t n = get_be32(f), h = get_be32(f), w = get_be32(f);
    ds.images = Tensor({n, 1, h, w});
    std::vector<unsigned char> row(static_cast<size_t>(h) * w);
    for (uint32_t i = 0; i < n; ++i) {
      f.read(row.data(), row.size());
      float* dst = ds.images.data.data() + static_cast<size_t>(i) * h * w;
      for (size_t j = 0; j < row.size(); ++j) dst[j] = static_cast<float>(row[j]) / 255.0f;
    }
  }
  {
    File f(labels_path, "rb");
    const uint32_t magic = get_be32(f);
    check(magic == 0x00000801u, Err::BadMagic,
          "labels magic mismatch (want 0x00000801) in " + labels_path);
    const uint32_t n = get_be32(f);
    check(n == ds.images.dim(0), Err::BadFormat, "image/label count mismatch");
    std::vector<unsigned char> buf(n);
    f.read(buf.data(), n);
    ds.labels.assign(buf.begin(), buf.end());
  }
  ds.class_count = 10;
  ds.split = "unspecified";
  ds.validate();
  return ds;
}

void write_idx_images(const std::string& path, const Tensor& images) {
  check(images.rank() == 4 && images.dim(1) == 1, Err::BadArgument,
        "IDX writer expects N x 1 x H x W");
  File f(path, "wb");
  put_be32(f, 0x00000803u);
  put_be32(f, images.dim(0));
  put_be32(f, images.dim(2));
  put_be32(f, images.dim(3));
  std::vector<unsigned char> buf(images.numel());
  for (size_t i = 0; i < buf.size(); ++i) {
    float v = images.data[i] * 255.0f + 0.5f;
    buf[i] = static_cast<unsigned char>(v < 0 ? 0 : (v > 255 ? 255 : v));
  }
  f.write(buf.data(), buf.size());
}

void write_idx_labels(const std::string& path, const std::vector<uint32_t>& labels) {
  File f(path, "wb");
  put_be32(f, 0x00000801u);
  put_be32(f, static_cast<uint32_t>(labels.size()));
  std::vector<unsigned char> buf(labels.size());
  for (size_t i = 0; i < labels.size(); ++i) buf[i] = static_cast<unsigned char>(labels[i]);
  f.write(buf.data(), buf.size());
}

Dataset load_csv_dataset(const std::string& path) {
  FILE* f = std::fopen(path.c_str(), "rb");
  check(f != nullptr, Err::IoError, "cannot open " + path);
  std::vector<float> pixels;
  std::vector<uint32_t> labels;
  size_t width = 0;
  char line[1 << 16];
  bool scaled = false;
  while (std::fgets(line, sizeof(line), f)) {
    std::istringstream is(line);
    std::string field;
    std::vector<float> row;
    while (std::getline(is, field, ',')) {
      if (field.empty() || field == "\n") continue;
      row.push_back(std::strtof(field.c_str(), nullptr));
    }
    if (row.empty()) continue;
    labels.push_back(static_cast<uint32_t>(row[0]));
    if (width == 0) width = row.size() - 1;
    if (width != row.size() - 1) {
      std::fclose(f);
      fail(Err::BadFormat, "ragged CSV row in " + path);
    }
    for (size_t i = 1; i < row.size(); ++i) {
      if (row[i] > 1.0f) scaled = true;
      pixels.push_back(row[i]);
    }
  }
  std::fclose(f);
  check(!labels.empty(), Err::EmptyDataset, "no rows in " + path);
  uint32_t side = static_cast<uint32_t>(std::lround(std::sqrt(static_cast<double>(width))));
  check(static_cast<size_t>(side) * side == width, Err::BadFormat,
        "CSV pixel count is not a square image");
  if (scaled)
    for (float& v : pixels) v /= 255.0f;
  Dataset ds;
  ds.images = Tensor({static_cast<uint32_t>(labels.size()), 1, side, side}, std::move(pixels));
  ds.labels = std::move(labels);
  ds.class_count = 10;
  ds.split = "unspecified";
  ds.validate();
  return ds;
}

}  // namespace fsnn
