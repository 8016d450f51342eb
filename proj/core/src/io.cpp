#include "cola/io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>
#include <string>
#include <string_view>

namespace cola {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

namespace {

constexpr std::string_view kFeatureMagic = "COLAFEAT";
constexpr std::string_view kPrototypeMagic = "COLAPROT";
constexpr std::string_view kCheckpointMagic = "COLACKPT";

constexpr std::uint8_t kCkptNormalize = 0x1;
constexpr std::uint8_t kCkptFrozenMean = 0x2;

class ByteWriter {
 public:
  void magic(std::string_view m) { out_.insert(out_.end(), m.begin(), m.end()); }
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u32(std::uint32_t v) { raw(&v, sizeof v); }
  void f32(float v, const char* what) {
    if (!std::isfinite(v)) throw FormatError(out_.size(), std::string("non-finite ") + what + " value");
    raw(&v, sizeof v);
  }
  template <class R>
  void f32s(const R& values, const char* what) {
    for (float v : values) f32(v, what);
  }
  void bytes(std::string_view s) { out_.insert(out_.end(), s.begin(), s.end()); }
  Bytes take() { return std::move(out_); }

 private:
  void raw(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  Bytes out_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::size_t offset() const noexcept { return pos_; }
  std::size_t remaining() const noexcept { return bytes_.size() - pos_; }

  void expect_magic(std::string_view m) {
    need(m.size(), "magic");
    if (std::memcmp(bytes_.data(), m.data(), m.size()) != 0) {
      throw FormatError(0, "bad magic, expected \"" + std::string(m) + "\"");
    }
    pos_ += m.size();
  }
  std::uint8_t u8(const char* what) {
    need(1, what);
    return bytes_[pos_++];
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v;
    std::memcpy(&v, bytes_.data() + pos_, 4);
    pos_ += 4;
    return v;
  }
  float f32(const char* what) {
    need(4, what);
    float v;
    std::memcpy(&v, bytes_.data() + pos_, 4);
    if (!std::isfinite(v)) throw FormatError(pos_, std::string("non-finite ") + what + " value");
    pos_ += 4;
    return v;
  }
  void f32s(std::span<float> out, const char* what) {
    for (float& v : out) v = f32(what);
  }
  std::string_view text(std::size_t n, const char* what) {
    need(n, what);
    std::string_view s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  void require(std::uint64_t n, const char* what) const {
    if (n > remaining()) {
      throw FormatError(bytes_.size(), std::string("truncated ") + what + ": need " + std::to_string(n) +
                                           " bytes, have " + std::to_string(remaining()));
    }
  }
  void finish() const {
    if (pos_ != bytes_.size()) {
      throw FormatError(pos_, std::to_string(bytes_.size() - pos_) + " unexpected trailing bytes");
    }
  }

 private:
  void need(std::size_t n, const char* what) const { require(n, what); }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

struct Header {
  std::uint32_t rows;
  std::uint32_t cols;
  std::uint8_t flag;
};

Header read_header(ByteReader& r, std::string_view magic) {
  r.expect_magic(magic);
  const std::size_t version_at = r.offset();
  const std::uint32_t version = r.u32("version");
  if (version != kFormatVersion) {
    throw FormatError(version_at, "unsupported format version " + std::to_string(version));
  }
  Header h;
  h.rows = r.u32("row count");
  h.cols = r.u32("column count");
  h.flag = r.u8("flag byte");
  return h;
}

void write_header(ByteWriter& w, std::string_view magic, std::size_t rows, std::size_t cols, std::uint8_t flag) {
  if (rows > UINT32_MAX || cols > UINT32_MAX) throw Error(ErrorKind::kFormat, "dimensions exceed u32 range");
  w.magic(magic);
  w.u32(kFormatVersion);
  w.u32(static_cast<std::uint32_t>(rows));
  w.u32(static_cast<std::uint32_t>(cols));
  w.u8(flag);
}

bool valid_utf8(std::string_view s) {
  std::size_t i = 0;
  while (i < s.size()) {
    const auto c = static_cast<unsigned char>(s[i]);
    std::size_t extra = 0;
    if (c < 0x80) extra = 0;
    else if ((c >> 5) == 0x6) extra = 1;
    else if ((c >> 4) == 0xE) extra = 2;
    else if ((c >> 3) == 0x1E) extra = 3;
    else return false;
    if (i + extra >= s.size() && extra > 0) return false;
    for (std::size_t k = 1; k <= extra; ++k) {
      if ((static_cast<unsigned char>(s[i + k]) >> 6) != 0x2) return false;
    }
    i += extra + 1;
  }
  return true;
}

void write_layer(ByteWriter& w, const LinearLayer<float>& layer) {
  w.f32s(layer.weight().values(), "weight");
  w.f32s(layer.bias(), "bias");
}

LinearLayer<float> read_layer(ByteReader& r, std::size_t in, std::size_t out) {
  LinearLayer<float> layer(in, out);
  r.f32s(layer.weight().values(), "weight");
  r.f32s(layer.bias(), "bias");
  return layer;
}

}  // namespace

Bytes encode_features(const FeatureSet& set) {
  const Matrix& m = set.features;
  if (set.labels && set.labels->size() != m.rows()) {
    throw Error(ErrorKind::kShape, "label count does not match feature rows");
  }
  ByteWriter w;
  write_header(w, kFeatureMagic, m.rows(), m.cols(), set.labels ? 1 : 0);
  w.f32s(m.values(), "feature");
  if (set.labels) {
    for (std::size_t label : *set.labels) {
      if (label > UINT32_MAX) throw Error(ErrorKind::kFormat, "label exceeds u32 range");
      w.u32(static_cast<std::uint32_t>(label));
    }
  }
  return w.take();
}

FeatureSet decode_features(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  const Header h = read_header(r, kFeatureMagic);
  if (h.flag > 1) throw FormatError(20, "label flag must be 0 or 1");
  const std::uint64_t n = h.rows;
  const std::uint64_t d = h.cols;
  r.require(4 * n * d + 4 * n * h.flag, "feature payload");

  FeatureSet set;
  set.features = Matrix(n, d);
  r.f32s(set.features.values(), "feature");
  if (h.flag == 1) {
    std::vector<std::size_t> labels(n);
    for (auto& label : labels) label = r.u32("label");
    set.labels = std::move(labels);
  }
  r.finish();
  return set;
}

Bytes encode_prototypes(const ClassPrototypes& protos) {
  ByteWriter w;
  const Matrix& m = protos.embeddings();
  write_header(w, kPrototypeMagic, m.rows(), m.cols(), 1);
  w.f32s(m.values(), "prototype");
  for (const auto& name : protos.class_names()) {
    if (name.size() > UINT32_MAX) throw Error(ErrorKind::kFormat, "class name too long");
    w.u32(static_cast<std::uint32_t>(name.size()));
    w.bytes(name);
  }
  return w.take();
}

ClassPrototypes decode_prototypes(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  const Header h = read_header(r, kPrototypeMagic);
  if (h.flag != 1) throw FormatError(20, "prototype files must carry class names (flag 1)");
  if (h.rows < 2) throw FormatError(12, "prototype files need at least two classes");
  const std::uint64_t c = h.rows;
  const std::uint64_t d = h.cols;
  r.require(4 * c * d, "prototype payload");

  const std::size_t payload_at = r.offset();
  Matrix m(c, d);
  r.f32s(m.values(), "prototype");
  for (std::size_t k = 0; k < c; ++k) {
    double sq = 0.0;
    for (float v : m.row(k)) sq += static_cast<double>(v) * v;
    const double norm = std::sqrt(sq);
    if (!(std::abs(norm - 1.0) <= 1e-4)) {
      throw FormatError(payload_at + 4 * k * d,
                        "prototype row " + std::to_string(k) + " has norm " + std::to_string(norm) + ", expected 1");
    }
  }

  std::vector<std::string> names;
  std::set<std::string> seen;
  for (std::size_t k = 0; k < c; ++k) {
    const std::size_t at = r.offset();
    const std::uint32_t len = r.u32("class name length");
    std::string name(r.text(len, "class name"));
    if (!valid_utf8(name)) throw FormatError(at, "class name " + std::to_string(k) + " is not valid UTF-8");
    if (!seen.insert(name).second) throw FormatError(at, "duplicate class name '" + name + "'");
    names.push_back(std::move(name));
  }
  r.finish();
  return ClassPrototypes(std::move(names), std::move(m), 1e-4);
}

Bytes encode_checkpoint(const CamParameters<float>& p) {
  ByteWriter w;
  std::uint8_t flags = 0;
  if (p.normalize_output) flags |= kCkptNormalize;
  if (p.frozen_mean) flags |= kCkptFrozenMean;
  write_header(w, kCheckpointMagic, p.dim(), p.hidden_dim(), flags);
  w.u32(static_cast<std::uint32_t>(p.cau_depth()));
  w.u8(static_cast<std::uint8_t>(p.mode));
  w.f32(p.alpha, "alpha");
  w.f32(p.beta, "beta");
  w.f32(p.gamma, "gamma");
  w.f32(p.lambda, "lambda");
  for (const auto& layer : p.adapter) write_layer(w, layer);
  for (const auto& layer : p.cau_mlp) write_layer(w, layer);
  if (p.frozen_mean) {
    if (p.frozen_mean->size() != p.dim()) throw Error(ErrorKind::kShape, "stored mean has the wrong dimension");
    w.f32s(*p.frozen_mean, "frozen mean");
  }
  return w.take();
}

CamParameters<float> decode_checkpoint(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  const Header h = read_header(r, kCheckpointMagic);
  if (h.flag & ~(kCkptNormalize | kCkptFrozenMean)) throw FormatError(20, "unknown checkpoint flag bits");
  if (h.rows == 0 || h.cols == 0) throw FormatError(12, "checkpoint dimensions must be positive");
  const std::size_t depth_at = r.offset();
  const std::uint32_t depth = r.u32("CAU depth");
  if (depth < 2 || depth > 4) throw FormatError(depth_at, "CAU depth must be between 2 and 4");
  const std::size_t mode_at = r.offset();
  const std::uint8_t mode = r.u8("inference mode");
  if (mode > 1) throw FormatError(mode_at, "unknown inference mode " + std::to_string(mode));

  const std::uint64_t d = h.rows;
  const std::uint64_t hid = h.cols;
  // Both the adapter and the CAU MLP are d -> hid (-> hid)* -> d.
  const std::uint64_t bottleneck = (d * hid + hid) + (hid * d + d);
  const std::uint64_t floats =
      4 + 2 * bottleneck + (depth - 2) * (hid * hid + hid) + ((h.flag & kCkptFrozenMean) ? d : 0);
  r.require(4 * floats, "checkpoint payload");

  CamParameters<float> p;
  p.normalize_output = (h.flag & kCkptNormalize) != 0;
  p.mode = static_cast<MeanMode>(mode);
  p.alpha = r.f32("alpha");
  p.beta = r.f32("beta");
  p.gamma = r.f32("gamma");
  p.lambda = r.f32("lambda");
  p.adapter[0] = read_layer(r, d, hid);
  p.adapter[1] = read_layer(r, hid, d);
  for (std::uint32_t layer = 0; layer < depth; ++layer) {
    const std::size_t in = layer == 0 ? d : hid;
    const std::size_t out = layer + 1 == depth ? d : hid;
    p.cau_mlp.push_back(read_layer(r, in, out));
  }
  if (h.flag & kCkptFrozenMean) {
    std::vector<float> mean(d);
    r.f32s(mean, "frozen mean");
    p.frozen_mean = std::move(mean);
  }
  r.finish();
  return p;
}

Bytes read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open '" + path.string() + "' for reading");
  Bytes bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(ErrorKind::kIo, "read failed for '" + path.string() + "'");
  return bytes;
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::kIo, "cannot open '" + tmp.string() + "' for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorKind::kIo, "write failed for '" + tmp.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorKind::kIo, "cannot move output into '" + path.string() + "': " + ec.message());
}

}  // namespace cola
