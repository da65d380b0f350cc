#include "rmesn/model_io.hpp"

#include "rmesn/error.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>
#include <string>

namespace rmesn {

namespace {

constexpr char kMagic[8] = {'R', 'M', 'E', 'S', 'N', 'M', 'D', 'L'};
constexpr std::uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little, "model files assume a little-endian host");

class Writer {
 public:
  void raw(const void* data, std::size_t n) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    bytes.insert(bytes.end(), p, p + n);
  }
  void u8(std::uint8_t v) { bytes.push_back(v); }
  void u32(std::uint32_t v) { raw(&v, sizeof v); }
  void u64(std::uint64_t v) { raw(&v, sizeof v); }
  void f64(double v) { raw(&v, sizeof v); }
  void str(const std::string& s) {
    u64(s.size());
    raw(s.data(), s.size());
  }
  void vec(const Vector& v) {
    u64(static_cast<std::uint64_t>(v.size()));
    raw(v.data(), static_cast<std::size_t>(v.size()) * sizeof(double));
  }
  /// Shape then column-major values.
  void mat(const Matrix& m) {
    u64(static_cast<std::uint64_t>(m.rows()));
    u64(static_cast<std::uint64_t>(m.cols()));
    raw(m.data(), static_cast<std::size_t>(m.size()) * sizeof(double));
  }
  void section(const char (&tag)[5], const Writer& body) {
    raw(tag, 4);
    u64(body.bytes.size());
    raw(body.bytes.data(), body.bytes.size());
  }

  std::vector<std::uint8_t> bytes;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> data) : data_(data) {}

  void raw(void* out, std::size_t n) {
    if (n > remaining()) fail("truncated data");
    std::memcpy(out, data_.data() + pos_, n);
    pos_ += n;
  }
  std::uint8_t u8() {
    std::uint8_t v;
    raw(&v, 1);
    return v;
  }
  std::uint32_t u32() {
    std::uint32_t v;
    raw(&v, sizeof v);
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v;
    raw(&v, sizeof v);
    return v;
  }
  double f64() {
    double v;
    raw(&v, sizeof v);
    return v;
  }
  std::size_t count(std::size_t item_size) {
    const auto n = u64();
    if (item_size > 0 && n > remaining() / item_size) fail("length field exceeds the data");
    return static_cast<std::size_t>(n);
  }
  std::string str() {
    std::string s(count(1), '\0');
    raw(s.data(), s.size());
    return s;
  }
  Vector vec() {
    Vector v(static_cast<Eigen::Index>(count(sizeof(double))));
    raw(v.data(), static_cast<std::size_t>(v.size()) * sizeof(double));
    return v;
  }
  Matrix mat() {
    const auto rows = u64();
    const auto cols = u64();
    if (cols != 0 && rows > remaining() / sizeof(double) / cols) fail("matrix shape exceeds the data");
    Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    raw(m.data(), static_cast<std::size_t>(m.size()) * sizeof(double));
    return m;
  }
  std::size_t remaining() const noexcept { return data_.size() - pos_; }
  std::span<const std::uint8_t> take(std::size_t n) {
    if (n > remaining()) fail("truncated section");
    auto out = data_.subspan(pos_, n);
    pos_ += n;
    return out;
  }
  void expect_end() const {
    if (remaining() != 0) fail("trailing bytes in section");
  }
  [[noreturn]] void fail(const std::string& what) const {
    throw InvalidInput("model file: " + what + " at byte " + std::to_string(pos_));
  }

 private:
  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
};

void write_layer(Writer& w, const DenseLayer& layer) {
  w.u64(layer.pieces);
  w.mat(layer.weights);
  w.vec(layer.bias);
}

DenseLayer read_layer(Reader& r) {
  DenseLayer layer;
  layer.pieces = static_cast<std::size_t>(r.u64());
  layer.weights = r.mat();
  layer.bias = r.vec();
  return layer;
}

}  // namespace

std::vector<std::uint8_t> serialize_model(const FittedModel& model) {
  if (!model.reservoir) throw InvalidArgument("cannot serialize a model without a reservoir");
  Writer out;
  out.raw(kMagic, sizeof kMagic);
  out.u32(kVersion);

  Writer conf;
  conf.str(config_to_string(model.config));
  out.section("CONF", conf);

  Writer head;
  head.u64(model.feature_dim);
  head.u64(model.classes);
  head.u64(model.class_names.size());
  for (const auto& name : model.class_names) head.str(name);
  out.section("HEAD", head);

  if (model.normalization) {
    Writer norm;
    norm.vec(model.normalization->mean);
    norm.vec(model.normalization->std);
    out.section("NORM", norm);
  }

  Writer resv;
  resv.mat(model.reservoir->w_in());
  const auto& w_r = model.reservoir->w_r();
  resv.u64(w_r.rows());
  resv.u64(w_r.cols());
  const auto triplets = w_r.triplets();
  resv.u64(triplets.size());
  for (const auto& t : triplets) {
    resv.u64(t.row);
    resv.u64(t.col);
    resv.f64(t.value);
  }
  out.section("RESV", resv);

  if (model.projection) {
    const auto& p = *model.projection;
    Writer proj;
    proj.u8(p.mode == CovarianceMode::Flattened ? 0 : 1);
    proj.u8(p.centered ? 1 : 0);
    proj.u64(p.fitted_feature_dim);
    proj.mat(p.basis);
    proj.vec(p.eigenvalues);
    proj.vec(p.mean);
    out.section("PROJ", proj);
  }

  Writer rdot;
  if (model.config.readout == ReadoutKind::Ridge) {
    rdot.u8(0);
    rdot.f64(model.ridge.lambda);
    rdot.mat(model.ridge.weights);
    rdot.vec(model.ridge.bias);
  } else {
    rdot.u8(1);
    rdot.u64(model.mlp.layers().size());
    for (const auto& layer : model.mlp.layers()) write_layer(rdot, layer);
  }
  out.section("RDOT", rdot);
  return std::move(out.bytes);
}

FittedModel deserialize_model(std::span<const std::uint8_t> bytes) {
  Reader in(bytes);
  char magic[8];
  in.raw(magic, sizeof magic);
  if (std::memcmp(magic, kMagic, sizeof kMagic) != 0) in.fail("not an rmesn model");
  const auto version = in.u32();
  if (version != kVersion) in.fail("unsupported version " + std::to_string(version));

  std::map<std::string, std::span<const std::uint8_t>> sections;
  while (in.remaining() > 0) {
    char tag[4];
    in.raw(tag, 4);
    const auto len = in.count(1);
    if (!sections.emplace(std::string(tag, 4), in.take(len)).second) in.fail("duplicate section");
  }
  for (const char* required : {"CONF", "HEAD", "RESV", "RDOT"}) {
    if (!sections.count(required)) in.fail(std::string("missing section ") + required);
  }

  FittedModel m;
  {
    Reader r(sections["CONF"]);
    std::istringstream text(r.str());
    r.expect_end();
    m.config = parse_config(text);
  }
  {
    Reader r(sections["HEAD"]);
    m.feature_dim = static_cast<std::size_t>(r.u64());
    m.classes = static_cast<std::size_t>(r.u64());
    const auto names = r.count(8);
    for (std::size_t i = 0; i < names; ++i) m.class_names.push_back(r.str());
    r.expect_end();
  }
  if (auto it = sections.find("NORM"); it != sections.end()) {
    Reader r(it->second);
    ZScoreStats stats;
    stats.mean = r.vec();
    stats.std = r.vec();
    r.expect_end();
    if (static_cast<std::size_t>(stats.mean.size()) != m.feature_dim || stats.std.size() != stats.mean.size()) {
      r.fail("normalization size mismatch");
    }
    m.normalization = std::move(stats);
  }
  {
    Reader r(sections["RESV"]);
    Matrix w_in = r.mat();
    const auto rows = r.u64();
    const auto cols = r.u64();
    const auto nnz = r.count(24);
    std::vector<Triplet> entries(nnz);
    for (auto& t : entries) {
      t.row = static_cast<std::size_t>(r.u64());
      t.col = static_cast<std::size_t>(r.u64());
      t.value = r.f64();
    }
    r.expect_end();
    if (rows != m.config.reservoir.units || cols != rows || static_cast<std::uint64_t>(w_in.rows()) != rows ||
        static_cast<std::size_t>(w_in.cols()) != m.feature_dim) {
      r.fail("reservoir shape does not match the configuration");
    }
    m.reservoir.emplace(m.config.reservoir, std::move(w_in),
                        SparseMatrix(static_cast<std::size_t>(rows), static_cast<std::size_t>(cols), std::move(entries)));
  }
  if (auto it = sections.find("PROJ"); it != sections.end()) {
    Reader r(it->second);
    Projection p;
    p.mode = r.u8() == 0 ? CovarianceMode::Flattened : CovarianceMode::PerSample;
    p.centered = r.u8() != 0;
    p.fitted_feature_dim = static_cast<std::size_t>(r.u64());
    p.basis = r.mat();
    p.eigenvalues = r.vec();
    p.mean = r.vec();
    r.expect_end();
    if (static_cast<std::size_t>(p.basis.rows()) != m.reservoir->state_dim()) {
      r.fail("projection does not match the reservoir");
    }
    m.projection = std::move(p);
  }
  {
    Reader r(sections["RDOT"]);
    const auto kind = r.u8();
    if (kind == 0) {
      if (m.config.readout != ReadoutKind::Ridge) r.fail("readout kind disagrees with the configuration");
      m.ridge.lambda = r.f64();
      m.ridge.weights = r.mat();
      m.ridge.bias = r.vec();
      if (m.ridge.classes() != m.classes || static_cast<std::size_t>(m.ridge.bias.size()) != m.classes) {
        r.fail("ridge readout does not match the class count");
      }
    } else if (kind == 1) {
      if (m.config.readout != ReadoutKind::Mlp) r.fail("readout kind disagrees with the configuration");
      const auto layers = r.count(8);
      std::vector<DenseLayer> stack;
      for (std::size_t i = 0; i < layers; ++i) stack.push_back(read_layer(r));
      m.mlp = MlpReadout(m.config.mlp, std::move(stack));
    } else {
      r.fail("unknown readout kind");
    }
    r.expect_end();
  }
  return m;
}

void save_model(const FittedModel& model, const std::filesystem::path& path) {
  const auto bytes = serialize_model(model);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInput("cannot write '" + path.string() + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw InvalidInput("failed writing '" + path.string() + "'");
}

FittedModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open model '" + path.string() + "'");
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return deserialize_model(bytes);
  } catch (Error& e) {
    e.add_context(path.string());
    throw;
  }
}

}  // namespace rmesn
