#include "backdiff/checkpoint.hpp"

#include <bit>
#include <cmath>
#include <cstring>

#include "backdiff/error.hpp"
#include "backdiff/io.hpp"

namespace backdiff {

namespace {

constexpr std::string_view kMagic = "DGDMB1";
constexpr std::uint32_t kVersion = 1;

class Writer {
 public:
  void bytes(std::string_view s) { buf_.append(s); }
  void u32(std::uint32_t v) {
    for (int k = 0; k < 4; ++k) buf_.push_back(static_cast<char>((v >> (8 * k)) & 0xff));
  }
  void u64(std::uint64_t v) {
    for (int k = 0; k < 8; ++k) buf_.push_back(static_cast<char>((v >> (8 * k)) & 0xff));
  }
  void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void str(std::string_view s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes(s);
  }
  void vec(const Eigen::VectorXd& v) {
    u32(static_cast<std::uint32_t>(v.size()));
    for (Eigen::Index k = 0; k < v.size(); ++k) f64(v[k]);
  }
  std::string& buffer() { return buf_; }

 private:
  std::string buf_;
};

class Reader {
 public:
  explicit Reader(std::string_view b) : b_(b) {}

  std::string_view take(std::size_t n) {
    if (n > b_.size() - pos_) throw Error(ErrorCode::BadCheckpoint, "checkpoint truncated");
    const auto out = b_.substr(pos_, n);
    pos_ += n;
    return out;
  }
  std::uint32_t u32() {
    const auto s = take(4);
    std::uint32_t v = 0;
    for (int k = 0; k < 4; ++k) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(s[k])) << (8 * k);
    return v;
  }
  std::uint64_t u64() {
    const auto s = take(8);
    std::uint64_t v = 0;
    for (int k = 0; k < 8; ++k) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(s[k])) << (8 * k);
    return v;
  }
  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
  double f64() { return std::bit_cast<double>(u64()); }
  float f32() { return std::bit_cast<float>(u32()); }
  std::string str() {
    const std::uint32_t n = u32();
    return std::string(take(n));
  }
  std::uint32_t count(std::uint32_t limit) {
    const std::uint32_t n = u32();
    if (n > limit) throw Error(ErrorCode::BadCheckpoint, "implausible count in checkpoint");
    return n;
  }
  Eigen::VectorXd vec() {
    const std::uint32_t n = count(1u << 16);
    Eigen::VectorXd v(n);
    for (std::uint32_t k = 0; k < n; ++k) v[k] = f64();
    return v;
  }
  bool done() const { return pos_ == b_.size(); }

 private:
  std::string_view b_;
  std::size_t pos_ = 0;
};

void write_limits(Writer& w, const LimitDistributions& l) {
  w.f64(l.mix_ratio);
  w.vec(l.node);
  w.vec(l.edge);
  w.vec(l.node_backdoored);
  w.vec(l.edge_backdoored);
}

LimitDistributions read_limits(Reader& r) {
  LimitDistributions l;
  l.mix_ratio = r.f64();
  l.node = r.vec();
  l.edge = r.vec();
  l.node_backdoored = r.vec();
  l.edge_backdoored = r.vec();
  return l;
}

}  // namespace

std::string serialize_checkpoint(const Checkpoint& ck) {
  Writer w;
  w.bytes(kMagic);
  w.u32(kVersion);
  w.str(ck.config.canonical_text());

  w.u32(static_cast<std::uint32_t>(ck.setup.schedule.steps()));
  for (double a : ck.setup.schedule.alphas()) w.f64(a);
  write_limits(w, ck.setup.limits);
  w.u32(static_cast<std::uint32_t>(ck.setup.per_size.size()));
  for (const auto& [n, l] : ck.setup.per_size) {
    w.i32(n);
    write_limits(w, l);
  }

  const Graph& f = ck.setup.trigger.fragment;
  w.i32(f.n());
  w.i32(f.node_types());
  w.i32(f.edge_types());
  for (auto v : f.node_span()) w.bytes(std::string_view(reinterpret_cast<const char*>(&v), 1));
  for (auto v : f.edge_span()) w.bytes(std::string_view(reinterpret_cast<const char*>(&v), 1));
  w.i32(ck.setup.trigger.connector_edges);
  w.i32(ck.setup.trigger.connector_type);

  w.u32(static_cast<std::uint32_t>(ck.sizes.probability.size()));
  for (double p : ck.sizes.probability) w.f64(p);

  const DenoiserDims& d = ck.model.dims();
  for (int v : {d.node_types, d.edge_types, d.hidden_node, d.hidden_edge, d.hidden_global, d.layers, d.max_nodes}) {
    w.i32(v);
  }
  w.u32(static_cast<std::uint32_t>(ck.model.tensors().size()));
  for (const auto& t : ck.model.tensors()) {
    w.str(t.name);
    w.u32(static_cast<std::uint32_t>(t.value.rows()));
    w.u32(static_cast<std::uint32_t>(t.value.cols()));
    for (Eigen::Index i = 0; i < t.value.rows(); ++i) {
      for (Eigen::Index j = 0; j < t.value.cols(); ++j) {
        const double v = t.value(i, j);
        const auto f32v = static_cast<float>(v);
        if (static_cast<double>(f32v) != v && std::isfinite(v)) {
          throw Error(ErrorCode::BadCheckpoint, "tensor '" + t.name + "' is not float-representable");
        }
        w.f32(f32v);
      }
    }
  }
  const std::uint64_t sum = fnv1a64(w.buffer());
  w.u64(sum);
  return std::move(w.buffer());
}

std::uint64_t checkpoint_checksum(std::string_view bytes) {
  if (bytes.size() < kMagic.size() + 8) throw Error(ErrorCode::BadCheckpoint, "checkpoint truncated");
  Reader r(bytes.substr(bytes.size() - 8));
  return r.u64();
}

Checkpoint deserialize_checkpoint(std::string_view bytes) {
  if (bytes.size() < kMagic.size() + 12 || bytes.substr(0, kMagic.size()) != kMagic) {
    throw Error(ErrorCode::BadCheckpoint, "missing DGDMB1 magic");
  }
  const std::string_view body = bytes.substr(0, bytes.size() - 8);
  if (fnv1a64(body) != checkpoint_checksum(bytes)) throw Error(ErrorCode::BadCheckpoint, "checksum mismatch");

  Reader r(body);
  r.take(kMagic.size());
  if (r.u32() != kVersion) throw Error(ErrorCode::BadCheckpoint, "unsupported checkpoint version");
  Checkpoint ck;
  try {
    ck.config = parse_config(r.str());
  } catch (const Error& e) {
    throw Error(ErrorCode::BadCheckpoint, std::string("config: ") + e.what());
  }

  const std::uint32_t steps = r.count(1u << 20);
  std::vector<double> alphas(steps);
  for (auto& a : alphas) a = r.f64();
  try {
    ck.setup.schedule = NoiseSchedule(std::move(alphas));
    ck.setup.limits = read_limits(r);
    ck.setup.limits.validate();
    const std::uint32_t sizes = r.count(4096);
    for (std::uint32_t k = 0; k < sizes; ++k) {
      const int n = r.i32();
      ck.setup.per_size[n] = read_limits(r);
      ck.setup.per_size[n].validate();
    }

    const int fn = r.i32();
    const int fa = r.i32();
    const int fd = r.i32();
    if (fn < 0 || fn > 256 || fa < 1 || fa > 255 || fd < 1 || fd > 255) {
      throw Error(ErrorCode::BadCheckpoint, "bad trigger header");
    }
    Graph frag(fn, fa, fd);
    const auto nodes = r.take(static_cast<std::size_t>(fn));
    const auto edges = r.take(static_cast<std::size_t>(fn) * static_cast<std::size_t>(fn));
    for (int i = 0; i < fn; ++i) frag.set_node(i, static_cast<unsigned char>(nodes[static_cast<std::size_t>(i)]));
    for (int i = 0; i < fn; ++i) {
      for (int j = i + 1; j < fn; ++j) {
        const int e = static_cast<unsigned char>(edges[pair_index(i, j, fn)]);
        if (e != static_cast<unsigned char>(edges[pair_index(j, i, fn)])) {
          throw Error(ErrorCode::BadCheckpoint, "asymmetric trigger");
        }
        frag.set_edge(i, j, e);
      }
    }
    ck.setup.trigger.fragment = std::move(frag);
    ck.setup.trigger.connector_edges = r.i32();
    ck.setup.trigger.connector_type = r.i32();

    const std::uint32_t hist = r.count(1u << 16);
    ck.sizes.probability.resize(hist);
    for (auto& p : ck.sizes.probability) p = r.f64();
    ck.sizes.validate();

    DenoiserDims d;
    d.node_types = r.i32();
    d.edge_types = r.i32();
    d.hidden_node = r.i32();
    d.hidden_edge = r.i32();
    d.hidden_global = r.i32();
    d.layers = r.i32();
    d.max_nodes = r.i32();
    d.validate();
    if (d.hidden_node > 4096 || d.hidden_edge > 4096 || d.hidden_global > 4096 || d.layers > 256) {
      throw Error(ErrorCode::BadCheckpoint, "implausible model dimensions");
    }

    const std::uint32_t nt = r.count(1u << 16);
    std::vector<NamedTensor> tensors;
    for (std::uint32_t k = 0; k < nt; ++k) {
      NamedTensor t;
      t.name = r.str();
      const std::uint32_t rows = r.count(1u << 16);
      const std::uint32_t cols = r.count(1u << 16);
      if (static_cast<std::uint64_t>(rows) * cols * 4 > body.size()) {
        throw Error(ErrorCode::BadCheckpoint, "tensor larger than the file");
      }
      t.value.resize(rows, cols);
      for (std::uint32_t i = 0; i < rows; ++i)
        for (std::uint32_t j = 0; j < cols; ++j) t.value(i, j) = static_cast<double>(r.f32());
      tensors.push_back(std::move(t));
    }
    if (!r.done()) throw Error(ErrorCode::BadCheckpoint, "trailing bytes before checksum");
    ck.model = DenoiserModel(d, 0);
    ck.model.load_tensors(std::move(tensors));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::BadCheckpoint) throw;
    throw Error(ErrorCode::BadCheckpoint, e.what());
  }
  return ck;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck) {
  write_file_atomic(path, serialize_checkpoint(ck));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) { return deserialize_checkpoint(read_file(path)); }

}  // namespace backdiff
