#include <cstring>
#include <fstream>
#include <stdexcept>

#include "nt/tree.hpp"

// Model file layout (version 1, little-endian):
//   magic "NTM1", u8 version, u8 depth, u8 num_classes, u8 spec_count,
//   u16 node_count, u8 band_count,
//   band records:  u8 name_len, name bytes, f64 lo_hz, f64 hi_hz
//   spec records:  u8 kind, u8 channel, u8 channel2 (0xFF none),
//                  u8 band index (0xFF none), u8 band2 index
//   node records (array order): u8 flags (bit0 = leaf)
//     leaf:      num_classes x u16 phi (12-bit payload)
//     internal:  u8 n_feat, u8 frac_bits, i16 bias (12-bit payload),
//                u16 left, u16 right, n_feat x u8 feature id,
//                ceil(n_feat*12/8) bytes packed 12-bit weights
// Weights pack low nibble first: w0 -> b0 | (b1 & 0x0F), w1 -> (b1 >> 4) | b2.

namespace nt {

namespace {

constexpr char kMagic[4] = {'N', 'T', 'M', '1'};
constexpr uint8_t kVersion = 1;

struct Writer {
  std::vector<uint8_t> buf;
  void u8(uint8_t v) { buf.push_back(v); }
  void u16(uint16_t v) {
    buf.push_back(uint8_t(v & 0xFF));
    buf.push_back(uint8_t(v >> 8));
  }
  void i16(int16_t v) { u16(uint16_t(v)); }
  void f64(double v) {
    uint64_t bits;
    std::memcpy(&bits, &v, 8);
    for (int i = 0; i < 8; ++i) buf.push_back(uint8_t(bits >> (8 * i)));
  }
  void bytes(const void* p, size_t n) {
    const auto* c = static_cast<const uint8_t*>(p);
    buf.insert(buf.end(), c, c + n);
  }
};

struct Reader {
  std::span<const uint8_t> buf;
  size_t pos = 0;
  void need(size_t n) const {
    if (pos + n > buf.size()) throw std::runtime_error("model file truncated");
  }
  uint8_t u8() {
    need(1);
    return buf[pos++];
  }
  uint16_t u16() {
    need(2);
    uint16_t v = uint16_t(buf[pos]) | uint16_t(uint16_t(buf[pos + 1]) << 8);
    pos += 2;
    return v;
  }
  int16_t i16() { return int16_t(u16()); }
  double f64() {
    need(8);
    uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= uint64_t(buf[pos + size_t(i)]) << (8 * i);
    pos += 8;
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }
  std::string str(size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(buf.data() + pos), n);
    pos += n;
    return s;
  }
};

void pack12(Writer& w, const std::vector<int16_t>& vals) {
  for (size_t i = 0; i + 1 < vals.size(); i += 2) {
    uint16_t a = uint16_t(vals[i]) & 0xFFF;
    uint16_t b = uint16_t(vals[i + 1]) & 0xFFF;
    w.u8(uint8_t(a & 0xFF));
    w.u8(uint8_t(((a >> 8) & 0x0F) | ((b & 0x0F) << 4)));
    w.u8(uint8_t((b >> 4) & 0xFF));
  }
  if (vals.size() % 2 == 1) {
    uint16_t a = uint16_t(vals.back()) & 0xFFF;
    w.u8(uint8_t(a & 0xFF));
    w.u8(uint8_t((a >> 8) & 0x0F));
  }
}

int16_t sext12(uint16_t v) {
  v &= 0xFFF;
  return (v & 0x800) ? int16_t(int(v) - 0x1000) : int16_t(v);
}

std::vector<int16_t> unpack12(Reader& r, size_t count) {
  std::vector<int16_t> out;
  out.reserve(count);
  for (size_t i = 0; i + 1 < count; i += 2) {
    uint8_t b0 = r.u8(), b1 = r.u8(), b2 = r.u8();
    out.push_back(sext12(uint16_t(b0) | uint16_t((b1 & 0x0F) << 8)));
    out.push_back(sext12(uint16_t(b1 >> 4) | uint16_t(uint16_t(b2) << 4)));
  }
  if (count % 2 == 1) {
    uint8_t b0 = r.u8(), b1 = r.u8();
    out.push_back(sext12(uint16_t(b0) | uint16_t((b1 & 0x0F) << 8)));
  }
  return out;
}

uint8_t band_index(const NeuralTreeModel& m, const std::string& name) {
  if (name.empty()) return 0xFF;
  for (size_t i = 0; i < m.bands.size(); ++i)
    if (m.bands[i].name == name) return uint8_t(i);
  throw std::invalid_argument("spec references unknown band: " + name);
}

}  // namespace

std::vector<uint8_t> serialize_model(const NeuralTreeModel& m) {
  if (!m.quantized) throw std::invalid_argument("serialize requires a quantized model");
  m.validate();
  if (m.feature_specs.size() > 255 || m.bands.size() > 254 || m.nodes.size() > 65535 ||
      m.num_classes > 255 || m.depth > 255)
    throw std::invalid_argument("model exceeds file format limits");

  Writer w;
  w.bytes(kMagic, 4);
  w.u8(kVersion);
  w.u8(uint8_t(m.depth));
  w.u8(uint8_t(m.num_classes));
  w.u8(uint8_t(m.feature_specs.size()));
  w.u16(uint16_t(m.nodes.size()));
  w.u8(uint8_t(m.bands.size()));
  for (const auto& b : m.bands) {
    if (b.name.size() > 255) throw std::invalid_argument("band name too long");
    w.u8(uint8_t(b.name.size()));
    w.bytes(b.name.data(), b.name.size());
    w.f64(b.lo_hz);
    w.f64(b.hi_hz);
  }
  for (const auto& s : m.feature_specs) {
    if (s.channel > 254 || (s.channel2 && *s.channel2 > 254))
      throw std::invalid_argument("channel id exceeds file format limit (254)");
    w.u8(uint8_t(s.kind));
    w.u8(uint8_t(s.channel));
    w.u8(s.channel2 ? uint8_t(*s.channel2) : 0xFF);
    w.u8(band_index(m, s.band));
    w.u8(band_index(m, s.band2));
  }
  for (const auto& n : m.nodes) {
    w.u8(n.is_leaf ? 0x01 : 0x00);
    if (n.is_leaf) {
      if (n.phi_q.size() != size_t(m.num_classes))
        throw std::invalid_argument("leaf missing quantized distribution");
      for (uint16_t q : n.phi_q) w.u16(q);
    } else {
      if (!n.quant) throw std::invalid_argument("internal node missing quantization");
      w.u8(uint8_t(n.feature_ids.size()));
      w.u8(n.quant->frac_bits);
      w.i16(n.quant->bias_q);
      w.u16(uint16_t(n.left));
      w.u16(uint16_t(n.right));
      for (int id : n.feature_ids) w.u8(uint8_t(id));
      pack12(w, n.quant->weights_q);
    }
  }
  return std::move(w.buf);
}

NeuralTreeModel deserialize_model(std::span<const uint8_t> bytes) {
  Reader r{bytes, 0};
  r.need(4);
  if (std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw std::runtime_error("not a model file (bad magic)");
  r.pos = 4;
  uint8_t version = r.u8();
  if (version != kVersion)
    throw std::runtime_error("unsupported model version " + std::to_string(version));

  NeuralTreeModel m;
  m.depth = r.u8();
  m.num_classes = r.u8();
  size_t spec_count = r.u8();
  size_t node_count = r.u16();
  size_t band_count = r.u8();
  for (size_t i = 0; i < band_count; ++i) {
    Band b;
    size_t len = r.u8();
    b.name = r.str(len);
    b.lo_hz = r.f64();
    b.hi_hz = r.f64();
    m.bands.push_back(std::move(b));
  }
  for (size_t i = 0; i < spec_count; ++i) {
    FeatureSpec s;
    s.kind = FeatureKind(r.u8());
    s.channel = r.u8();
    uint8_t ch2 = r.u8();
    if (ch2 != 0xFF) s.channel2 = ch2;
    uint8_t b1 = r.u8(), b2 = r.u8();
    auto band_name = [&](uint8_t idx) -> std::string {
      if (idx == 0xFF) return "";
      if (idx >= m.bands.size()) throw std::runtime_error("spec references missing band");
      return m.bands[idx].name;
    };
    s.band = band_name(b1);
    s.band2 = band_name(b2);
    s.validate();
    m.feature_specs.push_back(std::move(s));
  }
  for (size_t i = 0; i < node_count; ++i) {
    TreeNode n;
    uint8_t flags = r.u8();
    n.is_leaf = (flags & 0x01) != 0;
    if (n.is_leaf) {
      n.phi_q.resize(size_t(m.num_classes));
      n.phi.resize(size_t(m.num_classes));
      for (int k = 0; k < m.num_classes; ++k) {
        n.phi_q[size_t(k)] = r.u16();
        n.phi[size_t(k)] = double(n.phi_q[size_t(k)]) / 4096.0;
      }
    } else {
      size_t nf = r.u8();
      QuantizedNode q;
      q.frac_bits = r.u8();
      q.bias_q = r.i16();
      n.left = r.u16();
      n.right = r.u16();
      n.feature_ids.resize(nf);
      for (size_t j = 0; j < nf; ++j) {
        uint8_t id = r.u8();
        if (id >= spec_count) throw std::runtime_error("feature id out of range");
        n.feature_ids[j] = id;
      }
      q.weights_q = unpack12(r, nf);
      n.weights.resize(nf);
      for (size_t j = 0; j < nf; ++j)
        n.weights[j] = std::ldexp(double(q.weights_q[j]), -int(q.frac_bits));
      n.bias = std::ldexp(double(q.bias_q), -int(q.frac_bits));
      n.quant = std::move(q);
    }
    m.nodes.push_back(std::move(n));
  }
  if (r.pos != bytes.size()) throw std::runtime_error("trailing bytes in model file");
  m.quantized = true;
  m.validate();
  return m;
}

void save_model(const NeuralTreeModel& m, const std::string& path) {
  auto bytes = serialize_model(m);
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  os.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
  if (!os) throw std::runtime_error("write failed: " + path);
}

NeuralTreeModel load_model(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open: " + path);
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(is)),
                             std::istreambuf_iterator<char>());
  return deserialize_model(bytes);
}

}  // namespace nt
