#include <array>
#include <bit>
#include <cstdint>
#include <fstream>
#include <span>
#include <stdexcept>

#include "aqs/train.hpp"

// Binary checkpoint layout. After the 4-byte magic "AQS1", a 32-bit format
// version and a CRC-32 of every following byte, the body carries: config
// text, lineage, best epoch, feature stats, model dimensions and variant,
// named tensors in traversal order, and the loss history. All integers are
// 32-bit little-endian; floats are IEEE-754 binary64 little-endian. The
// pinned-to-zero candidate recurrence matrix of the paper-literal variant is
// not stored; loading reconstructs it as zeros.

namespace aqs {
namespace {

constexpr char kMagic[4] = {'A', 'Q', 'S', '1'};

std::uint32_t crc32(const std::string& bytes) {
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
  for (unsigned char b : bytes) crc = table[(crc ^ b) & 0xFFu] ^ (crc >> 8);
  return crc ^ 0xFFFFFFFFu;
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_f64(std::string& out, double v) {
  auto bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xFF));
}

void put_str(std::string& out, const std::string& s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  out.append(s);
}

struct Reader {
  const std::string& buf;
  std::size_t pos = 0;

  void need(std::size_t n) const {
    if (pos + n > buf.size()) throw std::runtime_error("truncated checkpoint");
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
    pos += 4;
    return v;
  }
  double f64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
    pos += 8;
    return std::bit_cast<double>(v);
  }
  std::string str() {
    const std::uint32_t len = u32();
    need(len);
    std::string s = buf.substr(pos, len);
    pos += len;
    return s;
  }
};

LstmParams zero_cell(std::size_t input, std::size_t hidden) {
  LstmParams p;
  p.w_xi = Matrix(hidden, input);
  p.w_hi = Matrix(hidden, hidden);
  p.b_i = Matrix(hidden, 1);
  p.w_xf = Matrix(hidden, input);
  p.w_hf = Matrix(hidden, hidden);
  p.b_f = Matrix(hidden, 1);
  p.w_xo = Matrix(hidden, input);
  p.w_ho = Matrix(hidden, hidden);
  p.b_o = Matrix(hidden, 1);
  p.w_xg = Matrix(hidden, input);
  p.w_hg = Matrix(hidden, hidden);
  p.b_g = Matrix(hidden, 1);
  return p;
}

Seq2SeqModel model_skeleton(const ModelDims& dims, CellVariant variant) {
  Seq2SeqModel m;
  m.dims = dims;
  m.variant = variant;
  for (std::size_t l = 0; l < dims.depth; ++l) {
    m.encoder.push_back(zero_cell(l == 0 ? dims.input : dims.hidden, dims.hidden));
    m.decoder.push_back(zero_cell(l == 0 ? 1 + dims.hidden : dims.hidden, dims.hidden));
  }
  m.w_out = Matrix(1, dims.hidden);
  m.b_out = Matrix(1, 1);
  return m;
}

}  // namespace

void save_checkpoint(const Checkpoint& ck, const std::string& path) {
  std::string body;
  put_str(body, config_text(ck.config));
  put_str(body, ck.lineage);
  put_u32(body, ck.best_epoch);

  put_u32(body, static_cast<std::uint32_t>(ck.features.numeric_names.size()));
  for (std::size_t i = 0; i < ck.features.numeric_names.size(); ++i) {
    put_str(body, ck.features.numeric_names[i]);
    put_f64(body, ck.features.stats.at(i).mean);
    put_f64(body, ck.features.stats.at(i).stddev);
  }

  const ModelDims& d = ck.model.dims;
  put_u32(body, static_cast<std::uint32_t>(d.input));
  put_u32(body, static_cast<std::uint32_t>(d.hidden));
  put_u32(body, static_cast<std::uint32_t>(d.depth));
  put_u32(body, static_cast<std::uint32_t>(d.t_enc));
  put_u32(body, static_cast<std::uint32_t>(d.horizon));
  put_str(body, to_string(ck.model.variant));

  put_u32(body, static_cast<std::uint32_t>(param_census(ck.model)));
  for_each_param(ck.model, [&](const std::string& name, const Matrix& tensor) {
    put_str(body, name);
    put_u32(body, static_cast<std::uint32_t>(tensor.rows()));
    put_u32(body, static_cast<std::uint32_t>(tensor.cols()));
    for (double v : tensor.values()) put_f64(body, v);
  });

  put_u32(body, static_cast<std::uint32_t>(ck.history.size()));
  for (const EpochStats& e : ck.history) {
    put_f64(body, e.train_loss);
    put_f64(body, e.val_loss);
  }

  std::string file;
  file.append(kMagic, 4);
  put_u32(file, kCheckpointVersion);
  put_u32(file, crc32(body));
  file.append(body);

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_checkpoint: cannot open " + path);
  out.write(file.data(), static_cast<std::streamsize>(file.size()));
  if (!out) throw std::runtime_error("save_checkpoint: write failed for " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_checkpoint: cannot open " + path);
  std::string file((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  if (file.size() < 12 || file.compare(0, 4, kMagic, 4) != 0)
    throw std::runtime_error("load_checkpoint: " + path + " is not a checkpoint file (bad magic)");

  Reader head{file, 4};
  const std::uint32_t version = head.u32();
  if (version != kCheckpointVersion)
    throw std::runtime_error("load_checkpoint: checkpoint format version " +
                             std::to_string(version) + " not supported (expected " +
                             std::to_string(kCheckpointVersion) + ")");
  const std::uint32_t stored_crc = head.u32();
  const std::string body = file.substr(12);
  if (crc32(body) != stored_crc)
    throw std::runtime_error("load_checkpoint: " + path +
                             " is corrupt (checksum mismatch)");

  Reader r{body, 0};
  Checkpoint ck;
  ck.config = config_from_text(r.str());
  ck.lineage = r.str();
  ck.best_epoch = r.u32();

  const std::uint32_t n_features = r.u32();
  for (std::uint32_t i = 0; i < n_features; ++i) {
    ck.features.numeric_names.push_back(r.str());
    FeatureStats st;
    st.mean = r.f64();
    st.stddev = r.f64();
    ck.features.stats.push_back(st);
  }

  ModelDims dims;
  dims.input = r.u32();
  dims.hidden = r.u32();
  dims.depth = r.u32();
  dims.t_enc = r.u32();
  dims.horizon = r.u32();
  CellVariant variant = cell_variant_from_string(r.str());
  ck.model = model_skeleton(dims, variant);

  const std::uint32_t n_tensors = r.u32();
  std::size_t seen = 0;
  for_each_param(ck.model, [&](const std::string& name, Matrix& tensor) {
    ++seen;
    const std::string found = r.str();
    if (found != name)
      throw std::runtime_error("load_checkpoint: tensor mismatch, expected '" + name +
                               "', found '" + found + "'");
    const std::uint32_t rows = r.u32(), cols = r.u32();
    if (rows != tensor.rows() || cols != tensor.cols())
      throw std::runtime_error("load_checkpoint: tensor '" + name + "' has shape " +
                               std::to_string(rows) + "x" + std::to_string(cols) +
                               ", expected " + tensor.shape());
    for (double& v : std::span<double>(tensor.data(), tensor.size())) v = r.f64();
  });
  if (seen != n_tensors)
    throw std::runtime_error("load_checkpoint: expected " + std::to_string(seen) +
                             " tensors, file declares " + std::to_string(n_tensors));

  const std::uint32_t n_history = r.u32();
  for (std::uint32_t i = 0; i < n_history; ++i) {
    EpochStats e;
    e.train_loss = r.f64();
    e.val_loss = r.f64();
    ck.history.push_back(e);
  }
  return ck;
}

}  // namespace aqs
