#include "moddnn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "moddnn/error.hpp"

namespace moddnn {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  void u32(std::uint32_t v) { bytes(&v, sizeof v); }
  void f64(double v) { bytes(&v, sizeof v); }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& in) : in_(in) {}
  void bytes(void* p, std::size_t n) {
    if (pos_ + n > in_.size()) throw IoError("checkpoint: truncated payload");
    std::memcpy(p, in_.data() + pos_, n);
    pos_ += n;
  }
  std::uint32_t u32() {
    std::uint32_t v;
    bytes(&v, sizeof v);
    return v;
  }
  double f64() {
    double v;
    bytes(&v, sizeof v);
    return v;
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  const std::vector<std::uint8_t>& in_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> serialize_model(const ModDnnModel& model) {
  model.validate();
  Writer w;
  w.bytes("MODD", 4);
  w.u32(kCheckpointVersion);
  w.f64(model.grid.min_deg());
  w.f64(model.grid.max_deg());
  w.f64(model.grid.step_deg());
  w.u32(static_cast<std::uint32_t>(model.unroll_I));
  w.f64(model.scg.mu);
  w.f64(model.scg.epsilon);
  w.u32(static_cast<std::uint32_t>(model.scg.n_cg_max));
  w.f64(model.scg.tol_gamma_cg);
  w.u32(static_cast<std::uint32_t>(model.train_n_cg));
  w.f64(model.lambda_raw);
  w.u32(static_cast<std::uint32_t>(model.calibrator.layers.size()));
  for (const auto& layer : model.calibrator.layers) {
    w.u32(static_cast<std::uint32_t>(layer.out_channels));
    w.u32(static_cast<std::uint32_t>(layer.in_channels));
    w.u32(static_cast<std::uint32_t>(layer.kernel_len));
    w.u32(static_cast<std::uint32_t>(layer.activation));
    w.bytes(layer.kernel.data(), sizeof(double) * static_cast<std::size_t>(layer.kernel.size()));
    w.bytes(layer.bias.data(), sizeof(double) * static_cast<std::size_t>(layer.bias.size()));
  }
  return w.take();
}

ModDnnModel deserialize_model(const std::vector<std::uint8_t>& bytes) {
  Reader r(bytes);
  char magic[4];
  r.bytes(magic, 4);
  if (std::memcmp(magic, "MODD", 4) != 0) throw IoError("checkpoint: bad magic");
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) throw IoError("checkpoint: unsupported version " + std::to_string(version));

  const double gmin = r.f64();
  const double gmax = r.f64();
  const double gstep = r.f64();
  ModDnnModel model;
  try {
    model.grid = AngleGrid(gmin, gmax, gstep);
  } catch (const Error& e) {
    throw IoError(std::string("checkpoint: invalid grid: ") + e.what());
  }
  model.unroll_I = static_cast<int>(r.u32());
  model.scg.mu = r.f64();
  model.scg.epsilon = r.f64();
  model.scg.n_cg_max = static_cast<int>(r.u32());
  model.scg.tol_gamma_cg = r.f64();
  model.train_n_cg = static_cast<int>(r.u32());
  model.lambda_raw = r.f64();
  const std::uint32_t n_layers = r.u32();
  if (n_layers == 0 || n_layers > 64) throw IoError("checkpoint: implausible layer count");
  for (std::uint32_t i = 0; i < n_layers; ++i) {
    ConvLayerParams layer;
    layer.out_channels = static_cast<int>(r.u32());
    layer.in_channels = static_cast<int>(r.u32());
    layer.kernel_len = static_cast<int>(r.u32());
    const std::uint32_t act = r.u32();
    if (act > 1) throw IoError("checkpoint: unknown activation");
    layer.activation = static_cast<Activation>(act);
    if (layer.out_channels <= 0 || layer.in_channels <= 0 || layer.kernel_len <= 0 ||
        layer.out_channels > 4096 || layer.in_channels > 4096 || layer.kernel_len > 4096) {
      throw IoError("checkpoint: implausible layer dimensions");
    }
    layer.kernel.resize(layer.out_channels, static_cast<Eigen::Index>(layer.in_channels) * layer.kernel_len);
    layer.bias.resize(layer.out_channels);
    r.bytes(layer.kernel.data(), sizeof(double) * static_cast<std::size_t>(layer.kernel.size()));
    r.bytes(layer.bias.data(), sizeof(double) * static_cast<std::size_t>(layer.bias.size()));
    model.calibrator.layers.push_back(std::move(layer));
  }
  if (!r.done()) throw IoError("checkpoint: trailing bytes");
  try {
    model.validate();
  } catch (const Error& e) {
    throw IoError(std::string("checkpoint: invalid model: ") + e.what());
  }
  return model;
}

void save_model(const std::string& path, const ModDnnModel& model) {
  const auto bytes = serialize_model(model);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path);
}

ModDnnModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_model(bytes);
}

}  // namespace moddnn
