#include "moddnn/dataset.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <thread>

#include "moddnn/error.hpp"
#include "moddnn/rng.hpp"

namespace moddnn {

static_assert(std::endian::native == std::endian::little, "dataset I/O assumes a little-endian host");

using nlohmann::json;

namespace {

constexpr std::size_t kRecordPrefix = 3 * sizeof(double) + 2 * sizeof(std::uint32_t);

void put(std::vector<std::uint8_t>& out, const void* p, std::size_t n) {
  const auto* b = static_cast<const std::uint8_t*>(p);
  out.insert(out.end(), b, b + n);
}

class Cursor {
 public:
  Cursor(const std::vector<std::uint8_t>& in, std::size_t pos) : in_(in), pos_(pos) {}
  void get(void* p, std::size_t n) {
    if (pos_ + n > in_.size()) throw IoError("dataset: truncated file");
    std::memcpy(p, in_.data() + pos_, n);
    pos_ += n;
  }
  std::size_t pos() const { return pos_; }

 private:
  const std::vector<std::uint8_t>& in_;
  std::size_t pos_;
};

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) h = (h ^ c) * 0x100000001b3ULL;
  return h;
}

json generating_sections(const RunConfig& cfg) {
  const json full = run_config_to_json(cfg);
  json j;
  for (const char* key : {"grid", "array", "srs", "impairment", "scenario"}) j[key] = full[key];
  return j;
}

}  // namespace

const char* split_name(Split split) {
  switch (split) {
    case Split::Train:
      return "train";
    case Split::Val:
      return "val";
    case Split::All:
      break;
  }
  return "all";
}

Split parse_split(const std::string& name) {
  if (name == "train") return Split::Train;
  if (name == "val") return Split::Val;
  if (name == "all") return Split::All;
  throw ConfigError("unknown split '" + name + "' (train, val, all)");
}

std::size_t Dataset::record_size() const {
  const auto M = static_cast<std::size_t>(config.array.M);
  if (kind == RecordKind::Csi) {
    return kRecordPrefix + static_cast<std::size_t>(config.srs.K) * M * 2 * sizeof(double);
  }
  return kRecordPrefix + M * M * 2 * sizeof(double) + config.grid().size() * sizeof(double);
}

std::pair<int, int> split_symbols(const ScenarioConfig& s, Split split) {
  switch (split) {
    case Split::Train:
      return {0, s.train_symbols};
    case Split::Val:
      return {s.train_symbols, s.train_symbols + s.val_symbols};
    case Split::All:
      break;
  }
  return {0, s.symbols_per_angle};
}

std::size_t planned_record_count(const RunConfig& cfg, Split split) {
  const auto [s0, s1] = split_symbols(cfg.scenario, split);
  return cfg.grid().size() * static_cast<std::size_t>(s1 - s0);
}

std::string config_hash(const RunConfig& cfg) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a(generating_sections(cfg).dump())));
  return buf;
}

Dataset generate_dataset(const RunConfig& cfg, Split split, int threads) {
  cfg.validate();
  const AngleGrid grid = cfg.grid();
  const int M = cfg.array.M;
  const ImpairmentModel model = cfg.impairment.model(M);
  const CoarrayManifold manifold(grid, M);
  const auto [s0, s1] = split_symbols(cfg.scenario, split);
  const auto n_sym = static_cast<std::size_t>(s1 - s0);

  Dataset ds;
  ds.config = cfg;
  ds.kind = cfg.scenario.record_kind;
  ds.split = split;
  ds.records.resize(grid.size() * n_sym);

  auto make = [&](std::size_t idx) {
    const std::size_t a = idx / n_sym;
    const int sym = s0 + static_cast<int>(idx % n_sym);
    const auto& snrs = cfg.scenario.snr_db;
    const auto& rhos = cfg.impairment.rho;
    const SnrValue snr = snrs[static_cast<std::size_t>(sym) % snrs.size()];
    const double rho = rhos[static_cast<std::size_t>(sym) % rhos.size()];
    const double theta = grid.angle(a);
    const std::uint64_t seed =
        derive_seed(cfg.scenario.seed, {static_cast<std::uint64_t>(a), static_cast<std::uint64_t>(sym)});
    CsiSample sample = synthesize_csi(grid, cfg.array, cfg.srs, model, theta, snr, rho, seed);

    DatasetRecord& rec = ds.records[idx];
    rec.theta_deg = theta;
    rec.snr_db = sample.snr_db;
    rec.rho = rho;
    rec.angle_index = static_cast<std::uint32_t>(a);
    rec.symbol_index = static_cast<std::uint32_t>(sym);
    if (ds.kind == RecordKind::Csi) {
      rec.h = std::move(sample.h);
    } else {
      rec.R = sample_covariance(sample).R;
      rec.css = manifold.css(vectorize(Covariance{rec.R}));
    }
  };

  const std::size_t n = ds.records.size();
  const std::size_t workers = std::min<std::size_t>(std::max(threads, 1), std::max<std::size_t>(n, 1));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) make(i);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i = w; i < n; i += workers) make(i);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }
  return ds;
}

std::vector<std::uint8_t> encode_dataset(const Dataset& ds) {
  json header;
  header["format"] = "moddnn-dataset";
  header["kind"] = record_kind_name(ds.kind);
  header["split"] = split_name(ds.split);
  header["record_count"] = ds.records.size();
  header["record_size"] = ds.record_size();
  header["config"] = run_config_to_json(ds.config);
  header["config_hash"] = config_hash(ds.config);
  header["label"] = {{"width_deg", ds.config.label_width_deg}};
  const std::string text = header.dump();

  std::vector<std::uint8_t> out;
  out.reserve(16 + text.size() + ds.records.size() * ds.record_size());
  put(out, "MDDS", 4);
  const std::uint32_t version = kDatasetVersion;
  put(out, &version, sizeof version);
  const std::uint64_t header_len = text.size();
  put(out, &header_len, sizeof header_len);
  put(out, text.data(), text.size());

  const auto M = static_cast<Eigen::Index>(ds.config.array.M);
  const auto K = static_cast<Eigen::Index>(ds.config.srs.K);
  const auto L = static_cast<Eigen::Index>(ds.config.grid().size());
  for (const auto& rec : ds.records) {
    put(out, &rec.theta_deg, sizeof(double));
    put(out, &rec.snr_db, sizeof(double));
    put(out, &rec.rho, sizeof(double));
    put(out, &rec.angle_index, sizeof(std::uint32_t));
    put(out, &rec.symbol_index, sizeof(std::uint32_t));
    if (ds.kind == RecordKind::Csi) {
      if (rec.h.rows() != K || rec.h.cols() != M) throw ShapeError("dataset: csi record has the wrong shape");
      for (Eigen::Index k = 0; k < K; ++k)
        for (Eigen::Index m = 0; m < M; ++m) put(out, &rec.h(k, m), sizeof(cdouble));
    } else {
      if (rec.R.rows() != M || rec.R.cols() != M || rec.css.size() != L) {
        throw ShapeError("dataset: css record has the wrong shape");
      }
      for (Eigen::Index c = 0; c < M; ++c)
        for (Eigen::Index r = 0; r < M; ++r) put(out, &rec.R(r, c), sizeof(cdouble));
      put(out, rec.css.data(), sizeof(double) * static_cast<std::size_t>(L));
    }
  }
  return out;
}

Dataset decode_dataset(const std::vector<std::uint8_t>& bytes) {
  Cursor cur(bytes, 0);
  char magic[4];
  cur.get(magic, 4);
  if (std::memcmp(magic, "MDDS", 4) != 0) throw IoError("dataset: bad magic");
  std::uint32_t version = 0;
  cur.get(&version, sizeof version);
  if (version != kDatasetVersion) throw IoError("dataset: unsupported version " + std::to_string(version));
  std::uint64_t header_len = 0;
  cur.get(&header_len, sizeof header_len);
  if (header_len > bytes.size()) throw IoError("dataset: truncated header");
  std::string text(header_len, '\0');
  cur.get(text.data(), header_len);

  Dataset ds;
  std::size_t count = 0;
  std::size_t declared_size = 0;
  try {
    const json header = json::parse(text);
    if (header.at("format") != "moddnn-dataset") throw IoError("dataset: unknown format tag");
    ds.config = parse_run_config(header.at("config"));
    const std::string kind = header.at("kind").get<std::string>();
    if (kind == "csi") {
      ds.kind = RecordKind::Csi;
    } else if (kind == "css") {
      ds.kind = RecordKind::Css;
    } else {
      throw IoError("dataset: unknown record kind " + kind);
    }
    ds.split = parse_split(header.at("split").get<std::string>());
    count = header.at("record_count").get<std::size_t>();
    declared_size = header.at("record_size").get<std::size_t>();
  } catch (const json::exception& e) {
    throw IoError(std::string("dataset: malformed header: ") + e.what());
  } catch (const ConfigError& e) {
    throw IoError(std::string("dataset: header config rejected: ") + e.what());
  }
  if (declared_size != ds.record_size()) throw IoError("dataset: record size does not match header config");
  if (bytes.size() - cur.pos() != count * declared_size) {
    throw IoError("dataset: payload size does not match record count");
  }

  const auto M = static_cast<Eigen::Index>(ds.config.array.M);
  const auto K = static_cast<Eigen::Index>(ds.config.srs.K);
  const auto L = static_cast<Eigen::Index>(ds.config.grid().size());
  ds.records.resize(count);
  for (auto& rec : ds.records) {
    cur.get(&rec.theta_deg, sizeof(double));
    cur.get(&rec.snr_db, sizeof(double));
    cur.get(&rec.rho, sizeof(double));
    cur.get(&rec.angle_index, sizeof(std::uint32_t));
    cur.get(&rec.symbol_index, sizeof(std::uint32_t));
    if (ds.kind == RecordKind::Csi) {
      rec.h.resize(K, M);
      for (Eigen::Index k = 0; k < K; ++k)
        for (Eigen::Index m = 0; m < M; ++m) cur.get(&rec.h(k, m), sizeof(cdouble));
    } else {
      rec.R.resize(M, M);
      for (Eigen::Index c = 0; c < M; ++c)
        for (Eigen::Index r = 0; r < M; ++r) cur.get(&rec.R(r, c), sizeof(cdouble));
      rec.css.resize(L);
      cur.get(rec.css.data(), sizeof(double) * static_cast<std::size_t>(L));
    }
  }
  return ds;
}

void write_dataset(const std::string& path, const Dataset& ds) {
  const auto bytes = encode_dataset(ds);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path);
}

Dataset read_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_dataset(bytes);
}

Covariance record_covariance(const DatasetRecord& rec) {
  if (rec.R.size() > 0) return Covariance{rec.R};
  CsiSample s;
  s.h = rec.h;
  return sample_covariance(s);
}

Spectrum record_css(const DatasetRecord& rec, const CoarrayManifold& manifold) {
  if (rec.css.size() > 0) return rec.css;
  return manifold.css(vectorize(record_covariance(rec)));
}

}  // namespace moddnn
