#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "moddnn/coarray.hpp"
#include "moddnn/run_config.hpp"

namespace moddnn {

enum class Split { Train, Val, All };

const char* split_name(Split split);
Split parse_split(const std::string& name);

// One symbol at one grid angle. Csi records carry h; css records carry the
// covariance and its coarray spatial spectrum (the fast training cache).
struct DatasetRecord {
  double theta_deg = 0.0;
  double snr_db = 0.0;  // +inf when noiseless
  double rho = 0.0;
  std::uint32_t angle_index = 0;
  std::uint32_t symbol_index = 0;
  Eigen::MatrixXcd h;  // K x M
  Eigen::MatrixXcd R;  // M x M
  Spectrum css;        // L, unnormalized
};

struct Dataset {
  RunConfig config;
  RecordKind kind = RecordKind::Css;
  Split split = Split::All;
  std::vector<DatasetRecord> records;

  std::size_t record_size() const;
};

constexpr std::uint32_t kDatasetVersion = 1;

// Symbol range of a split: train [0, train), val [train, train+val), all [0, symbols).
std::pair<int, int> split_symbols(const ScenarioConfig& scenario, Split split);
std::size_t planned_record_count(const RunConfig& cfg, Split split);

// Records ordered by (angle, symbol). Each sample draws from
// derive_seed(scenario.seed, {angle, symbol}); SNR and rho lists are cycled by
// symbol index.
Dataset generate_dataset(const RunConfig& cfg, Split split, int threads = 1);

// Hash of the sections that determine the records (hex FNV-1a).
std::string config_hash(const RunConfig& cfg);

std::vector<std::uint8_t> encode_dataset(const Dataset& ds);
Dataset decode_dataset(const std::vector<std::uint8_t>& bytes);
void write_dataset(const std::string& path, const Dataset& ds);
Dataset read_dataset(const std::string& path);

// Covariance and CSS of a record, computed from h for csi records.
Covariance record_covariance(const DatasetRecord& rec);
Spectrum record_css(const DatasetRecord& rec, const CoarrayManifold& manifold);

}  // namespace moddnn
