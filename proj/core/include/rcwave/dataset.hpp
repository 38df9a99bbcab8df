#pragma once

#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rcwave/features.hpp"

namespace rcwave::features {

inline constexpr int kDatasetSchemaVersion = 1;

/// One JSON object per line:
///   v, id, order, device_id, t_span, t_norm, triplets [[pole_norm, order,
///   residue_norm]...], v_in, target, base_target, correction_target
std::string to_json_line(const FeatureRecord& record);
FeatureRecord record_from_json_line(std::string_view line);

/// Streams records to a JSON-Lines file.
class DatasetWriter {
 public:
  explicit DatasetWriter(const std::string& path);
  void write(const FeatureRecord& record);
  void close();
  std::size_t count() const { return count_; }

 private:
  std::string path_;
  std::ofstream out_;
  std::size_t count_ = 0;
};

/// Reads one record at a time; only the current line is held in memory.
class DatasetReader {
 public:
  explicit DatasetReader(const std::string& path);
  std::optional<FeatureRecord> next();
  int line() const { return line_; }

 private:
  std::string path_;
  std::ifstream in_;
  std::string buffer_;
  int line_ = 0;
};

void write_dataset(const std::string& path, std::span<const FeatureRecord> records);
std::vector<FeatureRecord> read_dataset(const std::string& path);

}  // namespace rcwave::features
