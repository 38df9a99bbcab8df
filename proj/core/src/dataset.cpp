#include "rcwave/dataset.hpp"

#include <nlohmann/json.hpp>

#include "rcwave/error.hpp"

namespace rcwave::features {

std::string to_json_line(const FeatureRecord& r) {
  nlohmann::json j;
  j["v"] = kDatasetSchemaVersion;
  j["id"] = r.id;
  j["order"] = r.order;
  j["device_id"] = r.device_id;
  j["t_span"] = r.t_span;
  j["t_norm"] = r.t_norm;
  auto rows = nlohmann::json::array();
  for (int k = 0; k < static_cast<int>(r.triplets.rows.size()); ++k) {
    const auto& t = r.triplets.rows[k];
    rows.push_back({t.pole_norm, t.order, t.residue_norm});
  }
  j["triplets"] = std::move(rows);
  j["v_in"] = r.v_in.samples;
  j["target"] = r.target.samples;
  j["base_target"] = r.base_target.samples;
  j["correction_target"] = r.correction_target.samples;
  return j.dump();
}

FeatureRecord record_from_json_line(std::string_view line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::SchemaMismatch, std::string("record is not valid JSON: ") + e.what());
  }
  try {
    const int v = j.at("v").get<int>();
    if (v != kDatasetSchemaVersion)
      throw Error(ErrorCode::SchemaMismatch, "dataset schema version " + std::to_string(v) +
                                                 ", expected " +
                                                 std::to_string(kDatasetSchemaVersion));
    FeatureRecord r;
    r.id = j.at("id").get<int>();
    r.order = j.at("order").get<int>();
    r.device_id = j.at("device_id").get<int>();
    r.t_span = j.at("t_span").get<double>();
    r.t_norm = j.at("t_norm").get<double>();
    int active = 0;
    for (const auto& row : j.at("triplets")) {
      if (row.size() != 3) throw Error(ErrorCode::SchemaMismatch, "triplet rows have 3 entries");
      Triplet t{row[0].get<double>(), row[1].get<int>(), row[2].get<double>()};
      if (t.order != 0) ++active;
      r.triplets.rows.push_back(t);
    }
    r.triplets.n_active = active;
    auto wave = [&](const char* key, WaveKind kind) {
      return Waveform{j.at(key).get<std::vector<double>>(), r.t_span, kind};
    };
    r.v_in = wave("v_in", WaveKind::Input);
    r.target = wave("target", WaveKind::Output);
    r.base_target = wave("base_target", WaveKind::Output);
    r.correction_target = wave("correction_target", WaveKind::Correction);
    const auto n = r.v_in.samples.size();
    if (r.target.samples.size() != n || r.base_target.samples.size() != n ||
        r.correction_target.samples.size() != n)
      throw Error(ErrorCode::SchemaMismatch, "waveform lengths differ within a record");
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::SchemaMismatch, std::string("record field: ") + e.what());
  }
}

DatasetWriter::DatasetWriter(const std::string& path) : path_(path), out_(path) {
  if (!out_) throw Error(ErrorCode::IoFailure, "cannot open '" + path + "' for writing");
}

void DatasetWriter::write(const FeatureRecord& record) {
  out_ << to_json_line(record) << '\n';
  if (!out_) throw Error(ErrorCode::IoFailure, "write failed on '" + path_ + "'");
  ++count_;
}

void DatasetWriter::close() {
  out_.close();
  if (out_.fail()) throw Error(ErrorCode::IoFailure, "close failed on '" + path_ + "'");
}

DatasetReader::DatasetReader(const std::string& path) : path_(path), in_(path) {
  if (!in_) throw Error(ErrorCode::IoFailure, "cannot open '" + path + "'");
}

std::optional<FeatureRecord> DatasetReader::next() {
  while (std::getline(in_, buffer_)) {
    ++line_;
    if (buffer_.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      return record_from_json_line(buffer_);
    } catch (const Error& e) {
      throw Error(e.code(), path_ + ": " + e.what(), line_);
    }
  }
  if (in_.bad()) throw Error(ErrorCode::IoFailure, "read failed on '" + path_ + "'");
  return std::nullopt;
}

void write_dataset(const std::string& path, std::span<const FeatureRecord> records) {
  DatasetWriter w(path);
  for (const auto& r : records) w.write(r);
  w.close();
}

std::vector<FeatureRecord> read_dataset(const std::string& path) {
  DatasetReader reader(path);
  std::vector<FeatureRecord> out;
  while (auto r = reader.next()) out.push_back(std::move(*r));
  return out;
}

}  // namespace rcwave::features
