#include "motiflab/report.hpp"

namespace motiflab::report {

RunManifest::RunManifest() : data_(Json::object()) { data_["stages"] = Json::object(); }

void RunManifest::set(const std::string& key, Json value) {
  if (key == "digest" || key == "stages") throw PreconditionError("manifest key '" + key + "' is reserved");
  data_[key] = std::move(value);
}

const Json& RunManifest::get(const std::string& key) const { return data_.at(key); }

bool RunManifest::has(const std::string& key) const { return data_.contains(key); }

void RunManifest::set_stage(const std::string& stage, Json params) {
  data_["stages"][stage] = std::move(params);
}

const Json& RunManifest::stage(const std::string& stage) const { return data_.at("stages").at(stage); }

bool RunManifest::has_stage(const std::string& stage) const {
  return data_.at("stages").contains(stage);
}

std::string RunManifest::digest() const { return sha256_hex(data_.dump()); }

Json RunManifest::to_json() const {
  Json j = data_;
  j["digest"] = digest();
  return j;
}

RunManifest RunManifest::from_json(const Json& j) {
  if (!j.is_object() || !j.contains("stages") || !j.at("stages").is_object()) {
    throw FormatError("run manifest: missing 'stages' object");
  }
  RunManifest m;
  m.data_ = j;
  m.data_.erase("digest");
  if (j.contains("digest") && j.at("digest") != m.digest()) {
    throw FormatError("run manifest: stored digest does not match its contents");
  }
  return m;
}

void RunManifest::save(const std::filesystem::path& path) const {
  write_file_atomic(path, to_json().dump(2) + "\n");
}

RunManifest RunManifest::load(const std::filesystem::path& path) {
  try {
    return from_json(Json::parse(read_file(path)));
  } catch (const Json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace motiflab::report
