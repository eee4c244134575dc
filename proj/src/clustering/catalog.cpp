#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <tuple>

#include "motiflab/clustering.hpp"

namespace motiflab::clustering {

namespace {

void reject_unknown(const Json& j, std::initializer_list<std::string_view> known,
                    const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [key, _] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw ConfigError("unknown key '" + key + "' in " + where);
    }
  }
}

template <typename T>
void read_opt(const Json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const Json::exception&) {
    throw ConfigError(where + "." + key + " has the wrong type");
  }
}

Json number_or_inf(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

double number_from(const Json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    throw FormatError("expected a number, got '" + s + "'");
  }
  return j.get<double>();
}

Json ref_json(const extraction::MotifRecord& r) {
  return Json::array({r.novel_id, r.chunk_index, r.ordinal});
}

}  // namespace

Json to_json(const ReducerParams& p) {
  Json j{{"method", to_string(p.method)},
         {"n_components", p.n_components},
         {"n_neighbors", p.n_neighbors},
         {"min_dist", p.min_dist},
         {"metric", to_string(p.metric)},
         {"seed", p.seed}};
  if (p.method == ReducerMethod::external) j["external_path"] = p.external_path.generic_string();
  return j;
}

ReducerParams reducer_params_from_json(const Json& j) {
  const std::string where = "reducer";
  reject_unknown(j, {"method", "n_components", "n_neighbors", "min_dist", "metric", "seed",
                     "external_path"},
                 where);
  ReducerParams p;
  std::string method = to_string(p.method), metric = to_string(p.metric), ext;
  read_opt(j, "method", method, where);
  read_opt(j, "metric", metric, where);
  read_opt(j, "n_components", p.n_components, where);
  read_opt(j, "n_neighbors", p.n_neighbors, where);
  read_opt(j, "min_dist", p.min_dist, where);
  read_opt(j, "seed", p.seed, where);
  read_opt(j, "external_path", ext, where);
  p.method = parse_reducer_method(method);
  p.metric = parse_metric(metric);
  p.external_path = ext;
  return p;
}

Json to_json(const HdbscanParams& p) {
  return Json{{"min_cluster_size", p.min_cluster_size},
              {"min_samples", p.min_samples},
              {"metric", "euclidean"},
              {"selection", to_string(p.selection)},
              {"allow_single_cluster", p.allow_single_cluster}};
}

HdbscanParams hdbscan_params_from_json(const Json& j) {
  const std::string where = "hdbscan";
  reject_unknown(j, {"min_cluster_size", "min_samples", "metric", "selection",
                     "allow_single_cluster"},
                 where);
  HdbscanParams p;
  std::string selection = to_string(p.selection), metric = "euclidean";
  read_opt(j, "min_cluster_size", p.min_cluster_size, where);
  read_opt(j, "min_samples", p.min_samples, where);
  read_opt(j, "selection", selection, where);
  read_opt(j, "allow_single_cluster", p.allow_single_cluster, where);
  read_opt(j, "metric", metric, where);
  if (metric != "euclidean") throw ConfigError("hdbscan.metric supports only euclidean");
  p.selection = parse_selection(selection);
  return p;
}

MotifCatalog build_catalog(std::span<const extraction::MotifRecord> records,
                           std::span<const int> labels, const Matrix& embeddings,
                           std::span<const double> stability) {
  if (labels.size() != records.size()) {
    throw PreconditionError("build_catalog: " + std::to_string(labels.size()) + " labels for " +
                            std::to_string(records.size()) + " records");
  }
  if (embeddings.rows() != records.size()) {
    throw PreconditionError("build_catalog: embedding rows do not align with records");
  }
  MotifCatalog cat;
  cat.record_count = records.size();

  int max_label = -1;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < -1) throw PreconditionError("build_catalog: invalid label " + std::to_string(labels[i]));
    max_label = std::max(max_label, labels[i]);
  }
  std::vector<std::vector<std::size_t>> members(static_cast<std::size_t>(max_label + 1));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0) {
      cat.outliers.push_back(i);
    } else {
      members[static_cast<std::size_t>(labels[i])].push_back(i);
    }
  }

  // Relabel densely in case the input skips ids.
  for (auto& m : members) {
    if (m.empty()) continue;
    MotifCluster c;
    const auto original = static_cast<std::size_t>(labels[m.front()]);
    c.cluster_id = static_cast<int>(cat.clusters.size());
    c.occurrence_count = m.size();
    c.stability = original < stability.size() ? stability[original] : 0.0;
    const auto sums = kernels::parallel::summed_cosine_distances(embeddings, m);
    std::size_t best = 0;
    for (std::size_t k = 1; k < sums.size(); ++k) {
      if (sums[k] < sums[best]) best = k;
    }
    c.medoid_record = m[best];
    c.medoid_sentence = records[c.medoid_record].sentence;
    c.members = std::move(m);
    cat.clusters.push_back(std::move(c));
  }
  return cat;
}

Json to_json(const MotifCatalog& c, std::span<const extraction::MotifRecord> records) {
  Json clusters = Json::array();
  for (const auto& cl : c.clusters) {
    Json members = Json::array();
    for (std::size_t m : cl.members) members.push_back(ref_json(records[m]));
    Json item{{"cluster_id", cl.cluster_id},
              {"occurrence_count", cl.occurrence_count},
              {"stability", number_or_inf(cl.stability)},
              {"medoid", ref_json(records[cl.medoid_record])},
              {"medoid_sentence", cl.medoid_sentence}};
    if (cl.label) {
      item["label"] = *cl.label;
      item["label_fallback"] = cl.label_fallback;
      item["label_truncated"] = cl.label_truncated;
    }
    item["members"] = std::move(members);
    clusters.push_back(std::move(item));
  }
  Json outliers = Json::array();
  for (std::size_t o : c.outliers) outliers.push_back(ref_json(records[o]));

  Json j{{"record_count", c.record_count},
         {"cluster_count", c.clusters.size()},
         {"outlier_count", c.outliers.size()},
         {"reducer", to_json(c.reducer)},
         {"hdbscan", to_json(c.params)}};
  if (!c.label_prompt_checksum.empty()) j["label_prompt_checksum"] = c.label_prompt_checksum;
  j["clusters"] = std::move(clusters);
  j["outliers"] = std::move(outliers);
  return j;
}

MotifCatalog catalog_from_json(const Json& j, std::span<const extraction::MotifRecord> records) {
  std::map<std::tuple<std::string, std::size_t, std::size_t>, std::size_t> index;
  for (std::size_t i = 0; i < records.size(); ++i) {
    index.emplace(std::tuple{records[i].novel_id, records[i].chunk_index, records[i].ordinal}, i);
  }
  const auto resolve = [&](const Json& ref) {
    const auto key = std::tuple{ref.at(0).get<std::string>(), ref.at(1).get<std::size_t>(),
                                ref.at(2).get<std::size_t>()};
    const auto it = index.find(key);
    if (it == index.end()) {
      throw FormatError("catalog references unknown record " + std::get<0>(key) + "#" +
                        std::to_string(std::get<1>(key)) + "/" + std::to_string(std::get<2>(key)));
    }
    return it->second;
  };

  try {
    MotifCatalog c;
    c.record_count = j.at("record_count").get<std::size_t>();
    if (c.record_count != records.size()) {
      throw FormatError("catalog covers " + std::to_string(c.record_count) + " records, " +
                        std::to_string(records.size()) + " supplied");
    }
    c.reducer = reducer_params_from_json(j.at("reducer"));
    c.params = hdbscan_params_from_json(j.at("hdbscan"));
    if (j.contains("label_prompt_checksum")) {
      c.label_prompt_checksum = j.at("label_prompt_checksum").get<std::string>();
    }
    for (const auto& item : j.at("clusters")) {
      MotifCluster cl;
      cl.cluster_id = item.at("cluster_id").get<int>();
      cl.occurrence_count = item.at("occurrence_count").get<std::size_t>();
      cl.stability = number_from(item.at("stability"));
      cl.medoid_record = resolve(item.at("medoid"));
      cl.medoid_sentence = item.at("medoid_sentence").get<std::string>();
      if (item.contains("label")) {
        cl.label = item.at("label").get<std::string>();
        cl.label_fallback = item.at("label_fallback").get<bool>();
        cl.label_truncated = item.at("label_truncated").get<bool>();
      }
      for (const auto& ref : item.at("members")) cl.members.push_back(resolve(ref));
      if (cl.members.size() != cl.occurrence_count) {
        throw FormatError("cluster " + std::to_string(cl.cluster_id) +
                          ": occurrence_count does not match its member list");
      }
      c.clusters.push_back(std::move(cl));
    }
    for (const auto& ref : j.at("outliers")) c.outliers.push_back(resolve(ref));
    return c;
  } catch (const Json::exception& e) {
    throw FormatError(std::string("malformed catalog: ") + e.what());
  }
}

}  // namespace motiflab::clustering
