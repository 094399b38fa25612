#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "imbalance/classifier.hpp"
#include "imbalance/errors.hpp"
#include "imbalance/experiment.hpp"
#include "json.hpp"

namespace imbalance {

struct ThresholdSweepSettings {
  std::size_t context_size = 1000;
  double pi1 = 0.1;
  std::vector<double> taus;  // empty: 0.00, 0.01, ..., 1.00
};

struct DownsampleSweepSettings {
  std::size_t minority_count = 50;
  std::vector<std::size_t> n0_targets{50, 100, 200, 400};
};

struct CurveSettings {
  std::size_t context_size = 1000;
  std::vector<double> imbalances{0.1, 0.5};
};

/// Everything a harness invocation reads from its config file.
struct HarnessConfig {
  ExperimentConfig experiment;
  ThresholdSweepSettings threshold_sweep;
  DownsampleSweepSettings downsample_sweep;
  CurveSettings calibration;
  std::size_t calibration_bins = 10;
  CurveSettings roc;

  HarnessConfig() { experiment.datasets = demo_manifest(); }
};

/// Default sweep grid 0.00, 0.01, ..., 1.00.
inline std::vector<double> default_sweep_taus() {
  std::vector<double> taus;
  for (int i = 0; i <= 100; ++i) taus.push_back(i / 100.0);
  return taus;
}

/// Splits a command line on whitespace; double quotes group words.
inline std::vector<std::string> split_command(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false, have = false;
  for (char c : s) {
    if (c == '"') {
      quoted = !quoted;
      have = true;
    } else if (!quoted && (c == ' ' || c == '\t')) {
      if (have) out.push_back(cur);
      cur.clear();
      have = false;
    } else {
      cur.push_back(c);
      have = true;
    }
  }
  if (quoted) throw ConfigInvalid("unbalanced quote in command '" + s + "'");
  if (have) out.push_back(cur);
  return out;
}

namespace detail {

using nlohmann::json;

inline void reject_unknown(const json& obj, std::initializer_list<std::string_view> known, std::string_view where) {
  if (!obj.is_object()) throw ConfigInvalid(std::string(where) + " must be an object");
  for (const auto& [key, _] : obj.items()) {
    bool ok = false;
    for (auto k : known) ok = ok || k == key;
    if (!ok) throw ConfigInvalid("unknown key '" + key + "' in " + std::string(where));
  }
}

template <class T>
T get_as(const json& obj, const char* key, std::string_view where) {
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigInvalid("bad value for '" + std::string(key) + "' in " + std::string(where));
  }
}

template <class T>
void read_if(const json& obj, const char* key, T& out, std::string_view where) {
  if (obj.contains(key)) out = get_as<T>(obj, key, where);
}

inline json parse_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigInvalid("cannot open '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigInvalid("'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

inline std::vector<DatasetEntry> parse_manifest(const json& doc, const std::filesystem::path& base) {
  reject_unknown(doc, {"datasets"}, "manifest");
  if (!doc.contains("datasets") || !doc["datasets"].is_array()) throw ConfigInvalid("manifest needs a 'datasets' list");
  std::vector<DatasetEntry> out;
  for (const auto& d : doc["datasets"]) {
    reject_unknown(d, {"name", "path", "label_column", "minority_label", "generator", "openml_id"}, "manifest entry");
    DatasetEntry e;
    e.name = get_as<std::string>(d, "name", "manifest entry");
    if (d.contains("generator")) {
      const auto& g = d["generator"];
      reject_unknown(g, {"type", "n0", "n1", "dim", "seed"}, "generator");
      if (get_as<std::string>(g, "type", "generator") != "two_gaussian")
        throw ConfigInvalid("unknown generator type for dataset '" + e.name + "'");
      GeneratorSpec spec;
      read_if(g, "n0", spec.n0, "generator");
      read_if(g, "n1", spec.n1, "generator");
      read_if(g, "dim", spec.dim, "generator");
      read_if(g, "seed", spec.seed, "generator");
      e.generator = spec;
    } else {
      const auto path = std::filesystem::path(get_as<std::string>(d, "path", "manifest entry"));
      e.path = path.is_absolute() ? path : base / path;
      e.label_column = get_as<std::string>(d, "label_column", "manifest entry");
      if (!d.contains("minority_label")) throw ConfigInvalid("manifest entry '" + e.name + "' lacks 'minority_label'");
      const auto& m = d["minority_label"];
      e.minority_label = m.is_string() ? m.get<std::string>() : m.dump();
    }
    out.push_back(std::move(e));
  }
  return out;
}

inline SoftClassifierSpec parse_classifier(const json& c, const SoftClassifierSpec& fallback) {
  reject_unknown(c, {"backend", "bandwidth", "variance_floor", "k", "alpha", "command", "timeout_s"}, "classifier");
  const std::string backend = c.contains("backend") ? get_as<std::string>(c, "backend", "classifier")
                                                    : std::string(fallback.name());
  try {
    if (backend == "kernel-icl") {
      KernelIcl k;
      if (c.contains("bandwidth")) {
        const auto& b = c["bandwidth"];
        if (b.is_number()) {
          k.rule = BandwidthRule::Fixed;
          k.bandwidth = b.get<double>();
        } else if (b == "silverman") {
          k.rule = BandwidthRule::Silverman;
        } else if (b == "median") {
          k.rule = BandwidthRule::Median;
        } else {
          throw ConfigInvalid("bandwidth must be a number, \"silverman\" or \"median\"");
        }
      }
      return SoftClassifierSpec(k);
    }
    if (backend == "gaussian-nb") {
      GaussianNb g;
      read_if(c, "variance_floor", g.variance_floor, "classifier");
      return SoftClassifierSpec(g);
    }
    if (backend == "knn") {
      KnnProportion n;
      read_if(c, "k", n.k, "classifier");
      read_if(c, "alpha", n.alpha, "classifier");
      return SoftClassifierSpec(n);
    }
    if (backend == "external") {
      External e;
      if (c.contains("command")) {
        e.command = c["command"].is_string() ? split_command(c["command"].get<std::string>())
                                             : get_as<std::vector<std::string>>(c, "command", "classifier");
      }
      if (c.contains("timeout_s"))
        e.timeout = std::chrono::milliseconds(static_cast<long long>(get_as<double>(c, "timeout_s", "classifier") * 1000));
      return SoftClassifierSpec(e);
    }
  } catch (const InvalidClassifierSpec& e) {
    throw ConfigInvalid(e.what());
  }
  throw ConfigInvalid("unknown backend '" + backend + "' (expected kernel-icl, gaussian-nb, knn or external)");
}

inline void parse_curve(const json& obj, CurveSettings& out, std::string_view where) {
  reject_unknown(obj, {"context_size", "imbalances", "bins"}, where);
  read_if(obj, "context_size", out.context_size, where);
  read_if(obj, "imbalances", out.imbalances, where);
}

}  // namespace detail

/// Loads a dataset manifest. Relative dataset paths resolve against the
/// manifest's directory. The name "demo" yields the built-in manifest.
inline std::vector<DatasetEntry> load_manifest(const std::filesystem::path& path) {
  if (path == "demo") return demo_manifest();
  return detail::parse_manifest(detail::parse_json_file(path), path.parent_path());
}

/// Parses a JSON harness config. Unknown keys are rejected.
inline HarnessConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base = {}) {
  using detail::read_if;
  detail::reject_unknown(doc,
                         {"manifest", "datasets", "context_sizes", "imbalances", "methods", "seeds", "num_seeds",
                          "master_seed", "test_per_class", "workers", "k_neighbors", "standardize", "classifier",
                          "threshold_sweep", "downsample_sweep", "calibration", "roc"},
                         "config");
  HarnessConfig cfg;
  auto& ex = cfg.experiment;
  if (doc.contains("manifest") && doc.contains("datasets"))
    throw ConfigInvalid("config may give 'manifest' or 'datasets', not both");
  if (doc.contains("manifest")) {
    const auto m = std::filesystem::path(detail::get_as<std::string>(doc, "manifest", "config"));
    ex.datasets = load_manifest(m == "demo" || m.is_absolute() ? m : base / m);
  }
  if (doc.contains("datasets")) ex.datasets = detail::parse_manifest(nlohmann::json{{"datasets", doc["datasets"]}}, base);

  read_if(doc, "context_sizes", ex.context_sizes, "config");
  read_if(doc, "imbalances", ex.imbalances, "config");
  if (doc.contains("methods")) {
    ex.methods.clear();
    for (const auto& m : detail::get_as<std::vector<std::string>>(doc, "methods", "config"))
      ex.methods.push_back(parse_method(m));
  }
  if (doc.contains("seeds") && doc.contains("num_seeds")) throw ConfigInvalid("give 'seeds' or 'num_seeds', not both");
  read_if(doc, "seeds", ex.seeds, "config");
  if (doc.contains("num_seeds")) {
    const auto k = detail::get_as<std::size_t>(doc, "num_seeds", "config");
    ex.seeds.clear();
    for (std::size_t s = 0; s < k; ++s) ex.seeds.push_back(s);
  }
  read_if(doc, "master_seed", ex.master_seed, "config");
  read_if(doc, "test_per_class", ex.test_per_class, "config");
  read_if(doc, "workers", ex.workers, "config");
  read_if(doc, "k_neighbors", ex.k_neighbors, "config");
  read_if(doc, "standardize", ex.standardize, "config");
  if (doc.contains("classifier")) ex.classifier = detail::parse_classifier(doc["classifier"], ex.classifier);

  if (doc.contains("threshold_sweep")) {
    const auto& t = doc["threshold_sweep"];
    detail::reject_unknown(t, {"context_size", "pi1", "taus"}, "threshold_sweep");
    read_if(t, "context_size", cfg.threshold_sweep.context_size, "threshold_sweep");
    read_if(t, "pi1", cfg.threshold_sweep.pi1, "threshold_sweep");
    read_if(t, "taus", cfg.threshold_sweep.taus, "threshold_sweep");
  }
  if (doc.contains("downsample_sweep")) {
    const auto& d = doc["downsample_sweep"];
    detail::reject_unknown(d, {"minority_count", "n0_targets"}, "downsample_sweep");
    read_if(d, "minority_count", cfg.downsample_sweep.minority_count, "downsample_sweep");
    read_if(d, "n0_targets", cfg.downsample_sweep.n0_targets, "downsample_sweep");
  }
  if (doc.contains("calibration")) {
    detail::parse_curve(doc["calibration"], cfg.calibration, "calibration");
    read_if(doc["calibration"], "bins", cfg.calibration_bins, "calibration");
  }
  if (doc.contains("roc")) {
    if (doc["roc"].contains("bins")) throw ConfigInvalid("unknown key 'bins' in roc");
    detail::parse_curve(doc["roc"], cfg.roc, "roc");
  }
  return cfg;
}

inline HarnessConfig load_config(const std::filesystem::path& path) {
  return parse_config(detail::parse_json_file(path), path.parent_path());
}

}  // namespace imbalance
