#pragma once

// JSON run configs. Every run is a pure function of the parsed document;
// unknown keys are rejected and every error names the offending key path.
//
// {
//   "seed": 0, "max_steps": 1000, "loss_threshold": 15.0, "log_every": 1,
//   "landscape":  {"kind": "quadratic" | "kronecker" | "spiral" | "mlp", ...},
//   "optimizer":  {"name": "adam", "eta": 1e-3, ...},
//   "estimation": {"source": "second", "geometry": "bilateral", ...},
//   "staleness":  {"tau": 0, "stages": null, "mode": "stashing", ...}
// }
//
// See README.md for every key and its default.

#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "stalelab/error.hpp"
#include "stalelab/harness.hpp"
#include "stalelab/landscapes.hpp"
#include "stalelab/optim.hpp"
#include "stalelab/pipemodel.hpp"
#include "stalelab/staleness.hpp"

namespace stalelab {

using Json = nlohmann::json;

// FNV-1a, 64 bit.
inline std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t x) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, x >>= 4) s[static_cast<std::size_t>(i)] = digits[x & 0xF];
  return s;
}

// Keys sort lexicographically in the dump, so equal documents hash equally.
inline std::string config_fingerprint(const Json& doc) { return hex64(fnv1a(doc.dump())); }

// Typed access to one JSON object that reports failures by key path.
class ConfigReader {
 public:
  ConfigReader(const Json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
  }

  std::string key_path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  bool has(const std::string& key) const { return node_.contains(key) && !node_.at(key).is_null(); }
  bool present(const std::string& key) const { return node_.contains(key); }

  template <class T>
  T get(const std::string& key, T fallback) const {
    return has(key) ? convert<T>(key) : fallback;
  }

  template <class T>
  std::optional<T> get_optional(const std::string& key) const {
    return has(key) ? std::optional<T>(convert<T>(key)) : std::nullopt;
  }

  template <class T>
  T require(const std::string& key) const {
    if (!has(key)) throw ConfigError(key_path(key), "required key is missing");
    return convert<T>(key);
  }

  ConfigReader child(const std::string& key) const {
    if (!has(key)) throw ConfigError(key_path(key), "required section is missing");
    return ConfigReader(node_.at(key), key_path(key));
  }

  const Json& raw(const std::string& key) const { return node_.at(key); }

  void reject_unknown(std::initializer_list<const char*> known) const {
    std::set<std::string> ok(known.begin(), known.end());
    for (const auto& [k, v] : node_.items())
      if (!ok.count(k)) throw ConfigError(key_path(k), "unknown key");
  }

  Matrix matrix(const std::string& key) const {
    const Json& j = node_.at(key);
    const auto fail = [&] { return ConfigError(key_path(key), "expected a non-empty array of equal-length number rows"); };
    if (!j.is_array() || j.empty()) throw fail();
    if (!j.front().is_array()) {
      // A flat array is a column vector.
      std::vector<double> v;
      for (const Json& x : j) {
        if (!x.is_number()) throw fail();
        v.push_back(x.get<double>());
      }
      return Matrix::column(v);
    }
    const std::size_t cols = j.front().size();
    if (cols == 0) throw fail();
    std::vector<double> data;
    for (const Json& row : j) {
      if (!row.is_array() || row.size() != cols) throw fail();
      for (const Json& x : row) {
        if (!x.is_number()) throw fail();
        data.push_back(x.get<double>());
      }
    }
    try {
      return Matrix(j.size(), cols, std::move(data));
    } catch (const Error& e) {
      throw ConfigError(key_path(key), e.what());
    }
  }

 private:
  template <class T>
  T convert(const std::string& key) const {
    const Json& j = node_.at(key);
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!j.is_boolean()) throw ConfigError(key_path(key), "expected a boolean");
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!j.is_string()) throw ConfigError(key_path(key), "expected a string");
      } else if constexpr (std::is_integral_v<T>) {
        if (!j.is_number_integer()) throw ConfigError(key_path(key), "expected an integer");
        if constexpr (std::is_unsigned_v<T>) {
          if (j.is_number_integer() && !j.is_number_unsigned() && j.get<long long>() < 0)
            throw ConfigError(key_path(key), "expected a non-negative integer");
        }
      } else if constexpr (std::is_floating_point_v<T>) {
        if (!j.is_number()) throw ConfigError(key_path(key), "expected a number");
      }
      return j.get<T>();
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(key_path(key), e.what());
    }
  }

  const Json& node_;
  std::string path_;
};

namespace detail {

template <class F>
auto rethrow_as_config(const std::string& key, F&& f) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(key, e.what());
  }
}

inline std::shared_ptr<const Landscape> parse_landscape(const ConfigReader& r) {
  const std::string kind = r.require<std::string>("kind");
  if (kind == "quadratic") {
    r.reject_unknown({"kind", "eigenvalues", "rotation_deg", "rotation", "start"});
    const auto eig = r.get<std::vector<double>>("eigenvalues", {10.0, 1.0});
    const Matrix start = r.has("start") ? r.matrix("start") : Matrix{{-10.0}, {12.0}};
    return rethrow_as_config(r.key_path("eigenvalues"), [&] {
      QuadraticSpec spec = [&] {
        if (r.has("rotation")) return make_quadratic(eig, r.matrix("rotation"), start.rows(), start.cols());
        if (eig.size() != 2) throw Error("rotation_deg only applies to two eigenvalues; give 'rotation' instead");
        return make_quadratic_2d(eig[0], eig[1], r.get<double>("rotation_deg", 0.0));
      }();
      if (start.size() != spec.dim()) throw Error("start has " + std::to_string(start.size()) + " entries");
      spec.param_rows = start.rows();
      spec.param_cols = start.cols();
      return std::make_shared<const Landscape>(QuadraticProblem{std::move(spec), start});
    });
  }
  if (kind == "kronecker") {
    r.reject_unknown({"kind", "a", "b", "start"});
    const Matrix a = r.matrix("a");
    const Matrix b = r.matrix("b");
    return rethrow_as_config(r.key_path("a"), [&] {
      QuadraticSpec spec = build_kronecker_quadratic(a, b);
      Matrix start = r.has("start") ? r.matrix("start") : Matrix(b.rows(), a.rows(), std::vector<double>(a.rows() * b.rows(), 1.0));
      if (start.rows() != b.rows() || start.cols() != a.rows())
        throw ConfigError(r.key_path("start"), "expected shape " + Matrix::shape_string(b.rows(), a.rows()));
      return std::make_shared<const Landscape>(QuadraticProblem{std::move(spec), std::move(start)});
    });
  }
  if (kind == "spiral") {
    r.reject_unknown({"kind", "amplitude", "frequency", "offset", "start_radius", "start_angle_deg"});
    SpiralProblem p;
    p.spec.amplitude = r.get<double>("amplitude", p.spec.amplitude);
    p.spec.frequency = r.get<double>("frequency", p.spec.frequency);
    p.spec.offset = r.get<double>("offset", p.spec.offset);
    p.start_radius = r.get<double>("start_radius", p.start_radius);
    p.start_angle_deg = r.get<double>("start_angle_deg", p.start_angle_deg);
    rethrow_as_config(r.key_path("amplitude"), [&] { validate(p.spec); return 0; });
    if (!(p.start_radius > kSpiralOriginCutoff)) throw ConfigError(r.key_path("start_radius"), "must be positive");
    return std::make_shared<const Landscape>(p);
  }
  if (kind == "mlp") {
    r.reject_unknown({"kind", "layer_dims", "n_samples", "batch_size", "dataset_seed", "teacher_scale", "init_scale"});
    MlpSpec s;
    s.layer_dims = r.require<std::vector<std::size_t>>("layer_dims");
    s.n_samples = r.get<std::size_t>("n_samples", s.n_samples);
    s.batch_size = r.get<std::size_t>("batch_size", s.batch_size);
    s.dataset_seed = r.get<std::uint64_t>("dataset_seed", s.dataset_seed);
    s.teacher_scale = r.get<double>("teacher_scale", s.teacher_scale);
    s.init_scale = r.get<double>("init_scale", s.init_scale);
    return rethrow_as_config(r.key_path("layer_dims"), [&] {
      MlpData data = make_mlp_dataset(s);
      return std::make_shared<const Landscape>(MlpProblem{s, std::move(data)});
    });
  }
  throw ConfigError(r.key_path("kind"), "unknown landscape '" + kind + "'");
}

inline OptimizerConfig parse_optimizer(const ConfigReader& r) {
  r.reject_unknown({"name", "eta", "beta1", "beta2", "epsilon", "weight_decay", "grad_clip", "bias_correction",
                    "lr_delay_exponent", "dc_lambda", "rotation_exclude"});
  OptimizerConfig c;
  const std::string name = r.get<std::string>("name", "adam");
  const auto kind = optimizer_kind_from_string(name);
  if (!kind) throw ConfigError(r.key_path("name"), "unknown optimizer '" + name + "'");
  c.kind = *kind;
  AdamHyper& h = c.hyper;
  h.eta = r.get<double>("eta", h.eta);
  h.beta1 = r.get<double>("beta1", h.beta1);
  h.beta2 = r.get<double>("beta2", h.beta2);
  h.epsilon = r.get<double>("epsilon", h.epsilon);
  h.weight_decay = r.get<double>("weight_decay", h.weight_decay);
  // An explicit null disables clipping.
  if (r.present("grad_clip")) h.grad_clip = r.get_optional<double>("grad_clip");
  h.bias_correction = r.get<bool>("bias_correction", h.bias_correction);
  c.lr_delay_exponent = r.get<double>("lr_delay_exponent", c.lr_delay_exponent);
  c.dc_lambda = r.get<double>("dc_lambda", c.dc_lambda);
  c.rotation_exclude = r.get<std::vector<std::size_t>>("rotation_exclude", {});
  rethrow_as_config(r.key_path("eta"), [&] { validate(h); return 0; });
  return c;
}

inline EstimationConfig parse_estimation(const ConfigReader& r) {
  r.reject_unknown({"source", "geometry", "beta2", "update_frequency"});
  EstimationConfig e;
  const std::string source = r.get<std::string>("source", "second");
  if (source == "first") e.source = Source::First;
  else if (source == "second") e.source = Source::Second;
  else throw ConfigError(r.key_path("source"), "expected 'first' or 'second'");
  const std::string geometry = r.get<std::string>("geometry", "bilateral");
  if (geometry == "unilateral") e.geometry = Geometry::Unilateral;
  else if (geometry == "bilateral") e.geometry = Geometry::Bilateral;
  else throw ConfigError(r.key_path("geometry"), "expected 'unilateral' or 'bilateral'");
  e.beta2 = r.get<double>("beta2", e.beta2);
  e.update_frequency = r.get<long>("update_frequency", e.update_frequency);
  rethrow_as_config(r.key_path("update_frequency"), [&] { validate(e); return 0; });
  return e;
}

inline StalenessConfig parse_staleness(const ConfigReader& r) {
  r.reject_unknown({"tau", "stages", "mode", "prediction_horizon_scale"});
  StalenessConfig s;
  s.tau = r.get<long>("tau", s.tau);
  s.stages = r.get_optional<long>("stages");
  const std::string mode = r.get<std::string>("mode", "stashing");
  if (mode == "stashing") s.mode = StaleMode::Stashing;
  else if (mode == "prediction") s.mode = StaleMode::Prediction;
  else throw ConfigError(r.key_path("mode"), "expected 'stashing' or 'prediction'");
  s.prediction_horizon_scale = r.get<double>("prediction_horizon_scale", s.prediction_horizon_scale);
  rethrow_as_config(r.key_path("tau"), [&] { validate(s); return 0; });
  return s;
}

}  // namespace detail

inline RunConfig parse_run_config(const Json& doc) {
  ConfigReader r(doc, "");
  r.reject_unknown({"seed", "max_steps", "loss_threshold", "log_every", "landscape", "optimizer", "estimation",
                    "staleness", "grid", "threads", "spiral_sweep"});
  RunConfig c;
  c.seed = r.get<std::uint64_t>("seed", c.seed);
  c.max_steps = r.get<long>("max_steps", c.max_steps);
  if (c.max_steps < 0) throw ConfigError("max_steps", "must be non-negative");
  c.loss_threshold = r.get_optional<double>("loss_threshold");
  c.log_every = r.get<long>("log_every", c.log_every);
  if (c.log_every < 1) throw ConfigError("log_every", "must be >= 1");
  c.landscape = detail::parse_landscape(r.child("landscape"));
  if (r.has("optimizer")) c.optimizer = detail::parse_optimizer(r.child("optimizer"));
  if (r.has("estimation")) c.optimizer.estimation = detail::parse_estimation(r.child("estimation"));
  if (r.has("staleness")) c.staleness = detail::parse_staleness(r.child("staleness"));
  Json run_only = doc;
  for (const char* k : {"grid", "threads", "spiral_sweep"}) run_only.erase(k);
  c.fingerprint = config_fingerprint(run_only);
  return c;
}

inline Json parse_json_text(const std::string& text, const std::string& origin) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(origin, std::string("malformed JSON: ") + e.what());
  }
}

inline Json load_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path, "cannot open config file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_json_text(ss.str(), path);
}

// ---------------------------------------------------------------------------
// Stage-table input: {"sequence_length", "batch_size", "devices": [{name,
// memory_bytes}], "models": [{name, h, a, W, L}]}

struct StageTableInput {
  std::vector<PipelineConfig> models;
  std::vector<Device> devices;
};

inline StageTableInput parse_stage_table(const Json& doc) {
  ConfigReader r(doc, "");
  r.reject_unknown({"sequence_length", "batch_size", "devices", "models"});
  StageTableInput out;
  const auto s = r.require<std::uint64_t>("sequence_length");
  const auto b = r.require<std::uint64_t>("batch_size");
  if (!r.has("devices") || !r.raw("devices").is_array()) throw ConfigError("devices", "expected an array");
  if (!r.has("models") || !r.raw("models").is_array()) throw ConfigError("models", "expected an array");
  std::size_t i = 0;
  for (const Json& d : r.raw("devices")) {
    ConfigReader dr(d, "devices[" + std::to_string(i++) + "]");
    dr.reject_unknown({"name", "memory_bytes"});
    out.devices.push_back({dr.require<std::string>("name"), dr.require<std::uint64_t>("memory_bytes")});
  }
  i = 0;
  for (const Json& m : r.raw("models")) {
    ConfigReader mr(m, "models[" + std::to_string(i++) + "]");
    mr.reject_unknown({"name", "h", "a", "W", "L"});
    PipelineConfig p;
    p.name = mr.require<std::string>("name");
    p.h = mr.require<std::uint64_t>("h");
    p.a = mr.require<std::uint64_t>("a");
    p.w = mr.require<std::uint64_t>("W");
    p.l = mr.require<std::uint64_t>("L");
    p.s = s;
    p.b = b;
    if (p.l == 0) throw ConfigError(mr.key_path("L"), "must be positive");
    out.models.push_back(std::move(p));
  }
  return out;
}

}  // namespace stalelab
