// Scenario files: JSON documents naming generators, subspaces, a sampling
// set and a list of analysis tasks.
//
//   {
//     "version": "fsis-scenario/1",
//     "dimension": 1,
//     "grid": 512,
//     "tolerances": {"rank_tol": 1e-10, "spec_tol": 1e-10, "conv_eps": 1e-10,
//                    "max_iter": 10000, "close_eps": 1e-4},
//     "generators": [{"name": "phi", "pieces": [{"interval": ["0", "1/2"], "expr": "1"}]}],
//     "subspaces": {"S": ["phi"]},
//     "sampling_set": ["phi"],
//     "finite_dim": {"ambient": 6, "sparse_model": {"sparsity": 2}, "sampling_vectors": [[...]]},
//     "tasks": [{"type": "dimension", "subspace": "S"}]
//   }
#pragma once

#include "fsis/common.hpp"
#include "fsis/dsl.hpp"

#include <json.hpp>
#include <openssl/evp.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace fsis {

inline constexpr const char* kScenarioVersion = "fsis-scenario/1";

inline std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &length, EVP_sha256(), nullptr) != 1) throw Error("SHA-256 failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int k = 0; k < length; ++k) {
    out += hex[digest[k] >> 4];
    out += hex[digest[k] & 0xf];
  }
  return out;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct SubspaceSpec {
  std::vector<std::string> generators;
  bool truncated = false;  // finite prefix of a countable generator list
};

struct FiniteDimSpec {
  std::size_t ambient = 0;
  std::vector<std::string> names;
  std::vector<Matrix> bases;
  Matrix sampling;  // ambient x m
};

struct TaskSpec {
  std::string type;  // analyze-union | analyze-sis | angle | dimension | spectrum-curve
  std::string label;
  nlohmann::json args;
};

struct Scenario {
  std::string version;
  std::size_t dimension = 1;
  std::size_t grid = 0;
  Tolerances tolerances;
  std::vector<dsl::GeneratorSpec> generators;
  std::map<std::string, SubspaceSpec> subspaces;
  std::optional<std::vector<std::string>> sampling_set;
  std::optional<FiniteDimSpec> finite_dim;
  std::vector<TaskSpec> tasks;
  std::string source_name;  // file name only
  std::string input_hash;   // SHA-256 of the scenario and its sidecar files

  const dsl::GeneratorSpec& generator(const std::string& name) const {
    for (const auto& g : generators)
      if (g.name == name) return g;
    throw Error("unknown generator '" + name + "'");
  }

  std::vector<dsl::GeneratorSpec> subspace_generators(const std::string& name) const {
    auto it = subspaces.find(name);
    if (it == subspaces.end()) throw Error("unknown subspace '" + name + "'");
    std::vector<dsl::GeneratorSpec> out;
    for (const auto& g : it->second.generators) out.push_back(generator(g));
    return out;
  }

  std::vector<dsl::GeneratorSpec> sampling_generators() const {
    std::vector<dsl::GeneratorSpec> out;
    if (sampling_set)
      for (const auto& g : *sampling_set) out.push_back(generator(g));
    return out;
  }
};

inline std::size_t default_grid(std::size_t dimension) { return dimension == 1 ? 512 : dimension == 2 ? 64 : 16; }

namespace detail {

inline Complex parse_complex(const nlohmann::json& j, const std::string& path) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number()) return {j[0].get<double>(), j[1].get<double>()};
  throw SchemaError(path, "expected a number or [re, im]");
}

inline Vector parse_vector(const nlohmann::json& j, std::size_t ambient, const std::string& path) {
  if (!j.is_array() || j.size() != ambient) throw SchemaError(path, "expected a vector of length " + std::to_string(ambient));
  Vector v(static_cast<Eigen::Index>(ambient));
  for (std::size_t k = 0; k < ambient; ++k) v(static_cast<Eigen::Index>(k)) = parse_complex(j[k], path + "[" + std::to_string(k) + "]");
  return v;
}

inline Matrix columns_to_matrix(const std::vector<Vector>& cols, std::size_t ambient) {
  Matrix m(static_cast<Eigen::Index>(ambient), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) m.col(static_cast<Eigen::Index>(c)) = cols[c];
  return m;
}

inline std::vector<std::string> name_list(const nlohmann::json& j, const std::string& path) {
  if (!j.is_array()) throw SchemaError(path, "expected an array of names");
  std::vector<std::string> out;
  for (std::size_t k = 0; k < j.size(); ++k) {
    if (!j[k].is_string()) throw SchemaError(path + "[" + std::to_string(k) + "]", "expected a name");
    out.push_back(j[k].get<std::string>());
  }
  return out;
}

inline FiniteDimSpec parse_finite_dim(const nlohmann::json& j) {
  const std::string path = "finite_dim";
  if (!j.is_object()) throw SchemaError(path, "must be an object");
  if (!j.contains("ambient") || !j["ambient"].is_number_unsigned() || j["ambient"].get<std::size_t>() == 0)
    throw SchemaError(path + ".ambient", "must be a positive integer");
  FiniteDimSpec out;
  out.ambient = j["ambient"].get<std::size_t>();
  const auto n = static_cast<Eigen::Index>(out.ambient);

  auto support_basis = [&](const std::vector<std::size_t>& support, const std::string& p) {
    Matrix m = Matrix::Zero(n, static_cast<Eigen::Index>(support.size()));
    for (std::size_t c = 0; c < support.size(); ++c) {
      if (support[c] >= out.ambient) throw SchemaError(p, "support index out of range");
      m(static_cast<Eigen::Index>(support[c]), static_cast<Eigen::Index>(c)) = 1.0;
    }
    return m;
  };

  if (j.contains("subspaces")) {
    if (!j["subspaces"].is_object()) throw SchemaError(path + ".subspaces", "must be an object");
    for (const auto& [name, rec] : j["subspaces"].items()) {
      const std::string p = path + ".subspaces." + name;
      if (rec.contains("support")) {
        std::vector<std::size_t> support;
        for (const auto& s : rec["support"]) {
          if (!s.is_number_unsigned()) throw SchemaError(p + ".support", "indices must be non-negative integers");
          support.push_back(s.get<std::size_t>());
        }
        out.bases.push_back(support_basis(support, p + ".support"));
      } else if (rec.contains("basis")) {
        if (!rec["basis"].is_array()) throw SchemaError(p + ".basis", "expected an array of column vectors");
        std::vector<Vector> cols;
        for (std::size_t c = 0; c < rec["basis"].size(); ++c)
          cols.push_back(parse_vector(rec["basis"][c], out.ambient, p + ".basis[" + std::to_string(c) + "]"));
        out.bases.push_back(columns_to_matrix(cols, out.ambient));
      } else {
        throw SchemaError(p, "needs 'support' or 'basis'");
      }
      out.names.push_back(name);
    }
  }
  if (j.contains("sparse_model")) {
    const auto& sm = j["sparse_model"];
    if (!sm.contains("sparsity") || !sm["sparsity"].is_number_unsigned())
      throw SchemaError(path + ".sparse_model.sparsity", "must be a non-negative integer");
    const std::size_t k = sm["sparsity"].get<std::size_t>();
    if (k == 0 || k > out.ambient) throw SchemaError(path + ".sparse_model.sparsity", "must be in [1, ambient]");
    // all k-subsets of {0..N-1} in lexicographic order
    std::vector<std::size_t> support(k);
    for (std::size_t c = 0; c < k; ++c) support[c] = c;
    for (;;) {
      std::string name = "s";
      for (std::size_t c = 0; c < k; ++c) name += (c ? "_" : "") + std::to_string(support[c]);
      out.names.push_back(name);
      out.bases.push_back(support_basis(support, path + ".sparse_model"));
      std::size_t c = k;
      while (c > 0 && support[c - 1] == out.ambient - k + (c - 1)) --c;
      if (c == 0) break;
      ++support[c - 1];
      for (std::size_t r = c; r < k; ++r) support[r] = support[r - 1] + 1;
    }
  }
  if (std::set<std::string>(out.names.begin(), out.names.end()).size() != out.names.size())
    throw SchemaError(path + ".subspaces", "duplicate subspace name");
  if (!j.contains("sampling_vectors") || !j["sampling_vectors"].is_array())
    throw SchemaError(path + ".sampling_vectors", "missing sampling vectors");
  std::vector<Vector> cols;
  for (std::size_t c = 0; c < j["sampling_vectors"].size(); ++c)
    cols.push_back(parse_vector(j["sampling_vectors"][c], out.ambient, path + ".sampling_vectors[" + std::to_string(c) + "]"));
  out.sampling = columns_to_matrix(cols, out.ambient);
  return out;
}

inline void parse_tolerances(const nlohmann::json& j, Tolerances& tol) {
  if (!j.is_object()) throw SchemaError("tolerances", "must be an object");
  auto positive = [&](const char* key, double& field) {
    if (!j.contains(key)) return;
    if (!j[key].is_number() || !(j[key].get<double>() > 0.0)) throw SchemaError(std::string("tolerances.") + key, "must be a positive number");
    field = j[key].get<double>();
  };
  positive("rank_tol", tol.rank_tol);
  positive("spec_tol", tol.spec_tol);
  positive("conv_eps", tol.conv_eps);
  positive("close_eps", tol.close_eps);
  if (j.contains("max_iter")) {
    if (!j["max_iter"].is_number_unsigned() || j["max_iter"].get<std::int64_t>() <= 0)
      throw SchemaError("tolerances.max_iter", "must be a positive integer");
    tol.max_iter = j["max_iter"].get<int>();
  }
  for (const auto& [key, value] : j.items())
    if (key != "rank_tol" && key != "spec_tol" && key != "conv_eps" && key != "close_eps" && key != "max_iter")
      throw SchemaError("tolerances." + key, "unknown tolerance");
}

}  // namespace detail

/// Checks that every name a task refers to resolves. Runs before any
/// computation starts.
inline void validate_tasks(const Scenario& s) {
  auto need_subspace = [&](const std::string& path, const nlohmann::json& args, const char* key) {
    if (!args.contains(key) || !args[key].is_string()) throw SchemaError(path + "." + key, "missing subspace name");
    if (!s.subspaces.count(args[key].get<std::string>()))
      throw SchemaError(path + "." + key, "unknown subspace '" + args[key].get<std::string>() + "'");
  };
  auto need_sampling = [&](const std::string& path) {
    if (!s.sampling_set) throw SchemaError(path, "task needs a sampling_set");
  };
  for (std::size_t k = 0; k < s.tasks.size(); ++k) {
    const auto& t = s.tasks[k];
    const std::string path = "tasks[" + std::to_string(k) + "]";
    if (t.type == "dimension") {
      need_subspace(path, t.args, "subspace");
    } else if (t.type == "spectrum-curve" || t.type == "analyze-sis") {
      need_subspace(path, t.args, "subspace");
      need_sampling(path);
    } else if (t.type == "angle") {
      need_subspace(path, t.args, "u");
      need_subspace(path, t.args, "v");
      if (t.args.contains("frames")) {
        const auto& f = t.args["frames"];
        need_subspace(path + ".frames", f, "u_ominus");
        need_subspace(path + ".frames", f, "v_ominus");
      }
    } else if (t.type == "analyze-union") {
      const std::string mode = t.args.value("mode", std::string("sis"));
      if (mode == "sis") {
        need_sampling(path);
        if (!t.args.contains("union")) throw SchemaError(path + ".union", "missing list of subspaces");
        const auto names = detail::name_list(t.args["union"], path + ".union");
        if (names.empty()) throw SchemaError(path + ".union", "needs at least one subspace");
        for (const auto& n : names)
          if (!s.subspaces.count(n)) throw SchemaError(path + ".union", "unknown subspace '" + n + "'");
      } else if (mode == "finite-dim") {
        if (!s.finite_dim) throw SchemaError(path, "finite-dim union needs a finite_dim block");
        if (t.args.contains("union")) {
          for (const auto& n : detail::name_list(t.args["union"], path + ".union"))
            if (std::find(s.finite_dim->names.begin(), s.finite_dim->names.end(), n) == s.finite_dim->names.end())
              throw SchemaError(path + ".union", "unknown finite-dimensional subspace '" + n + "'");
        }
        if (s.finite_dim->names.empty()) throw SchemaError("finite_dim", "no subspaces declared");
      } else {
        throw SchemaError(path + ".mode", "unknown mode '" + mode + "'");
      }
    } else {
      throw SchemaError(path + ".type", "unknown task type '" + t.type + "'");
    }
  }
}

inline Scenario parse_scenario(const nlohmann::json& j, const std::filesystem::path& base_directory) {
  if (!j.is_object()) throw SchemaError("$", "scenario must be a JSON object");
  Scenario s;
  if (!j.contains("version") || !j["version"].is_string()) throw SchemaError("version", "missing version tag");
  s.version = j["version"].get<std::string>();
  if (s.version != kScenarioVersion) throw SchemaError("version", "unsupported version '" + s.version + "'");

  if (j.contains("dimension")) {
    if (!j["dimension"].is_number_unsigned() || j["dimension"].get<std::size_t>() == 0)
      throw SchemaError("dimension", "must be a positive integer");
    s.dimension = j["dimension"].get<std::size_t>();
  }
  s.grid = default_grid(s.dimension);
  if (j.contains("grid")) {
    if (!j["grid"].is_number_unsigned() || j["grid"].get<std::size_t>() == 0) throw SchemaError("grid", "must be a positive integer");
    s.grid = j["grid"].get<std::size_t>();
  }
  if (j.contains("tolerances")) detail::parse_tolerances(j["tolerances"], s.tolerances);

  if (j.contains("generators")) {
    if (!j["generators"].is_array()) throw SchemaError("generators", "must be an array");
    std::set<std::string> names;
    for (std::size_t k = 0; k < j["generators"].size(); ++k) {
      const std::string path = "generators[" + std::to_string(k) + "]";
      auto g = dsl::parse_generator(j["generators"][k], {s.dimension, base_directory}, path);
      if (!names.insert(g.name).second) throw SchemaError(path + ".name", "duplicate generator name '" + g.name + "'");
      s.generators.push_back(std::move(g));
    }
  }

  if (j.contains("subspaces")) {
    if (!j["subspaces"].is_object()) throw SchemaError("subspaces", "must be an object");
    for (const auto& [name, rec] : j["subspaces"].items()) {
      const std::string path = "subspaces." + name;
      SubspaceSpec spec;
      if (rec.is_array()) {
        spec.generators = detail::name_list(rec, path);
      } else if (rec.is_object() && rec.contains("generators")) {
        spec.generators = detail::name_list(rec["generators"], path + ".generators");
        spec.truncated = rec.value("truncated", false);
      } else {
        throw SchemaError(path, "expected a list of generator names");
      }
      for (std::size_t k = 0; k < spec.generators.size(); ++k) {
        const auto& g = spec.generators[k];
        if (std::none_of(s.generators.begin(), s.generators.end(), [&](const auto& x) { return x.name == g; }))
          throw SchemaError(path + "[" + std::to_string(k) + "]", "unknown generator '" + g + "'");
      }
      s.subspaces.emplace(name, std::move(spec));
    }
  }

  if (j.contains("sampling_set")) {
    s.sampling_set = detail::name_list(j["sampling_set"], "sampling_set");
    for (std::size_t k = 0; k < s.sampling_set->size(); ++k) {
      const auto& g = (*s.sampling_set)[k];
      if (std::none_of(s.generators.begin(), s.generators.end(), [&](const auto& x) { return x.name == g; }))
        throw SchemaError("sampling_set[" + std::to_string(k) + "]", "unknown generator '" + g + "'");
    }
  }

  if (j.contains("finite_dim")) s.finite_dim = detail::parse_finite_dim(j["finite_dim"]);

  if (j.contains("tasks")) {
    if (!j["tasks"].is_array()) throw SchemaError("tasks", "must be an array");
    for (std::size_t k = 0; k < j["tasks"].size(); ++k) {
      const auto& t = j["tasks"][k];
      const std::string path = "tasks[" + std::to_string(k) + "]";
      if (!t.is_object() || !t.contains("type") || !t["type"].is_string()) throw SchemaError(path + ".type", "missing task type");
      TaskSpec task{t["type"].get<std::string>(), t.value("name", std::string{}), t};
      s.tasks.push_back(std::move(task));
    }
  }
  validate_tasks(s);
  return s;
}

/// Reads and validates a scenario file. Sidecar fiber files are resolved
/// relative to the scenario's directory and folded into the input hash.
inline Scenario load_scenario(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError("$", std::string("invalid JSON: ") + e.what());
  }
  Scenario s = parse_scenario(j, path.parent_path());
  s.source_name = path.filename().string();
  std::string hashed = text;
  for (const auto& g : s.generators)
    if (const auto* sampled = std::get_if<dsl::SampledFibers>(&g.body)) hashed += read_file(sampled->source);
  s.input_hash = sha256_hex(hashed);
  return s;
}

}  // namespace fsis
