#include "chainlab/config.hpp"

#include <set>

#include <json.hpp>

#include "chainlab/errors.hpp"
#include "chainlab/io.hpp"

namespace chainlab {

using nlohmann::json;

namespace {

template <class T>
void read(const json& doc, const char* key, T& out) {
  const auto it = doc.find(key);
  if (it == doc.end()) return;
  try {
    out = it->get<T>();
  } catch (const json::exception&) {
    throw InvalidArgument(std::string("config: bad value for '") + key + "'");
  }
}

void check_keys(const json& doc, const std::set<std::string>& allowed, const std::string& where) {
  if (!doc.is_object()) throw InvalidArgument("config: " + where + " must be an object");
  for (const auto& [key, value] : doc.items()) {
    if (!allowed.count(key)) throw InvalidArgument("config: unknown key '" + where + key + "'");
  }
}

// Unsigned fields must not silently accept negative numbers.
void read_count(const json& doc, const char* key, std::size_t& out) {
  const auto it = doc.find(key);
  if (it == doc.end()) return;
  if (!it->is_number_unsigned()) {
    throw InvalidArgument(std::string("config: '") + key + "' must be a non-negative integer");
  }
  out = it->get<std::size_t>();
}

}  // namespace

void apply_config_json(std::string_view text, ExperimentSpec& spec) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InvalidArgument(std::string("config: ") + e.what());
  }
  check_keys(doc,
             {"target", "chains", "warmup", "sampling", "groups", "sampler", "adaptation", "init",
              "root_seed", "rhat_threshold", "target_ess", "max_total_iterations", "replications",
              "seeds", "sweep_chain_counts", "sweep_replicates", "bias_threshold", "format",
              "threads", "oracle"},
             "");
  auto& c = spec.base;
  read(doc, "target", spec.target);
  read_count(doc, "chains", c.chains);
  read_count(doc, "warmup", c.warmup);
  read_count(doc, "sampling", c.sampling);
  read_count(doc, "groups", c.groups);
  if (doc.contains("sampler")) {
    std::string token;
    read(doc, "sampler", token);
    c.sampler = parse_sampler_kind(token);
  }
  if (doc.contains("adaptation")) {
    std::string token;
    read(doc, "adaptation", token);
    c.adaptation = parse_adaptation_mode(token);
  }
  if (doc.contains("init")) {
    const auto& init = doc["init"];
    check_keys(init, {"kind", "scale", "points"}, "init.");
    if (init.contains("kind")) {
      std::string token;
      read(init, "kind", token);
      c.init.kind = parse_init_kind(token);
    }
    read(init, "scale", c.init.scale);
    read(init, "points", c.init.points);
  }
  if (doc.contains("root_seed") && !doc["root_seed"].is_number_unsigned()) {
    throw InvalidArgument("config: 'root_seed' must be a non-negative integer");
  }
  read(doc, "root_seed", c.root_seed);
  read(doc, "rhat_threshold", c.rhat_threshold);
  if (doc.contains("target_ess")) {
    if (doc["target_ess"].is_null()) {
      c.target_ess.reset();
    } else {
      double v = 0.0;
      read(doc, "target_ess", v);
      c.target_ess = v;
    }
  }
  read_count(doc, "max_total_iterations", c.max_total_iterations);
  read_count(doc, "replications", spec.replications);
  read(doc, "seeds", spec.seeds);
  read(doc, "sweep_chain_counts", spec.sweep_chain_counts);
  read_count(doc, "sweep_replicates", spec.sweep_replicates);
  read(doc, "bias_threshold", spec.bias_threshold);
  if (doc.contains("format")) {
    std::string token;
    read(doc, "format", token);
    spec.format = parse_draw_format(token);
  }
  read_count(doc, "threads", spec.threads);
  if (doc.contains("oracle")) {
    const auto& o = doc["oracle"];
    check_keys(o,
               {"mu0", "sigma0", "mu", "sigma", "t_grid", "two_state_q", "two_state_steps",
                "groups", "replicates_per_group"},
               "oracle.");
    read(o, "mu0", spec.oracle.ou.mu0);
    read(o, "sigma0", spec.oracle.ou.sigma0);
    read(o, "mu", spec.oracle.ou.mu);
    read(o, "sigma", spec.oracle.ou.sigma);
    read(o, "t_grid", spec.oracle.t_grid);
    read(o, "two_state_q", spec.oracle.two_state_q);
    read_count(o, "two_state_steps", spec.oracle.two_state_steps);
    read_count(o, "groups", spec.oracle.groups);
    read_count(o, "replicates_per_group", spec.oracle.replicates_per_group);
  }
}

void apply_config_file(const std::filesystem::path& path, ExperimentSpec& spec) {
  std::string text;
  try {
    text = read_text_file(path);
  } catch (const RuntimeFailure& e) {
    throw InvalidArgument(std::string("config: ") + e.what());
  }
  apply_config_json(text, spec);
}

std::string config_to_json(const ExperimentSpec& spec, int indent) {
  const auto& c = spec.base;
  json doc = {
      {"kind", std::string(to_string(spec.kind))},
      {"target", spec.target},
      {"chains", c.chains},
      {"warmup", c.warmup},
      {"sampling", c.sampling},
      {"groups", c.groups},
      {"sampler", std::string(to_string(c.sampler))},
      {"adaptation", std::string(to_string(c.adaptation))},
      {"init",
       {{"kind", std::string(to_string(c.init.kind))},
        {"scale", c.init.scale},
        {"points", c.init.points}}},
      {"root_seed", c.root_seed},
      {"rhat_threshold", c.rhat_threshold},
      {"target_ess", c.target_ess ? json(*c.target_ess) : json(nullptr)},
      {"max_total_iterations", c.max_total_iterations},
      {"format", std::string(to_string(spec.format))},
  };
  switch (spec.kind) {
    case ExperimentKind::replicate:
      doc["replications"] = spec.replications;
      doc["seeds"] = spec.seeds;
      break;
    case ExperimentKind::sweep_chains:
      doc["sweep_chain_counts"] = spec.sweep_chain_counts;
      doc["sweep_replicates"] = spec.sweep_replicates;
      doc["bias_threshold"] = spec.bias_threshold;
      break;
    case ExperimentKind::oracle:
      doc["oracle"] = {{"mu0", spec.oracle.ou.mu0},
                       {"sigma0", spec.oracle.ou.sigma0},
                       {"mu", spec.oracle.ou.mu},
                       {"sigma", spec.oracle.ou.sigma},
                       {"t_grid", spec.oracle.t_grid},
                       {"two_state_q", spec.oracle.two_state_q},
                       {"two_state_steps", spec.oracle.two_state_steps},
                       {"groups", spec.oracle.groups},
                       {"replicates_per_group", spec.oracle.replicates_per_group}};
      break;
    default:
      break;
  }
  return doc.dump(indent);
}

}  // namespace chainlab
