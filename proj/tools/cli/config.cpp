#include "config.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <map>

#include "soda/error.hpp"

namespace soda::cli {

namespace {

[[noreturn]] void bad(const std::string& what) { throw Error(ErrorCode::InvalidConfig, what); }

template <typename T>
T as(const nlohmann::json& v, const std::string& key) {
  if constexpr (std::is_same_v<T, bool>) {
    if (!v.is_boolean()) bad("config key '" + key + "' must be a boolean");
  } else if constexpr (std::is_same_v<T, std::string>) {
    if (!v.is_string()) bad("config key '" + key + "' must be a string");
  } else if constexpr (std::is_floating_point_v<T>) {
    if (!v.is_number()) bad("config key '" + key + "' must be a number");
  } else {
    if (!v.is_number_integer()) bad("config key '" + key + "' must be an integer");
    if constexpr (std::is_unsigned_v<T>) {
      if (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0)
        bad("config key '" + key + "' must be non-negative");
    }
  }
  return v.get<T>();
}

using Setter = std::function<void(Config&, const nlohmann::json&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"arity", [](Config& c, const nlohmann::json& v) { c.arity = as<int>(v, "arity"); }},
      {"persons", [](Config& c, const nlohmann::json& v) { c.persons = as<std::size_t>(v, "persons"); }},
      {"gamma1",
       [](Config& c, const nlohmann::json& v) {
         c.gamma1 = v.is_null() ? std::nullopt : std::optional<double>(as<double>(v, "gamma1"));
       }},
      {"gamma2",
       [](Config& c, const nlohmann::json& v) {
         c.gamma2 = v.is_null() ? std::nullopt : std::optional<double>(as<double>(v, "gamma2"));
       }},
      {"interaction", [](Config& c, const nlohmann::json& v) { c.interaction = as<bool>(v, "interaction"); }},
      {"gibbs_burnin", [](Config& c, const nlohmann::json& v) { c.gibbs_burnin = as<std::size_t>(v, "gibbs_burnin"); }},
      {"gibbs_samples",
       [](Config& c, const nlohmann::json& v) { c.gibbs_samples = as<std::size_t>(v, "gibbs_samples"); }},
      {"p", [](Config& c, const nlohmann::json& v) { c.p = as<std::uint32_t>(v, "p"); }},
      {"order_k", [](Config& c, const nlohmann::json& v) { c.order_k = as<int>(v, "order_k"); }},
      {"window", [](Config& c, const nlohmann::json& v) { c.window = as<std::size_t>(v, "window"); }},
      {"stride", [](Config& c, const nlohmann::json& v) { c.stride = as<std::size_t>(v, "stride"); }},
      {"fdr", [](Config& c, const nlohmann::json& v) { c.fdr = as<double>(v, "fdr"); }},
      {"fdr_method", [](Config& c, const nlohmann::json& v) { c.fdr_method = as<std::string>(v, "fdr_method"); }},
      {"null_reps", [](Config& c, const nlohmann::json& v) { c.null_reps = as<std::size_t>(v, "null_reps"); }},
      {"null_mode", [](Config& c, const nlohmann::json& v) { c.null_mode = as<std::string>(v, "null_mode"); }},
      {"top_n", [](Config& c, const nlohmann::json& v) { c.top_n = as<std::size_t>(v, "top_n"); }},
      {"lambda", [](Config& c, const nlohmann::json& v) { c.lambda = as<std::string>(v, "lambda"); }},
      {"k_neighbors", [](Config& c, const nlohmann::json& v) { c.k_neighbors = as<std::size_t>(v, "k_neighbors"); }},
      {"split_ratio", [](Config& c, const nlohmann::json& v) { c.split_ratio = as<double>(v, "split_ratio"); }},
      {"seed", [](Config& c, const nlohmann::json& v) { c.seed = as<std::uint64_t>(v, "seed"); }},
  };
  return table;
}

}  // namespace

void Config::validate() const {
  if (arity != 3 && arity != 5) bad("arity must be 3 or 5");
  for (const auto& [name, g] : {std::pair{"gamma1", gamma1}, std::pair{"gamma2", gamma2}})
    if (g && (!std::isfinite(*g) || *g < 0.0)) bad(std::string(name) + " must be finite and >= 0");
  if (gibbs_samples < 1) bad("gibbs_samples must be at least 1");
  if (p < 1 || p > kMaxAlphabet) bad("p must lie in [1, 4096]");
  if (order_k < 0 || order_k > 2) bad("order_k must lie in [0, 2]");
  if (window < static_cast<std::size_t>(order_k) + 2) bad("window must be at least order_k + 2");
  if (stride < 1) bad("stride must be at least 1");
  if (!(fdr > 0.0 && fdr < 1.0)) bad("fdr must lie in (0, 1)");
  if (fdr_method != "by" && fdr_method != "bh") bad("fdr_method must be 'by' or 'bh'");
  if (null_reps < 30) bad("null_reps must be at least 30");
  if (null_mode != "pooled" && null_mode != "percell") bad("null_mode must be 'pooled' or 'percell'");
  if (top_n < 1) bad("top_n must be at least 1");
  if (lambda != "closed" && lambda != "cv" && lambda != "none") bad("lambda must be 'closed', 'cv' or 'none'");
  if (k_neighbors < 1) bad("k_neighbors must be at least 1");
  if (!(split_ratio > 0.0 && split_ratio < 1.0)) bad("split_ratio must lie in (0, 1)");
}

info::LambdaPolicy Config::lambda_policy() const {
  if (lambda == "cv") return info::LambdaPolicy::cross_validated();
  if (lambda == "none") return info::LambdaPolicy::none();
  return info::LambdaPolicy::closed_form();
}

loc::FdrMethod Config::method() const { return fdr_method == "bh" ? loc::FdrMethod::BH : loc::FdrMethod::BY; }

loc::NullMode Config::null_model() const {
  return null_mode == "percell" ? loc::NullMode::PerCell : loc::NullMode::Pooled;
}

loc::SurfaceSpec Config::surface_spec() const { return {window, stride, order_k, null_reps}; }

nlohmann::ordered_json Config::to_json() const {
  nlohmann::ordered_json j;
  j["arity"] = arity;
  j["persons"] = persons;
  j["gamma1"] = gamma1 ? nlohmann::ordered_json(*gamma1) : nlohmann::ordered_json();
  j["gamma2"] = gamma2 ? nlohmann::ordered_json(*gamma2) : nlohmann::ordered_json();
  j["interaction"] = interaction;
  j["gibbs_burnin"] = gibbs_burnin;
  j["gibbs_samples"] = gibbs_samples;
  j["p"] = p;
  j["order_k"] = order_k;
  j["window"] = window;
  j["stride"] = stride;
  j["fdr"] = fdr;
  j["fdr_method"] = fdr_method;
  j["null_reps"] = null_reps;
  j["null_mode"] = null_mode;
  j["top_n"] = top_n;
  j["lambda"] = lambda;
  j["k_neighbors"] = k_neighbors;
  j["split_ratio"] = split_ratio;
  j["seed"] = seed;
  return j;
}

Config apply_json(Config base, const nlohmann::json& doc) {
  if (!doc.is_object()) bad("config must be a flat JSON object");
  for (const auto& [key, value] : doc.items()) {
    const auto it = setters().find(key);
    if (it == setters().end()) bad("unknown config key '" + key + "'");
    try {
      it->second(base, value);
    } catch (const nlohmann::json::exception&) {
      bad("config key '" + key + "' is out of range for its type");
    }
  }
  return base;
}

Config load_config(const std::filesystem::path& path, Config base) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open config " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    bad(path.string() + ": " + e.what());
  }
  return apply_json(std::move(base), doc);
}

}  // namespace soda::cli
