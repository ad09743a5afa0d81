#pragma once

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "baselines.hpp"
#include "dataset.hpp"
#include "decomposition.hpp"
#include "errors.hpp"
#include "protocols.hpp"
#include "recommenders.hpp"

namespace ncdrec {

/// Everything a CLI run needs. Read from flat `key = value` files; command-line flags
/// override individual keys through set().
struct RunConfig {
  std::string ratings;
  std::string ratings_format = "ml100k";
  std::string decomposition;
  std::string decomposition_format = "ml100k";
  std::string unlabeled = "error";  // or catch-all
  bool skip_unknown_items = false;

  EngineConfig engine;
  ColdStartConfig coldstart;
  Index coldstart_max_ratings = 10;

  ProtocolConfig protocol;
  std::vector<std::string> methods{"ncdrec"};
  std::vector<std::string> protocols{"standard"};
  std::string splits_dir;  // directory with u1.base/u1.test ... u5.base/u5.test
  std::string weighting = "binary";
  double katz_attenuation = 0.0;

  std::string output = "out";

  void set(const std::string& key, const std::string& value);
  void load(const std::string& path);
  /// All keys in a fixed order, one `key = value` per line; load() of this text reproduces the config.
  std::string echo() const;
  std::vector<std::pair<std::string, std::string>> entries() const;
  void validate() const;

  NcdrecParams ncdrec_params() const { return {engine, coldstart, coldstart_max_ratings}; }
  GraphParams graph_params() const {
    GraphParams g;
    if (weighting == "binary") g.weighting = EdgeWeighting::binary;
    else if (weighting == "rating") g.weighting = EdgeWeighting::rating;
    else throw ParameterError("weighting must be 'binary' or 'rating'");
    g.katz_attenuation = katz_attenuation;
    return g;
  }
  DecompositionOptions decomposition_options() const {
    DecompositionOptions o;
    if (unlabeled == "error") o.unlabeled = UnlabeledPolicy::error;
    else if (unlabeled == "catch-all") o.unlabeled = UnlabeledPolicy::catch_all;
    else throw ParameterError("unlabeled must be 'error' or 'catch-all'");
    o.skip_unknown_items = skip_unknown_items;
    return o;
  }
};

namespace detail {

inline std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  for (auto part : split_on(value, ","))
    if (!trim(part).empty()) out.emplace_back(trim(part));
  return out;
}

template <class T>
T parse_value(const std::string& key, const std::string& value) {
  T out{};
  if (!parse_number(trim(value), out)) throw ParameterError("invalid value '" + value + "' for " + key);
  return out;
}

inline bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw ParameterError("invalid boolean '" + value + "' for " + key);
}

inline std::string format_double(double x) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ptr);
}

inline std::string join(const std::vector<std::string>& parts) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? "," : "") + parts[i];
  return out;
}

}  // namespace detail

inline void RunConfig::set(const std::string& key, const std::string& raw) {
  using detail::parse_value;
  const std::string value(detail::trim(raw));
  if (key == "ratings") ratings = value;
  else if (key == "ratings_format") ratings_format = value;
  else if (key == "decomposition") decomposition = value;
  else if (key == "decomposition_format") decomposition_format = value;
  else if (key == "unlabeled") unlabeled = value;
  else if (key == "skip_unknown_items") skip_unknown_items = detail::parse_bool(key, value);
  else if (key == "epsilon") engine.epsilon = parse_value<double>(key, value);
  else if (key == "f") engine.f = parse_value<Index>(key, value);
  else if (key == "lanczos_steps") engine.M = parse_value<Index>(key, value);
  else if (key == "svd_tol") engine.tol = parse_value<double>(key, value);
  else if (key == "max_restarts") engine.max_restarts = parse_value<int>(key, value);
  else if (key == "seed") engine.seed = parse_value<std::uint64_t>(key, value);
  else if (key == "alpha") coldstart.alpha = parse_value<double>(key, value);
  else if (key == "beta") coldstart.beta = parse_value<double>(key, value);
  else if (key == "coldstart_tol") coldstart.tol = parse_value<double>(key, value);
  else if (key == "coldstart_maxit") coldstart.maxit = parse_value<int>(key, value);
  else if (key == "coldstart_max_ratings") coldstart_max_ratings = parse_value<Index>(key, value);
  else if (key == "probe_fraction") protocol.probe_fraction = parse_value<double>(key, value);
  else if (key == "candidate_pool") protocol.candidate_pool = parse_value<Index>(key, value);
  else if (key == "relevance_threshold") protocol.relevance_threshold = parse_value<double>(key, value);
  else if (key == "head_mass") protocol.head_mass = parse_value<double>(key, value);
  else if (key == "new_user_count") protocol.new_user_count = parse_value<Index>(key, value);
  else if (key == "min_ratings") protocol.min_ratings = parse_value<Index>(key, value);
  else if (key == "keep_fractions") {
    protocol.keep_fractions.clear();
    for (const auto& part : detail::split_list(value)) protocol.keep_fractions.push_back(parse_value<double>(key, part));
  } else if (key == "protocol_seed") protocol.seed = parse_value<std::uint64_t>(key, value);
  else if (key == "max_n") protocol.max_n = parse_value<std::size_t>(key, value);
  else if (key == "threads") protocol.threads = parse_value<unsigned>(key, value);
  else if (key == "methods") methods = detail::split_list(value);
  else if (key == "protocols") protocols = detail::split_list(value);
  else if (key == "splits_dir") splits_dir = value;
  else if (key == "weighting") weighting = value;
  else if (key == "katz_attenuation") katz_attenuation = parse_value<double>(key, value);
  else if (key == "output") output = value;
  else throw ParameterError("unknown config key '" + key + "'");
}

inline void RunConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path, 0, "cannot open config file");
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view text = detail::trim(line);
    if (text.empty() || text.front() == '#') continue;
    const auto eq = text.find('=');
    if (eq == std::string_view::npos) throw ParseError(path, line_no, "expected 'key = value'");
    try {
      set(std::string(detail::trim(text.substr(0, eq))), std::string(detail::trim(text.substr(eq + 1))));
    } catch (const ParameterError& e) {
      throw ParseError(path, line_no, e.what());
    }
  }
}

inline std::vector<std::pair<std::string, std::string>> RunConfig::entries() const {
  using detail::format_double;
  std::vector<std::string> fractions;
  for (double f : protocol.keep_fractions) fractions.push_back(format_double(f));
  return {
      {"ratings", ratings},
      {"ratings_format", ratings_format},
      {"decomposition", decomposition},
      {"decomposition_format", decomposition_format},
      {"unlabeled", unlabeled},
      {"skip_unknown_items", skip_unknown_items ? "true" : "false"},
      {"epsilon", format_double(engine.epsilon)},
      {"f", std::to_string(engine.f)},
      {"lanczos_steps", std::to_string(engine.M)},
      {"svd_tol", format_double(engine.tol)},
      {"max_restarts", std::to_string(engine.max_restarts)},
      {"seed", std::to_string(engine.seed)},
      {"alpha", format_double(coldstart.alpha)},
      {"beta", format_double(coldstart.beta)},
      {"coldstart_tol", format_double(coldstart.tol)},
      {"coldstart_maxit", std::to_string(coldstart.maxit)},
      {"coldstart_max_ratings", std::to_string(coldstart_max_ratings)},
      {"probe_fraction", format_double(protocol.probe_fraction)},
      {"candidate_pool", std::to_string(protocol.candidate_pool)},
      {"relevance_threshold", format_double(protocol.relevance_threshold)},
      {"head_mass", format_double(protocol.head_mass)},
      {"new_user_count", std::to_string(protocol.new_user_count)},
      {"min_ratings", std::to_string(protocol.min_ratings)},
      {"keep_fractions", detail::join(fractions)},
      {"protocol_seed", std::to_string(protocol.seed)},
      {"max_n", std::to_string(protocol.max_n)},
      {"threads", std::to_string(protocol.threads)},
      {"methods", detail::join(methods)},
      {"protocols", detail::join(protocols)},
      {"splits_dir", splits_dir},
      {"weighting", weighting},
      {"katz_attenuation", format_double(katz_attenuation)},
      {"output", output},
  };
}

inline std::string RunConfig::echo() const {
  std::string out;
  for (const auto& [k, v] : entries()) out += k + " = " + v + "\n";
  return out;
}

inline void RunConfig::validate() const {
  coldstart.validate();
  protocol.validate();
  if (coldstart_max_ratings < 0) throw ParameterError("coldstart_max_ratings must be nonnegative");
  if (katz_attenuation < 0.0) throw ParameterError("katz_attenuation must be nonnegative");
  for (const auto& m : methods)
    if (std::find(known_methods().begin(), known_methods().end(), m) == known_methods().end())
      throw ParameterError("unknown method '" + m + "'");
  for (const auto& p : protocols)
    if (p != "standard" && p != "long-tail" && p != "new-users" && p != "doa-splits")
      throw ParameterError("unknown protocol '" + p + "'");
  (void)parse_ratings_format(ratings_format);
  (void)parse_decomposition_format(decomposition_format);
  (void)graph_params();
  (void)decomposition_options();
}

}  // namespace ncdrec
