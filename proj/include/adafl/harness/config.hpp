#pragma once

// Run configuration file: INI-style sections, one key per line.
//
//   [experiment]  seed rounds clients threads eval_every output_dir
//   [data]        source samples test_samples features classes spread seed
//                 partition shards_per_client train_images train_labels
//                 test_images test_labels
//   [model]       hidden
//   [selection]   attention alpha gamma_start gamma_end fractions
//   [local]       strategy epochs batch_size learning_rate momentum prox_mu lr_decay
//   [metrics]     targets average_window stopping_window
//
// Every key is optional; unknown sections or keys are errors. Overrides use
// the dotted form `section.key=value`.

#include <cstdint>
#include <fstream>
#include <optional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "adafl/error.hpp"
#include "adafl/federation.hpp"

namespace adafl {

enum class DataSource { kSynthetic, kIdx };
enum class PartitionKind { kShards, kIid };

struct DataConfig {
  DataSource source = DataSource::kSynthetic;
  std::size_t samples = 5000;  // training samples; test samples come on top
  std::size_t test_samples = 1000;
  std::size_t features = 20;
  int classes = 10;
  double spread = 1.0;
  std::optional<std::uint64_t> seed;  // defaults to the experiment seed
  PartitionKind partition = PartitionKind::kShards;
  std::size_t shards_per_client = 2;
  std::string train_images;
  std::string train_labels;
  std::string test_images;
  std::string test_labels;
};

struct RunConfig {
  FederationConfig federation;
  DataConfig data;
  std::string output_dir = "out";
  std::vector<double> targets;
  std::size_t average_window = 10;
  std::size_t stopping_window = 5;
  /// Effective key/value pairs after overrides, `section.key` → text.
  std::map<std::string, std::string> echo;

  std::uint64_t data_seed() const { return data.seed.value_or(federation.seed); }

  void validate() const {
    federation.validate();
    detail::require(average_window >= 1 && stopping_window >= 1, "metric windows must be >= 1");
    for (double t : targets) detail::require(t > 0.0 && t < 1.0, "target accuracies must lie in (0, 1)");
    if (data.source == DataSource::kSynthetic) {
      detail::require(data.classes >= 1 && data.features >= 1, "synthetic data needs classes and features >= 1");
      detail::require(data.spread > 0.0, "data.spread must be > 0");
    } else {
      detail::require(!data.train_images.empty() && !data.train_labels.empty() && !data.test_images.empty() &&
                          !data.test_labels.empty(),
                      "idx data needs train_images, train_labels, test_images and test_labels");
    }
  }
};

namespace detail {

inline const std::map<std::string, std::set<std::string>>& config_schema() {
  static const std::map<std::string, std::set<std::string>> schema{
      {"experiment", {"seed", "rounds", "clients", "threads", "eval_every", "output_dir"}},
      {"data",
       {"source", "samples", "test_samples", "features", "classes", "spread", "seed", "partition", "shards_per_client",
        "train_images", "train_labels", "test_images", "test_labels"}},
      {"model", {"hidden"}},
      {"selection", {"attention", "alpha", "gamma_start", "gamma_end", "fractions"}},
      {"local", {"strategy", "epochs", "batch_size", "learning_rate", "momentum", "prox_mu", "lr_decay"}},
      {"metrics", {"targets", "average_window", "stopping_window"}},
  };
  return schema;
}

inline void check_key(const std::string& section, const std::string& key) {
  const auto& schema = config_schema();
  const auto it = schema.find(section);
  if (it == schema.end()) throw ConfigError("unknown config section [" + section + "]");
  if (!it->second.contains(key)) throw ConfigError("unknown config key '" + section + "." + key + "'");
}

template <typename T>
T parse_value(const std::string& key, const std::string& text) {
  std::istringstream in(text);
  T value{};
  in >> value;
  if (!in.fail() && !in.eof()) in >> std::ws;
  if (in.fail() || !in.eof()) throw ConfigError("config key '" + key + "': cannot parse '" + text + "'");
  if constexpr (std::is_unsigned_v<T>) {
    if (text.find('-') != std::string::npos) throw ConfigError("config key '" + key + "' must be nonnegative");
  }
  return value;
}

inline bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
  if (text == "false" || text == "0" || text == "no" || text == "off") return false;
  throw ConfigError("config key '" + key + "': expected a boolean, got '" + text + "'");
}

template <typename T>
std::vector<T> parse_list(const std::string& key, const std::string& text) {
  std::vector<T> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, ',')) {
    const auto first = item.find_first_not_of(" \t");
    if (first == std::string::npos) continue;
    out.push_back(parse_value<T>(key, item.substr(first, item.find_last_not_of(" \t") - first + 1)));
  }
  return out;
}

}  // namespace detail

/// Builds a RunConfig from parsed key/values (`section.key` → text).
inline RunConfig config_from_values(const std::map<std::string, std::string>& values) {
  using detail::parse_value;
  RunConfig cfg;
  auto& fed = cfg.federation;
  for (const auto& [path, text] : values) {
    const auto dot = path.find('.');
    const std::string section = path.substr(0, dot);
    const std::string key = dot == std::string::npos ? std::string{} : path.substr(dot + 1);
    detail::check_key(section, key);

    if (section == "experiment") {
      if (key == "seed") fed.seed = parse_value<std::uint64_t>(path, text);
      else if (key == "rounds") fed.rounds = parse_value<std::size_t>(path, text);
      else if (key == "clients") fed.num_clients = parse_value<std::size_t>(path, text);
      else if (key == "threads") fed.threads = parse_value<std::size_t>(path, text);
      else if (key == "eval_every") fed.eval_every = parse_value<std::size_t>(path, text);
      else if (key == "output_dir") cfg.output_dir = text;
    } else if (section == "data") {
      auto& d = cfg.data;
      if (key == "source") {
        if (text == "synthetic") d.source = DataSource::kSynthetic;
        else if (text == "idx") d.source = DataSource::kIdx;
        else throw ConfigError("data.source must be 'synthetic' or 'idx'");
      } else if (key == "partition") {
        if (text == "shards") d.partition = PartitionKind::kShards;
        else if (text == "iid") d.partition = PartitionKind::kIid;
        else throw ConfigError("data.partition must be 'shards' or 'iid'");
      }
      else if (key == "samples") d.samples = parse_value<std::size_t>(path, text);
      else if (key == "test_samples") d.test_samples = parse_value<std::size_t>(path, text);
      else if (key == "features") d.features = parse_value<std::size_t>(path, text);
      else if (key == "classes") d.classes = parse_value<int>(path, text);
      else if (key == "spread") d.spread = parse_value<double>(path, text);
      else if (key == "seed") d.seed = parse_value<std::uint64_t>(path, text);
      else if (key == "shards_per_client") d.shards_per_client = parse_value<std::size_t>(path, text);
      else if (key == "train_images") d.train_images = text;
      else if (key == "train_labels") d.train_labels = text;
      else if (key == "test_images") d.test_images = text;
      else if (key == "test_labels") d.test_labels = text;
    } else if (section == "model") {
      fed.hidden_layers = detail::parse_list<std::size_t>(path, text);
    } else if (section == "selection") {
      if (key == "attention") fed.attention = detail::parse_bool(path, text);
      else if (key == "alpha") fed.alpha = parse_value<double>(path, text);
      else if (key == "gamma_start") fed.gamma_start = parse_value<double>(path, text);
      else if (key == "gamma_end") fed.gamma_end = parse_value<double>(path, text);
      else if (key == "fractions") fed.num_fractions = parse_value<std::size_t>(path, text);
    } else if (section == "local") {
      auto& l = fed.local;
      if (key == "strategy") {
        try {
          l.strategy = parse_strategy(text);
        } catch (const InvalidArgument& e) {
          throw ConfigError(e.what());
        }
      }
      else if (key == "epochs") l.epochs = parse_value<std::size_t>(path, text);
      else if (key == "batch_size") l.batch_size = parse_value<std::size_t>(path, text);
      else if (key == "learning_rate") l.learning_rate = parse_value<double>(path, text);
      else if (key == "momentum") l.momentum = parse_value<double>(path, text);
      else if (key == "prox_mu") l.prox_mu = parse_value<double>(path, text);
      else if (key == "lr_decay") fed.lr_decay = parse_value<double>(path, text);
    } else if (section == "metrics") {
      if (key == "targets") cfg.targets = detail::parse_list<double>(path, text);
      else if (key == "average_window") cfg.average_window = parse_value<std::size_t>(path, text);
      else if (key == "stopping_window") cfg.stopping_window = parse_value<std::size_t>(path, text);
    }
  }
  cfg.echo = values;
  try {
    cfg.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("invalid configuration: ") + e.what());
  }
  return cfg;
}

/// Reads `section.key` pairs from INI text.
inline std::map<std::string, std::string> read_config_values(std::istream& in, const std::string& origin) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(origin + ": " + e.message() + " (line " + std::to_string(e.line()) + ")");
  }
  std::map<std::string, std::string> values;
  for (const auto& [section, body] : tree) {
    if (body.empty()) throw ConfigError(origin + ": key '" + section + "' must appear inside a [section]");
    for (const auto& [key, node] : body) {
      detail::check_key(section, key);
      values[section + "." + key] = node.get_value<std::string>();
    }
  }
  return values;
}

/// Applies `section.key=value` overrides on top of `values`.
inline void apply_overrides(std::map<std::string, std::string>& values, const std::vector<std::string>& overrides) {
  for (const auto& item : overrides) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw ConfigError("override '" + item + "' is not of the form section.key=value");
    const std::string path = item.substr(0, eq);
    const auto dot = path.find('.');
    if (dot == std::string::npos) throw ConfigError("override key '" + path + "' must be section.key");
    detail::check_key(path.substr(0, dot), path.substr(dot + 1));
    values[path] = item.substr(eq + 1);
  }
}

inline RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides = {}) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  auto values = read_config_values(in, path);
  apply_overrides(values, overrides);
  return config_from_values(values);
}

inline RunConfig parse_config(const std::string& text, const std::vector<std::string>& overrides = {}) {
  std::istringstream in(text);
  auto values = read_config_values(in, "<string>");
  apply_overrides(values, overrides);
  return config_from_values(values);
}

}  // namespace adafl
