#include "feddig/exp/config.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "feddig/data/dataset.hpp"
#include "feddig/error.hpp"
#include "feddig/util/hash.hpp"

namespace feddig::exp {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <typename T>
T parse_number(std::string_view key, std::string_view text) {
  T value{};
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  require(ec == std::errc{} && ptr == end, ErrorCategory::kConfig,
          fmt::format("bad value '{}' for key '{}'", text, key));
  return value;
}

bool parse_bool(std::string_view key, std::string_view text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw Error(ErrorCategory::kConfig, fmt::format("bad boolean '{}' for key '{}'", text, key));
}

std::vector<double> parse_list(std::string_view key, std::string_view text) {
  std::vector<double> out;
  std::size_t begin = 0;
  while (begin < text.size()) {
    auto end = text.find(',', begin);
    if (end == std::string_view::npos) end = text.size();
    const auto item = trim(text.substr(begin, end - begin));
    if (!item.empty()) out.push_back(parse_number<double>(key, item));
    begin = end + 1;
  }
  return out;
}

struct Field {
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, std::string_view, std::string_view)> set;
};

template <typename T>
Field number_field(T RunConfig::*member) {
  return {[member](const RunConfig& c) { return fmt::format("{}", c.*member); },
          [member](RunConfig& c, std::string_view k, std::string_view v) { c.*member = parse_number<T>(k, v); }};
}

Field string_field(std::string RunConfig::*member) {
  return {[member](const RunConfig& c) { return c.*member; },
          [member](RunConfig& c, std::string_view, std::string_view v) { c.*member = std::string(v); }};
}

Field bool_field(bool RunConfig::*member) {
  return {[member](const RunConfig& c) { return std::string(c.*member ? "true" : "false"); },
          [member](RunConfig& c, std::string_view k, std::string_view v) { c.*member = parse_bool(k, v); }};
}

// Ordered field table; serialization follows this order.
const std::vector<std::pair<std::string, Field>>& fields() {
  static const std::vector<std::pair<std::string, Field>> table = {
      {"name", string_field(&RunConfig::name)},
      {"dataset", string_field(&RunConfig::dataset)},
      {"sample_budget", number_field(&RunConfig::sample_budget)},
      {"synthetic_train", number_field(&RunConfig::synthetic_train)},
      {"synthetic_test", number_field(&RunConfig::synthetic_test)},
      {"synthetic_seed", number_field(&RunConfig::synthetic_seed)},
      {"clients", number_field(&RunConfig::clients)},
      {"mu", number_field(&RunConfig::mu)},
      {"split_seed", number_field(&RunConfig::split_seed)},
      {"partition_seed", number_field(&RunConfig::partition_seed)},
      {"feddig", bool_field(&RunConfig::feddig)},
      {"algorithm", string_field(&RunConfig::algorithm)},
      {"fedprox_mu", number_field(&RunConfig::fedprox_mu)},
      {"digest_mode", string_field(&RunConfig::digest_mode)},
      {"spd", number_field(&RunConfig::spd)},
      {"strategy", string_field(&RunConfig::strategy)},
      {"mix_weights",
       {[](const RunConfig& c) { return fmt::format("{}", fmt::join(c.mix_weights, ",")); },
        [](RunConfig& c, std::string_view k, std::string_view v) { c.mix_weights = parse_list(k, v); }}},
      {"epsilon", number_field(&RunConfig::epsilon)},
      {"iterations", number_field(&RunConfig::iterations)},
      {"learning_rate", number_field(&RunConfig::learning_rate)},
      {"momentum", number_field(&RunConfig::momentum)},
      {"batch_size", number_field(&RunConfig::batch_size)},
      {"local_epochs", number_field(&RunConfig::local_epochs)},
      {"seed", number_field(&RunConfig::seed)},
      {"scenario", string_field(&RunConfig::scenario)},
      {"scenario_at", number_field(&RunConfig::scenario_at)},
      {"scenario_until", number_field(&RunConfig::scenario_until)},
      {"schedule_file", string_field(&RunConfig::schedule_file)},
      {"pretrain_epochs", number_field(&RunConfig::pretrain_epochs)},
      {"pretrain_lr", number_field(&RunConfig::pretrain_lr)},
      {"pretrain_batch", number_field(&RunConfig::pretrain_batch)},
      {"pretrain_seed", number_field(&RunConfig::pretrain_seed)},
      {"producer_path", string_field(&RunConfig::producer_path)},
      {"checkpoint_every", number_field(&RunConfig::checkpoint_every)},
      {"parallel_clients", bool_field(&RunConfig::parallel_clients)},
      {"test_limit", number_field(&RunConfig::test_limit)},
      {"monitor_limit", number_field(&RunConfig::monitor_limit)},
      {"data_root", string_field(&RunConfig::data_root)},
      {"pre_window_start", number_field(&RunConfig::pre_window_start)},
      {"post_window_start", number_field(&RunConfig::post_window_start)},
      {"window_length", number_field(&RunConfig::window_length)},
  };
  return table;
}

const Field& field(std::string_view key) {
  for (const auto& [k, f] : fields()) {
    if (k == key) return f;
  }
  throw Error(ErrorCategory::kConfig, fmt::format("unknown config key '{}'", key));
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& [name, f] : fields()) k.push_back(name);
    return k;
  }();
  return keys;
}

void RunConfig::set(std::string_view key, std::string_view value) { field(key).set(*this, key, trim(value)); }

std::string RunConfig::get(std::string_view key) const { return field(key).get(*this); }

std::string RunConfig::serialize() const {
  std::string out;
  for (const auto& [k, f] : fields()) out += fmt::format("{} = {}\n", k, f.get(*this));
  return out;
}

RunConfig RunConfig::parse(std::string_view text) {
  RunConfig c;
  std::istringstream in{std::string(text)};
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto body = trim(line.substr(0, line.find('#')));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    require(eq != std::string::npos, ErrorCategory::kConfig, fmt::format("config line {} has no '='", number));
    c.set(trim(std::string_view(body).substr(0, eq)), trim(std::string_view(body).substr(eq + 1)));
  }
  return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorCategory::kIo, "cannot read config " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

void RunConfig::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  require(static_cast<bool>(out), ErrorCategory::kIo, "cannot write " + path.string());
  out << serialize();
}

std::string RunConfig::hash() const {
  // Locations do not change what a run computes.
  RunConfig c = *this;
  c.producer_path.clear();
  c.data_root.clear();
  return util::to_hex(util::sha256(c.serialize())).substr(0, 12);
}

void RunConfig::validate() const {
  data::parse_dataset_name(dataset);
  fl::parse_algorithm(algorithm);
  digest::parse_mix_strategy(strategy);
  require(digest_mode == "mixed" || digest_mode == "laplace", ErrorCategory::kConfig,
          "digest_mode must be 'mixed' or 'laplace'");
  require(clients >= 1, ErrorCategory::kConfig, "clients must be at least 1");
  require(mu > 0.0, ErrorCategory::kConfig, "mu must be positive");
  require(spd >= 1, ErrorCategory::kConfig, "spd must be at least 1");
  require(mix_weights.empty() || static_cast<int>(mix_weights.size()) == spd, ErrorCategory::kConfig,
          "mix_weights needs one entry per mixed sample");
  require(epsilon > 0.0, ErrorCategory::kConfig, "epsilon must be positive");
  require(iterations >= 1, ErrorCategory::kConfig, "iterations must be at least 1");
  require(learning_rate >= 0.0 && momentum >= 0.0 && batch_size >= 1 && local_epochs >= 0, ErrorCategory::kConfig,
          "invalid optimizer settings");
  require(fedprox_mu >= 0.0, ErrorCategory::kConfig, "fedprox_mu must be non-negative");
  static const std::vector<std::string> scenarios = {"none", "temporary", "permanent", "sequential", "group", "file"};
  require(std::find(scenarios.begin(), scenarios.end(), scenario) != scenarios.end(), ErrorCategory::kConfig,
          "unknown scenario '" + scenario + "'");
  require(scenario != "file" || !schedule_file.empty(), ErrorCategory::kConfig, "scenario=file needs schedule_file");
  require(pretrain_epochs >= 0 && pretrain_batch >= 1, ErrorCategory::kConfig, "invalid pretraining settings");
  require(checkpoint_every >= 0 && window_length >= 1, ErrorCategory::kConfig, "invalid cadence settings");
}

fl::RunOptions RunConfig::run_options() const {
  fl::RunOptions o;
  o.feddig = feddig;
  o.aggregation.algorithm = fl::parse_algorithm(algorithm);
  o.aggregation.fedprox_mu = fedprox_mu;
  o.optimizer.learning_rate = learning_rate;
  o.optimizer.momentum = momentum;
  o.optimizer.batch_size = batch_size;
  o.optimizer.local_epochs = local_epochs;
  o.digests.mode = digest_mode == "laplace" ? fl::DigestMode::kLaplace : fl::DigestMode::kMixed;
  o.digests.mix.samples_per_digest = spd;
  o.digests.mix.strategy = digest::parse_mix_strategy(strategy);
  o.digests.mix.weights = mix_weights;
  o.digests.epsilon = epsilon;
  o.seed = seed;
  o.parallel_clients = parallel_clients;
  o.test_limit = test_limit;
  o.monitor_limit = monitor_limit;
  return o;
}

std::pair<int, int> RunConfig::pre_window() const {
  const int start = pre_window_start >= 0 ? pre_window_start : std::max(0, iterations / 3 - window_length);
  return {start, std::min(iterations - 1, start + window_length - 1)};
}

std::pair<int, int> RunConfig::post_window() const {
  const int start = post_window_start >= 0 ? post_window_start : std::min(iterations - 1, 5 * iterations / 6 + 1);
  return {start, std::min(iterations - 1, start + window_length - 1)};
}

// ------------------------------------------------------------------ presets

RunConfig Preset::resolve(const Variant& variant, int seed_index) const {
  RunConfig c = base;
  for (const auto& [k, v] : variant.overrides) c.set(k, v);
  c.name = fmt::format("{}/{}", name, variant.name);
  c.seed = base.seed + static_cast<std::uint64_t>(seed_index);
  c.partition_seed = base.partition_seed + static_cast<std::uint64_t>(seed_index);
  c.split_seed = base.split_seed + static_cast<std::uint64_t>(seed_index);
  return c;
}

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names = {
      "emnist-temporary", "emnist-permanent",   "emnist-sequential", "emnist-group",
      "emnist-mu-sweep",  "emnist-spd-sweep",   "emnist-dp-compare", "emnist-8client",
      "cifar10-sequential", "cifar100-sequential", "toy-ci"};
  return names;
}

namespace {

std::vector<Variant> method_variants() {
  return {{"feddig", {{"feddig", "true"}, {"algorithm", "fedavg"}}},
          {"fedavg", {{"feddig", "false"}, {"algorithm", "fedavg"}}},
          {"fedprox", {{"feddig", "false"}, {"algorithm", "fedprox"}}},
          {"fednova", {{"feddig", "false"}, {"algorithm", "fednova"}}}};
}

RunConfig emnist_base() {
  RunConfig c;
  c.dataset = "emnist-byclass";
  c.sample_budget = 60000;
  c.clients = 4;
  c.mu = 0.1;
  c.spd = 4;
  c.iterations = 300;
  c.learning_rate = 0.001;
  c.momentum = 0.9;
  c.batch_size = 256;
  c.pretrain_epochs = 5;
  c.test_limit = 10000;
  return c;
}

}  // namespace

Preset preset(std::string_view name) {
  Preset p;
  p.name = std::string(name);
  p.variants = method_variants();
  if (name == "toy-ci") {
    RunConfig& c = p.base;
    c.dataset = "synthetic-small";
    c.clients = 4;
    c.mu = 0.1;
    c.spd = 4;
    c.iterations = 60;
    c.learning_rate = 0.05;
    c.batch_size = 32;
    c.scenario = "sequential";
    c.pretrain_epochs = 60;
    c.pretrain_lr = 5e-3;
    c.pretrain_batch = 32;
    c.checkpoint_every = 10;
    p.seeds = 1;
  } else if (name.starts_with("emnist-")) {
    p.base = emnist_base();
    RunConfig& c = p.base;
    if (name == "emnist-temporary") {
      c.scenario = "temporary";
    } else if (name == "emnist-permanent") {
      c.scenario = "permanent";
      c.scenario_at = 100;
    } else if (name == "emnist-sequential") {
      c.scenario = "sequential";
    } else if (name == "emnist-group") {
      c.scenario = "group";
      c.scenario_at = 100;
    } else if (name == "emnist-mu-sweep") {
      c.scenario = "sequential";
      std::vector<Variant> v;
      for (const char* mu : {"0.1", "0.5", "1"}) {
        for (auto m : method_variants()) {
          m.name = fmt::format("mu{}-{}", mu, m.name);
          m.overrides.emplace_back("mu", mu);
          v.push_back(std::move(m));
        }
      }
      p.variants = std::move(v);
    } else if (name == "emnist-spd-sweep") {
      c.scenario = "sequential";
      p.variants.clear();
      for (const char* spd : {"1", "2", "4", "8", "16"}) {
        p.variants.push_back({fmt::format("spd{}", spd), {{"feddig", "true"}, {"spd", spd}}});
      }
    } else if (name == "emnist-dp-compare") {
      c.scenario = "sequential";
      p.variants = {{"mixing-spd4", {{"feddig", "true"}, {"digest_mode", "mixed"}, {"spd", "4"}}},
                    {"laplace-eps10", {{"feddig", "true"}, {"digest_mode", "laplace"}, {"epsilon", "10"}}},
                    {"laplace-eps100", {{"feddig", "true"}, {"digest_mode", "laplace"}, {"epsilon", "100"}}}};
    } else if (name == "emnist-8client") {
      c.scenario = "sequential";
      c.clients = 8;
    } else {
      throw Error(ErrorCategory::kConfig, "unknown preset '" + std::string(name) + "'");
    }
  } else if (name == "cifar10-sequential" || name == "cifar100-sequential") {
    RunConfig& c = p.base;
    c.dataset = name == "cifar10-sequential" ? "cifar-10" : "cifar-100";
    c.clients = 4;
    c.mu = 0.1;
    c.spd = 4;
    c.iterations = 300;
    c.learning_rate = 0.001;
    c.batch_size = 32;
    c.scenario = "sequential";
    c.pretrain_epochs = 5;
    c.test_limit = 10000;
  } else {
    throw Error(ErrorCategory::kConfig, "unknown preset '" + std::string(name) + "'");
  }
  p.base.name = p.name;
  p.base.validate();
  return p;
}

}  // namespace feddig::exp
