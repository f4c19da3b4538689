#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>

#include "feddig/data/partitioner.hpp"
#include "feddig/error.hpp"
#include "feddig/exp/config.hpp"
#include "feddig/exp/plots.hpp"
#include "feddig/exp/runner.hpp"
#include "feddig/fl/client.hpp"
#include "feddig/nn/params.hpp"
#include "feddig/privacy/attack.hpp"
#include "feddig/privacy/guess.hpp"

namespace fs = std::filesystem;
using namespace feddig;

namespace {

// Accepts "4294967296", "2^32" or "1e6".
double parse_range(const std::string& text) {
  if (const auto caret = text.find('^'); caret != std::string::npos) {
    return std::pow(std::stod(text.substr(0, caret)), std::stod(text.substr(caret + 1)));
  }
  return std::stod(text);
}

std::vector<fs::path> find_runs(const fs::path& root) {
  std::vector<fs::path> runs;
  if (fs::exists(root / "metrics.csv") && fs::exists(root / "config.txt")) runs.push_back(root);
  if (fs::is_directory(root)) {
    for (const auto& e : fs::recursive_directory_iterator(root)) {
      if (e.is_directory() && fs::exists(e.path() / "metrics.csv") && fs::exists(e.path() / "config.txt")) {
        runs.push_back(e.path());
      }
    }
  }
  std::sort(runs.begin(), runs.end());
  runs.erase(std::unique(runs.begin(), runs.end()), runs.end());
  return runs;
}

// Run name without the trailing seed component: "<preset>/<variant>".
std::string group_of(const exp::RunConfig& c) { return c.name; }

int cmd_partition(const std::string& dataset, int clients, double mu, std::uint64_t seed, std::uint64_t split_seed,
                  int budget, const std::string& out) {
  exp::RunConfig c;
  c.dataset = dataset;
  c.sample_budget = budget;
  const auto ds = exp::load_configured_dataset(c);
  const auto splits = data::make_splits(ds, {0.8, 0.1, 0.1, split_seed});
  const auto shards = data::dirichlet_dispatch(splits.train, ds.train.labels, ds.spec.num_classes, clients, mu, seed);
  data::write_shards(out, shards);
  for (int i = 0; i < shards.num_clients(); ++i) {
    fmt::print("client {}: {} samples ({:.1f}%)\n", i, shards.clients[static_cast<std::size_t>(i)].size(),
               100.0 * static_cast<double>(shards.clients[static_cast<std::size_t>(i)].size()) /
                   static_cast<double>(shards.total()));
  }
  return 0;
}

int cmd_pretrain(exp::RunConfig c, const std::string& out) {
  c.producer_path.clear();
  const auto prepared = exp::prepare_run(c);
  exp::save_producer(prepared.producer, out);
  for (std::size_t e = 0; e < prepared.producer.epoch_losses.size(); ++e) {
    fmt::print("epoch {} reconstruction mse {:.6f}\n", e, prepared.producer.epoch_losses[e]);
  }
  fmt::print("producer fingerprint {}\n", util::to_hex(digest::producer_fingerprint(prepared.producer.encoder)));
  return 0;
}

int cmd_schedule(const std::string& kind, int clients, int iterations, int client, int at, int until,
                 std::uint64_t seed, const std::string& out) {
  auto opt = [](int v) { return v >= 0 ? std::optional<int>(v) : std::nullopt; };
  scenario::AvailabilitySchedule s;
  if (kind == "none") {
    s = scenario::scenario_none(clients, iterations);
  } else if (kind == "temporary") {
    s = scenario::scenario_temporary(clients, iterations, client, opt(at), opt(until));
  } else if (kind == "permanent") {
    s = scenario::scenario_permanent(clients, iterations, client, opt(at));
  } else if (kind == "sequential") {
    s = scenario::scenario_sequential(clients, iterations, scenario::default_leave_times(clients, iterations, seed));
  } else if (kind == "group") {
    s = scenario::scenario_group(clients, iterations, opt(at));
  } else {
    throw Error(ErrorCategory::kConfig, "unknown scenario '" + kind + "'");
  }
  if (out.empty() || out == "-") {
    std::cout << s.serialize();
  } else {
    s.save(out);
  }
  return 0;
}

int cmd_run(const std::string& config_path, const std::string& preset_name, const std::string& variant,
            int seed_index, bool all, int seeds, const std::vector<std::string>& sets, const std::string& out,
            bool resume) {
  std::vector<std::pair<std::string, std::string>> overrides;
  for (const auto& s : sets) {
    const auto eq = s.find('=');
    require(eq != std::string::npos, ErrorCategory::kConfig, "--set expects key=value, got '" + s + "'");
    overrides.emplace_back(s.substr(0, eq), s.substr(eq + 1));
  }
  const fs::path root = out.empty() ? fs::path("runs") : fs::path(out);
  if (!preset_name.empty() && all) {
    const auto p = exp::preset(preset_name);
    const auto summaries = exp::execute_preset(p, root, seeds > 0 ? seeds : p.seeds, overrides);
    for (const auto& s : summaries) {
      fmt::print("{:<40} final {:.4f} pre {:.4f} post {:.4f}\n", s.name, s.final_test_accuracy, s.pre_accuracy,
                 s.post_accuracy);
    }
    return 0;
  }
  exp::RunConfig c;
  if (!config_path.empty()) {
    c = exp::RunConfig::load(config_path);
  } else if (!preset_name.empty()) {
    const auto p = exp::preset(preset_name);
    const exp::Variant* v = &p.variants.front();
    for (const auto& candidate : p.variants) {
      if (candidate.name == variant) v = &candidate;
    }
    require(variant.empty() || v->name == variant, ErrorCategory::kConfig, "preset has no variant '" + variant + "'");
    c = p.resolve(*v, seed_index);
  }
  for (const auto& [k, v] : overrides) c.set(k, v);
  exp::ExecuteOptions options;
  options.resume = resume;
  options.on_iteration = [](const fl::IterationMetrics& m) {
    spdlog::info("t={} test={:.4f} monitor={:.4f} live={} synthetic={} {:.2f}s", m.iteration, m.test_accuracy,
                 m.monitor_accuracy, m.live_updates, m.synthetic_updates, m.iteration_seconds);
  };
  const auto s = exp::execute_run(c, root, options);
  fmt::print("{} [{}]: final {:.4f}, pre-window [{}, {}] {:.4f}, post-window [{}, {}] {:.4f}\n", s.name,
             s.config_hash, s.final_test_accuracy, s.pre_window.first, s.pre_window.second, s.pre_accuracy,
             s.post_window.first, s.post_window.second, s.post_accuracy);
  return 0;
}

int cmd_bound(int spd, const std::string& range_text, int length, bool exact) {
  const double range = parse_range(range_text);
  if (exact) {
    const auto g = privacy::exact_guess_probability(spd, static_cast<int>(range));
    fmt::print("exact per-element P = {:.6g} (ln {:.6f})\n", g.probability, g.log_probability);
    fmt::print("over {} elements: log2 P = {:.4f}, log10 P = {:.4f}\n", length,
               length * g.log_probability / std::log(2.0), length * g.log_probability / std::log(10.0));
    return 0;
  }
  const auto b = privacy::guess_bound(spd, range, length);
  fmt::print("H = {:.4f}\n", b.harmonic);
  fmt::print("per-element bound = {:.6g}\n", b.per_element);
  fmt::print("log2 P <= {:.4f}\n", b.log2_bound);
  fmt::print("log10 P <= {:.4f}\n", b.log10_bound);
  return 0;
}

int cmd_attack(const std::string& run_dir, int client, int max_digests, const std::string& out) {
  const fs::path dir(run_dir);
  auto config = exp::RunConfig::load(dir / "config.txt");
  config.producer_path = dir.string();
  const auto prepared = exp::prepare_run(config);
  const auto store = digest::read_store(dir / "digests" / fmt::format("client_{}.bin", client));
  // Scoring only: the owner regenerates its member lists from the same seed.
  fl::ClientState owner(client, prepared.dataset.train, prepared.shards.clients.at(static_cast<std::size_t>(client)),
                        prepared.arch.num_classes);
  const auto regenerated = owner.make_digests(prepared.producer.encoder, config.run_options().digests, config.seed,
                                              store.creation_iteration);
  require(regenerated.features == store.features, ErrorCategory::kData,
          "regenerated digests differ from the stored ones; cannot score");
  std::vector<std::vector<int>> members;
  for (const auto& d : owner.last_digests()) members.push_back(d.members);

  nn::Sequential guidance = prepared.arch.make_decoder("guidance");
  const nn::Sequential* guidance_ptr = nullptr;
  std::ifstream latest(dir / "checkpoints" / "latest");
  std::string name;
  if (latest >> name) {
    nn::load_checkpoint(dir / "checkpoints" / name / "guidance.ckpt").assign_to(guidance.parameters());
    guidance_ptr = &guidance;
  }
  privacy::AttackOptions options;
  options.max_digests = max_digests;
  options.grid_dir = out.empty() ? dir / "attack" : fs::path(out);
  const auto report = privacy::mount_pseudo_inverse_attack(
      prepared.producer.decoder, guidance_ptr, store, prepared.arch.feature_shape, members, prepared.dataset.train,
      prepared.shards.clients.at(static_cast<std::size_t>(client)), options);
  std::ofstream csv(options.grid_dir / "report.csv");
  csv << "digest,inverse_mse" << (guidance_ptr ? ",guidance_mse" : "") << '\n';
  for (int i = 0; i < report.attacked; ++i) {
    csv << i << ',' << report.inverse.mse[static_cast<std::size_t>(i)];
    if (guidance_ptr) csv << ',' << report.guidance.mse[static_cast<std::size_t>(i)];
    csv << '\n';
  }
  fmt::print("attacked {} digests of client {}\n", report.attacked, client);
  fmt::print("pseudo-inverse: mean mse {:.5f}, identification rate {:.3f}\n", report.inverse.mean_mse,
             report.inverse.identification_rate);
  if (guidance_ptr) {
    fmt::print("guidance:       mean mse {:.5f}, identification rate {:.3f}\n", report.guidance.mean_mse,
               report.guidance.identification_rate);
  }
  for (const auto& g : report.grids) fmt::print("wrote {}\n", g.string());
  return 0;
}

int cmd_report(const std::string& root) {
  const auto runs = find_runs(root);
  require(!runs.empty(), ErrorCategory::kIo, "no runs found under " + root);
  std::map<std::string, std::vector<exp::RunSummary>> groups;
  fmt::print("{:<44} {:>7} {:>7} {:>7} {:>10} {:>10} {:>16}\n", "run", "final", "pre", "post", "digest MB",
             "grad MB", "s/iter (std)");
  for (const auto& dir : runs) {
    const auto s = exp::summarize_run(dir);
    const auto c = exp::RunConfig::load(dir / "config.txt");
    groups[group_of(c)].push_back(s);
    fmt::print("{:<44} {:>7.4f} {:>7.4f} {:>7.4f} {:>10.2f} {:>10.3f} {:>9.3f} ({:.3f})\n",
               fs::relative(dir, root).string(), s.final_test_accuracy, s.pre_accuracy, s.post_accuracy,
               exp::to_mb(s.comm.digest_payload_bytes()), exp::to_mb(s.comm.gradient_bytes), s.timing.mean,
               s.timing.stddev);
  }
  fmt::print("\n{:<32} {:>5} {:>18} {:>18}\n", "group", "runs", "post mean (std)", "drop mean (std)");
  for (const auto& [g, list] : groups) {
    std::vector<double> post;
    std::vector<double> drop;
    for (const auto& s : list) {
      post.push_back(s.post_accuracy);
      drop.push_back(s.pre_accuracy - s.post_accuracy);
    }
    const auto p = exp::summarize(g, post);
    const auto d = exp::summarize(g, drop);
    fmt::print("{:<32} {:>5} {:>10.4f} ({:.4f}) {:>10.4f} ({:.4f})\n", g, list.size(), p.mean, p.stddev, d.mean,
               d.stddev);
  }
  return 0;
}

int cmd_plot(const std::string& root, const std::string& out) {
  const auto runs = find_runs(root);
  require(!runs.empty(), ErrorCategory::kIo, "no runs found under " + root);
  const fs::path out_dir = out.empty() ? fs::path(root) / "plots" : fs::path(out);
  fs::create_directories(out_dir);
  // One curve file per seed directory name, bars over groups.
  std::map<std::string, std::vector<exp::RunRecord>> curves;
  std::map<std::string, std::vector<exp::Marker>> markers;
  std::map<std::string, std::vector<double>> post;
  std::string hash_material;
  for (const auto& dir : runs) {
    const auto c = exp::RunConfig::load(dir / "config.txt");
    auto rec = exp::read_record(dir / "metrics.csv");
    rec.label = c.name;
    rec.config_hash = c.hash();
    hash_material += rec.config_hash;
    const std::string seed_key = dir.filename().string().starts_with("seed_") ? dir.filename().string() : "run";
    markers[seed_key] = exp::schedule_markers(scenario::AvailabilitySchedule::load(dir / "schedule.txt"));
    if (static_cast<int>(rec.rows.size()) == c.iterations) {
      const auto [a, b] = c.post_window();
      post[group_of(c)].push_back(exp::window_accuracy(rec, a, b));
    }
    if (runs.size() == 1) {
      const auto path = out_dir / exp::plot_file_name("curve", rec.config_hash);
      exp::write_curve_plot(path, {rec}, markers[seed_key], c.name);
      fmt::print("wrote {}\n", path.string());
      return 0;
    }
    curves[seed_key].push_back(std::move(rec));
  }
  const auto tag = util::to_hex(util::sha256(hash_material)).substr(0, 12);
  for (const auto& [seed_key, recs] : curves) {
    const auto path = out_dir / exp::plot_file_name("curve_" + seed_key, tag);
    exp::write_curve_plot(path, recs, markers[seed_key], "test accuracy (" + seed_key + ")");
    fmt::print("wrote {}\n", path.string());
  }
  std::vector<exp::Bar> bars;
  for (const auto& [g, values] : post) bars.push_back(exp::summarize(g, values));
  if (!bars.empty()) {
    const auto path = out_dir / exp::plot_file_name("post_window", tag);
    exp::write_bar_plot(path, bars, "post-leave window accuracy, mean/std over seeds", "test accuracy");
    fmt::print("wrote {}\n", path.string());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"FedDig federated-learning simulator"};
  app.require_subcommand(1);
  std::string log_level = "info";
  app.add_option("--log-level", log_level, "trace|debug|info|warn|error");

  auto* partition = app.add_subcommand("partition", "Split a dataset and dispatch it to clients");
  std::string p_dataset = "synthetic-small";
  std::string p_out = "shards.txt";
  int p_clients = 4;
  int p_budget = 0;
  double p_mu = 0.1;
  std::uint64_t p_seed = 0;
  std::uint64_t p_split_seed = 0;
  partition->add_option("--dataset", p_dataset);
  partition->add_option("--clients,-n", p_clients);
  partition->add_option("--mu", p_mu);
  partition->add_option("--seed", p_seed);
  partition->add_option("--split-seed", p_split_seed);
  partition->add_option("--budget", p_budget, "cap on original training samples (0 = all)");
  partition->add_option("--out,-o", p_out);

  auto* pretrain = app.add_subcommand("pretrain", "Pretrain the digest producer autoencoder");
  exp::RunConfig pre_cfg;
  std::string pre_out = "producer";
  pretrain->add_option("--dataset", pre_cfg.dataset);
  pretrain->add_option("--budget", pre_cfg.sample_budget);
  pretrain->add_option("--epochs", pre_cfg.pretrain_epochs);
  pretrain->add_option("--lr", pre_cfg.pretrain_lr);
  pretrain->add_option("--batch", pre_cfg.pretrain_batch);
  pretrain->add_option("--seed", pre_cfg.pretrain_seed);
  pretrain->add_option("--split-seed", pre_cfg.split_seed);
  pretrain->add_option("--out,-o", pre_out);

  auto* schedule = app.add_subcommand("schedule", "Emit an availability schedule");
  std::string s_kind = "sequential";
  std::string s_out;
  int s_clients = 4;
  int s_iterations = 300;
  int s_client = 0;
  int s_at = -1;
  int s_until = -1;
  std::uint64_t s_seed = 0;
  schedule->add_option("--scenario", s_kind, "none|temporary|permanent|sequential|group");
  schedule->add_option("--clients,-n", s_clients);
  schedule->add_option("--iterations,-T", s_iterations);
  schedule->add_option("--client", s_client, "absent client for temporary/permanent");
  schedule->add_option("--at", s_at, "leave or switch iteration");
  schedule->add_option("--until", s_until, "rejoin iteration (temporary)");
  schedule->add_option("--seed", s_seed);
  schedule->add_option("--out,-o", s_out);

  auto* run = app.add_subcommand("run", "Run one configuration or a whole preset");
  std::string r_config;
  std::string r_preset;
  std::string r_variant;
  std::string r_out;
  int r_seed_index = 0;
  int r_seeds = 0;
  bool r_all = false;
  bool r_resume = false;
  std::vector<std::string> r_sets;
  run->add_option("--config,-c", r_config, "config file (key = value)");
  run->add_option("--preset,-p", r_preset);
  run->add_option("--variant", r_variant);
  run->add_option("--seed-index", r_seed_index);
  run->add_flag("--all", r_all, "run every variant and seed of the preset");
  run->add_option("--seeds", r_seeds, "seed count for --all (default: preset's)");
  run->add_option("--set", r_sets, "override key=value")->take_all();
  run->add_option("--out,-o", r_out, "run directory (or sweep root with --all)");
  run->add_flag("--resume", r_resume, "continue from the latest checkpoint in --out");

  auto* bound = app.add_subcommand("bound", "Random-guess probability bound for a digest");
  int b_spd = 4;
  std::string b_range = "2^32";
  int b_len = 256;
  bool b_exact = false;
  bound->add_option("--spd", b_spd);
  bound->add_option("--range", b_range, "quantization range, e.g. 2^32");
  bound->add_option("--len", b_len, "digest length");
  bound->add_flag("--exact", b_exact, "brute-force enumeration (small ranges)");

  auto* attack = app.add_subcommand("attack", "Pseudo-inverse reconstruction attack on a run's digests");
  std::string a_run;
  std::string a_out;
  int a_client = 0;
  int a_max = 256;
  attack->add_option("--run", a_run)->required();
  attack->add_option("--client", a_client);
  attack->add_option("--max-digests", a_max);
  attack->add_option("--out,-o", a_out);

  auto* report = app.add_subcommand("report", "Summarize run directories");
  std::string rep_root = "runs";
  report->add_option("dir", rep_root);

  auto* plot = app.add_subcommand("plot", "Emit SVG plots for run directories");
  std::string plot_root = "runs";
  std::string plot_out;
  plot->add_option("dir", plot_root);
  plot->add_option("--out,-o", plot_out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : exit_code(ErrorCategory::kConfig);
  }
  spdlog::set_level(spdlog::level::from_str(log_level));

  try {
    if (*partition) return cmd_partition(p_dataset, p_clients, p_mu, p_seed, p_split_seed, p_budget, p_out);
    if (*pretrain) return cmd_pretrain(pre_cfg, pre_out);
    if (*schedule) return cmd_schedule(s_kind, s_clients, s_iterations, s_client, s_at, s_until, s_seed, s_out);
    if (*run) {
      return cmd_run(r_config, r_preset, r_variant, r_seed_index, r_all, r_seeds, r_sets, r_out, r_resume);
    }
    if (*bound) return cmd_bound(b_spd, b_range, b_len, b_exact);
    if (*attack) return cmd_attack(a_run, a_client, a_max, a_out);
    if (*report) return cmd_report(rep_root);
    if (*plot) return cmd_plot(plot_root, plot_out);
  } catch (const Error& e) {
    fmt::print(stderr, "error[{}] {}\n", category_name(e.category()), e.what());
    return exit_code(e.category());
  } catch (const std::exception& e) {
    fmt::print(stderr, "error[io]: {}\n", e.what());
    return exit_code(ErrorCategory::kIo);
  }
  return 0;
}
