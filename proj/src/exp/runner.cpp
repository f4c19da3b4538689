#include "feddig/exp/runner.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <fstream>
#include <json.hpp>

#include "feddig/error.hpp"
#include "feddig/nn/params.hpp"
#include "feddig/util/hash.hpp"

#ifndef FEDDIG_REVISION
#define FEDDIG_REVISION "unknown"
#endif

namespace feddig::exp {

namespace fs = std::filesystem;
using nlohmann::json;

std::string revision() { return FEDDIG_REVISION; }

data::Dataset load_configured_dataset(const RunConfig& config) {
  const auto name = data::parse_dataset_name(config.dataset);
  const auto spec = data::dataset_spec(name, config.sample_budget > 0 ? std::optional<int>(config.sample_budget)
                                                                      : std::nullopt);
  data::SyntheticOptions synthetic{config.synthetic_train, config.synthetic_test, config.synthetic_seed};
  const fs::path root = config.data_root.empty() ? data::default_data_root() : fs::path(config.data_root);
  return data::load_dataset(spec, root, synthetic);
}

scenario::AvailabilitySchedule make_schedule(const RunConfig& c, const data::ClientShards& shards) {
  const int n = shards.num_clients();
  const int T = c.iterations;
  auto opt = [](int v) { return v >= 0 ? std::optional<int>(v) : std::nullopt; };
  if (c.scenario == "none") return scenario::scenario_none(n, T);
  if (c.scenario == "temporary") {
    return scenario::scenario_temporary(n, T, shards.largest_client(), opt(c.scenario_at), opt(c.scenario_until));
  }
  if (c.scenario == "permanent") return scenario::scenario_permanent(n, T, shards.largest_client(), opt(c.scenario_at));
  if (c.scenario == "sequential") {
    return scenario::scenario_sequential(n, T, scenario::default_leave_times(n, T, c.partition_seed));
  }
  if (c.scenario == "group") return scenario::scenario_group(n, T, opt(c.scenario_at));
  auto s = scenario::AvailabilitySchedule::load(c.schedule_file);
  require(s.iterations() == T && s.num_clients() == n, ErrorCategory::kConfig,
          "schedule file does not match the configured T and client count");
  return s;
}

nn::Autoencoder load_producer(const nn::Architecture& arch, const fs::path& dir) {
  nn::Autoencoder ae{arch.make_encoder(), arch.make_decoder("decoder"), {}};
  const auto enc = nn::load_checkpoint(dir / "producer.ckpt");
  require(enc.same_layout(nn::ParamSet::capture(std::as_const(ae.encoder).parameters())), ErrorCategory::kIo,
          "producer checkpoint does not match the architecture");
  enc.assign_to(ae.encoder.parameters());
  if (fs::exists(dir / "decoder.ckpt")) nn::load_checkpoint(dir / "decoder.ckpt").assign_to(ae.decoder.parameters());
  return ae;
}

void save_producer(const nn::Autoencoder& ae, const fs::path& dir) {
  fs::create_directories(dir);
  auto enc = nn::ParamSet::capture(ae.encoder.parameters());
  auto dec = nn::ParamSet::capture(ae.decoder.parameters());
  nn::save_checkpoint(dir / "producer.ckpt", enc);
  nn::save_checkpoint(dir / "decoder.ckpt", dec);
}

PreparedRun prepare_run(const RunConfig& config) {
  config.validate();
  PreparedRun p;
  p.dataset = load_configured_dataset(config);
  p.splits = data::make_splits(p.dataset, {0.8, 0.1, 0.1, config.split_seed});
  p.shards = data::dirichlet_dispatch(p.splits.train, p.dataset.train.labels, p.dataset.spec.num_classes,
                                      config.clients, config.mu, config.partition_seed);
  p.schedule = make_schedule(config, p.shards);
  p.arch = nn::make_architecture(p.dataset.spec.arch_family(), p.dataset.spec.num_classes);
  if (!config.producer_path.empty()) {
    p.producer = load_producer(p.arch, config.producer_path);
  } else {
    // The producer's weights are rounded to storage precision so that the
    // in-memory encoder and its checkpoint agree bit for bit.
    p.producer = nn::pretrain_producer(p.arch, p.dataset.train.batch(p.splits.monitor),
                                       {config.pretrain_epochs, config.pretrain_batch, config.pretrain_lr,
                                        config.pretrain_seed});
    for (auto* s : {&p.producer.encoder, &p.producer.decoder}) {
      auto params = nn::ParamSet::capture(std::as_const(*s).parameters());
      nn::round_to_f32(params);
      params.assign_to(s->parameters());
    }
  }
  return p;
}

namespace {

std::vector<StoreShape> store_shapes(const digest::DigestRegistry& registry) {
  std::vector<StoreShape> shapes;
  for (const auto& [c, s] : registry.stores()) shapes.push_back(shape_of(s));
  return shapes;
}

std::optional<fs::path> latest_checkpoint(const fs::path& dir) {
  std::ifstream in(dir / "checkpoints" / "latest");
  std::string name;
  if (!(in >> name)) return std::nullopt;
  return dir / "checkpoints" / name;
}

void write_checkpoint(const fl::Simulation& sim, const fs::path& dir) {
  const auto ckdir = dir / "checkpoints";
  const auto name = fmt::format("iter_{:06d}", sim.next_iteration());
  const auto previous = latest_checkpoint(dir);
  sim.save_checkpoint(ckdir / name);
  {
    std::ofstream out(ckdir / "latest.tmp");
    out << name << '\n';
  }
  fs::rename(ckdir / "latest.tmp", ckdir / "latest");
  if (previous && previous->filename() != name) fs::remove_all(*previous);
}

// Keeps the header and the rows for iterations < next.
void truncate_metrics(const fs::path& path, int next) {
  std::ifstream in(path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) lines.push_back(line);
  }
  in.close();
  std::ofstream out(path, std::ios::trunc);
  out << csv_header() << '\n';
  for (std::size_t i = 1; i < lines.size() && static_cast<int>(i) <= next; ++i) out << lines[i] << '\n';
}

RunSummary make_summary(const RunConfig& config, const RunRecord& record, const CommModel& comm) {
  RunSummary s;
  s.name = config.name;
  s.config_hash = config.hash();
  s.iterations = static_cast<int>(record.rows.size());
  if (!record.rows.empty()) s.final_test_accuracy = record.rows.back().test_accuracy;
  s.pre_window = config.pre_window();
  s.post_window = config.post_window();
  if (s.iterations == config.iterations) {
    s.pre_accuracy = window_accuracy(record, s.pre_window.first, s.pre_window.second);
    s.post_accuracy = window_accuracy(record, s.post_window.first, s.post_window.second);
  }
  s.comm = comm;
  s.timing = iteration_timing(record);
  return s;
}

json summary_json(const RunSummary& s, const RunConfig& c, const PreparedRun& p, const std::string& fingerprint) {
  json shards = json::array();
  for (const auto& shard : p.shards.clients) shards.push_back(shard.size());
  return {
      {"name", s.name},
      {"config_hash", s.config_hash},
      {"revision", revision()},
      {"seeds", {{"seed", c.seed}, {"split_seed", c.split_seed}, {"partition_seed", c.partition_seed},
                 {"pretrain_seed", c.pretrain_seed}}},
      {"iterations", s.iterations},
      {"final_test_accuracy", s.final_test_accuracy},
      {"pre_window", {{"start", s.pre_window.first}, {"end", s.pre_window.second}, {"accuracy", s.pre_accuracy}}},
      {"post_window", {{"start", s.post_window.first}, {"end", s.post_window.second}, {"accuracy", s.post_accuracy}}},
      {"comm",
       {{"gradient_bytes", s.comm.gradient_bytes},
        {"digest_count", s.comm.digest_count},
        {"feature_mb", to_mb(s.comm.feature_bytes)},
        {"label_mb", to_mb(s.comm.label_bytes)},
        {"digest_payload_mb", to_mb(s.comm.digest_payload_bytes())},
        {"digest_wire_bytes", s.comm.digest_wire_bytes()},
        {"total_mb", to_mb(s.comm.total_bytes(c.iterations, c.clients))}}},
      {"iteration_seconds", {{"mean", s.timing.mean}, {"std", s.timing.stddev}}},
      {"shard_sizes", shards},
      {"producer_fingerprint", fingerprint},
  };
}

}  // namespace

RunSummary execute_run(const RunConfig& requested, const fs::path& dir, const ExecuteOptions& options) {
  RunConfig config = requested;
  std::optional<fs::path> resume_from;
  if (options.resume) {
    resume_from = latest_checkpoint(dir);
    require(resume_from.has_value(), ErrorCategory::kIo, "no checkpoint to resume in " + dir.string());
    config = RunConfig::load(dir / "config.txt");
    config.producer_path = dir.string();
  }
  config.validate();
  fs::create_directories(dir);
  PreparedRun prepared = prepare_run(config);
  if (!resume_from) {
    RunConfig stored = config;
    stored.producer_path.clear();
    stored.save(dir / "config.txt");
    prepared.schedule.save(dir / "schedule.txt");
    data::write_shards(dir / "shards.txt", prepared.shards);
    save_producer(prepared.producer, dir);
  }

  auto run_options = config.run_options();
  run_options.digest_dir = dir / "digests";
  fl::Simulation sim(prepared.dataset, prepared.splits, prepared.shards, prepared.schedule, prepared.arch,
                     prepared.producer.encoder, run_options);
  const auto metrics_path = dir / "metrics.csv";
  if (resume_from) {
    sim.restore_checkpoint(*resume_from);
    truncate_metrics(metrics_path, sim.next_iteration());
    spdlog::info("resuming {} at iteration {}", dir.string(), sim.next_iteration());
  } else {
    std::ofstream(metrics_path, std::ios::trunc) << csv_header() << '\n';
  }

  std::ofstream metrics(metrics_path, std::ios::app);
  require(static_cast<bool>(metrics), ErrorCategory::kIo, "cannot append to " + metrics_path.string());
  while (!sim.done()) {
    if (options.stop_after >= 0 && sim.next_iteration() >= options.stop_after) break;
    const auto m = sim.step();
    metrics << csv_line(to_row(m)) << '\n';
    metrics.flush();
    if (options.on_iteration) options.on_iteration(m);
    if (config.checkpoint_every > 0 && (sim.next_iteration() % config.checkpoint_every == 0 || sim.done())) {
      write_checkpoint(sim, dir);
    }
  }
  metrics.close();

  auto record = read_record(metrics_path);
  record.label = config.name;
  record.config_hash = config.hash();
  const auto comm = comm_account(sim.model().parameter_count(), store_shapes(sim.registry()));
  RunSummary summary = make_summary(config, record, comm);
  if (sim.done()) {
    const auto fp = util::to_hex(digest::producer_fingerprint(sim.producer()));
    std::ofstream(dir / "run.json") << summary_json(summary, config, prepared, fp).dump(2) << '\n';
  }
  return summary;
}

RunSummary summarize_run(const fs::path& dir) {
  const auto config = RunConfig::load(dir / "config.txt");
  auto record = read_record(dir / "metrics.csv");
  std::vector<StoreShape> shapes;
  if (fs::exists(dir / "digests")) {
    for (const auto& entry : fs::directory_iterator(dir / "digests")) {
      if (entry.path().extension() == ".bin") shapes.push_back(shape_of(digest::read_store(entry.path())));
    }
  }
  std::uint64_t gradient_bytes = 0;
  if (fs::exists(dir / "run.json")) {
    std::ifstream in(dir / "run.json");
    gradient_bytes = json::parse(in).at("comm").at("gradient_bytes").get<std::uint64_t>();
  }
  return make_summary(config, record, comm_account(gradient_bytes / sizeof(float), shapes));
}

std::vector<RunSummary> execute_preset(const Preset& preset, const fs::path& root, int seeds,
                                       const std::vector<std::pair<std::string, std::string>>& overrides) {
  std::vector<RunSummary> out;
  for (int k = 0; k < seeds; ++k) {
    std::optional<fs::path> producer_dir;
    for (const auto& variant : preset.variants) {
      RunConfig c = preset.resolve(variant, k);
      for (const auto& [key, value] : overrides) c.set(key, value);
      if (producer_dir) c.producer_path = producer_dir->string();
      const auto dir = root / variant.name / fmt::format("seed_{}", k);
      spdlog::info("running {} seed {} -> {}", c.name, k, dir.string());
      out.push_back(execute_run(c, dir));
      // Every variant of one seed shares split and pretraining seeds, so the
      // first run's producer is reused.
      if (!producer_dir) producer_dir = dir;
    }
  }
  return out;
}

}  // namespace feddig::exp
