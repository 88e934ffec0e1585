#include "qindex/commands.hpp"

#include <algorithm>
#include <fstream>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "qindex/bench.hpp"
#include "qindex/dataset.hpp"
#include "qindex/errors.hpp"
#include "qindex/fixture.hpp"
#include "qindex/hash.hpp"
#include "qindex/network.hpp"
#include "qindex/quant.hpp"
#include "qindex/train.hpp"
#include "qindex/weight_io.hpp"

namespace qindex {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

struct Inputs {
  Dataset train;
  Dataset test;
  NetworkDef net;
};

Inputs load_inputs(const ExperimentConfig& config) {
  require_dataset_files(config);
  Inputs in;
  in.train = load_idx(train_images_path(config), train_labels_path(config),
                      config.dataset.num_classes, "train");
  in.test = load_idx(test_images_path(config), test_labels_path(config),
                     config.dataset.num_classes, "test");
  in.net = NetworkDef::simple_cnn(in.train.sample_shape(), config.dataset.num_classes);
  return in;
}

WeightStore load_baseline(const ExperimentConfig& config, const NetworkDef& net) {
  if (!fs::is_regular_file(config.weights)) {
    throw ConfigError(fmt::format("weights file {} not found; run train first or point "
                                  "'weights' at a saved baseline",
                                  config.weights));
  }
  return load_weights_for(net, config.weights);
}

json environment_json(const EnvironmentInfo& env) {
  return json{{"host", env.host},
              {"hardware_threads", env.hardware_threads},
              {"clock_source", env.clock_source},
              {"clock_resolution_ns", env.clock_resolution_ns},
              {"timestamp", env.timestamp}};
}

json latency_json(const LatencySample& s) {
  return json{{"median_ms", s.median_ms}, {"p10_ms", s.p10_ms}, {"p90_ms", s.p90_ms},
              {"min_ms", s.min_ms},       {"max_ms", s.max_ms}, {"passes", s.durations_ms.size()},
              {"warnings", s.warnings}};
}

RunRecord begin_record(const std::string& command, const ExperimentConfig& config) {
  RunRecord r;
  const EnvironmentInfo env = capture_environment();
  r.command = command;
  r.timestamp = env.timestamp;
  r.config = config_to_json(config);
  r.environment = environment_json(env);
  r.run_id = fnv1a_hex(command + "\n" + r.config.dump() + "\n" + r.timestamp);
  r.artifacts["weights"] = config.weights;
  return r;
}

void set_threshold(RunRecord& r, const ExperimentConfig& config, double fp_accuracy) {
  r.threshold_spec = ThresholdSpec{config.dataset.num_classes, fp_accuracy,
                                   config.threshold.delta};
  r.threshold = resolve_threshold(r.threshold_spec);
}

fs::path write_record(RunRecord& r, const ExperimentConfig& config) {
  const fs::path path = fs::path(config.out_dir) / (r.command + ".json");
  r.artifacts["record"] = path.string();
  save_record(r, path);
  return path;
}

void prepare(const ExperimentConfig& config) {
  validate_config(config);
  require_dataset_files(config);
}

Tensor timing_input(const Dataset& data, const TimingProtocol& protocol) {
  if (data.size() < static_cast<size_t>(protocol.batch_size)) {
    throw ConfigError(fmt::format("timing batch {} exceeds the {} test samples",
                                  protocol.batch_size, data.size()));
  }
  return data.batch(0, static_cast<size_t>(protocol.batch_size));
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError(fmt::format("cannot write {}", path.string()));
  out << text;
}

}  // namespace

RunRecord cmd_train(const ExperimentConfig& config, std::ostream& log) {
  prepare(config);
  const Inputs in = load_inputs(config);
  RunRecord r = begin_record("train", config);
  r.seeds = {config.train.seed};
  if (const fs::path parent = fs::path(config.weights).parent_path(); !parent.empty()) {
    fs::create_directories(parent);
  }

  fmt::print(log, "training {} on {} samples for {} epochs (seed {})\n",
             in.net.architecture_string(), in.train.size(), config.train.epochs,
             config.train.seed);
  const TrainResult result =
      train_baseline(in.net, in.train, config.train, [&](const EpochStats& s) {
        fmt::print(log, "epoch {:3d}  loss {:.4f}  train {:.4f}  val {:.4f}\n", s.epoch,
                   s.train_loss, s.train_accuracy, s.validation_accuracy);
      });
  save_weights(result.weights, in.net.architecture_hash(), config.weights);
  const double test_accuracy = evaluate_accuracy(in.net, result.weights, in.test);
  fmt::print(log, "best epoch {}  test accuracy {:.4f}  -> {}\n", result.best_epoch,
             test_accuracy, config.weights);

  set_threshold(r, config, test_accuracy);
  json history = json::array();
  for (const auto& s : result.history) {
    history.push_back({{"epoch", s.epoch},
                       {"train_loss", s.train_loss},
                       {"train_accuracy", s.train_accuracy},
                       {"validation_accuracy", s.validation_accuracy}});
  }
  r.details["training"] = {{"best_epoch", result.best_epoch},
                           {"test_accuracy", test_accuracy},
                           {"train_samples", in.train.size()},
                           {"test_samples", in.test.size()},
                           {"history", history}};
  r.details["weights_hash"] = file_hash(config.weights);
  finalize(r);
  write_record(r, config);
  return r;
}

RunRecord cmd_sweep(const ExperimentConfig& config, std::ostream& log) {
  prepare(config);
  const Inputs in = load_inputs(config);
  const WeightStore weights = load_baseline(config, in.net);
  const Tensor timing_batch = timing_input(in.test, config.timing);
  const size_t layers = in.net.quantizable_layers().size();
  RunRecord r = begin_record("sweep", config);
  r.seeds = config.seeds;

  const double fp_measured = evaluate_accuracy(in.net, weights, in.test);
  set_threshold(r, config, config.threshold.fp_accuracy.value_or(fp_measured));
  fmt::print(log, "FP accuracy {:.4f}, threshold {:.4f}\n", fp_measured, r.threshold);

  json latency = json::array();
  json calibration = json::array();
  for (uint64_t seed : config.seeds) {
    const Dataset calib = sample_calibration(in.train, config.calibration_samples, seed);
    const CalibrationStats stats = calibrate(in.net, weights, calib);
    json ranges = json::array();
    for (const auto& l : stats.layers) ranges.push_back({l.min, l.max});
    calibration.push_back({{"seed", seed}, {"samples", stats.sample_count}, {"ranges", ranges}});
    for (int bits : config.bits) {
      const QuantizedModel model(in.net, weights, QuantConfig::uniform(bits, layers), stats);
      const double p = evaluate_accuracy(model.as_forward(), in.test);
      const double c = compression_ratio(model.config(), CompressionMode::kUniform);
      const LatencySample t = measure_latency(model.as_forward(), config.timing, timing_batch);
      r.rows.push_back(make_row(std::to_string(bits), seed, p, c, t.median_ms, r.threshold));
      json lat = latency_json(t);
      lat["bits"] = std::to_string(bits);
      lat["seed"] = seed;
      latency.push_back(lat);
      fmt::print(log, "seed {:3d} bits {:2d}  P {:.4f}  C {:5.2f}  T {:.3f} ms  I' {:.4f}\n",
                 seed, bits, p, c, t.median_ms, r.rows.back().iprime);
    }
  }
  finalize(r);

  json knee = {{"bits", r.pareto_knee}};
  for (const auto& cond : published_results().ptq_sweep) {
    if (cond.key == config.dataset.name) {
      knee["reference_bits"] = cond.knee;
      knee["matches_reference"] = cond.knee == r.pareto_knee;
    }
  }
  r.details["knee"] = knee;
  r.details["fp_accuracy_measured"] = fp_measured;
  r.details["latency"] = latency;
  r.details["calibration"] = calibration;
  r.details["weights_hash"] = file_hash(config.weights);
  write_record(r, config);
  fmt::print(log, "Pareto knee: {}\n", r.pareto_knee);
  return r;
}

json search_log_to_json(const SearchResult& result) {
  json gens = json::array();
  for (const auto& g : result.log) {
    json pop = json::array(), elites = json::array();
    for (const auto& x : g.population) pop.push_back(x.label());
    for (const auto& x : g.elites) elites.push_back(x.label());
    gens.push_back({{"generation", g.generation},
                    {"population", pop},
                    {"fitness", g.fitness},
                    {"elites", elites},
                    {"best", g.best.label()},
                    {"best_fitness", g.best_fitness},
                    {"roulette_fallback", g.roulette_fallback}});
  }
  const auto& b = result.best;
  return json{{"best",
               {{"genome", b.genome.label()},
                {"fitness", b.fitness},
                {"P", b.evaluation.accuracy},
                {"C", b.evaluation.compression},
                {"T", b.evaluation.latency_ms}}},
              {"unique_evaluations", result.unique_evaluations},
              {"generations", gens}};
}

SearchOutcome run_search(const ExperimentConfig& config, std::ostream& log) {
  prepare(config);
  const Inputs in = load_inputs(config);
  const WeightStore weights = load_baseline(config, in.net);
  const size_t layers = in.net.quantizable_layers().size();
  SearchOutcome out;
  RunRecord& r = out.record;
  r = begin_record("search", config);
  r.seeds = {config.search.ga.seed};

  GaParams ga = config.search.ga;
  ga.genome_length = layers;

  const size_t n = config.search.fitness_samples;
  const Dataset fitness_set =
      n == 0 || n >= in.test.size()
          ? in.test
          : in.test.subset(sample_indices(in.test.size(), n, ga.seed));
  const Tensor timing_batch = timing_input(in.test, config.timing);
  const Dataset calib =
      sample_calibration(in.train, config.calibration_samples, config.search.calibration_seed);
  const CalibrationStats stats = calibrate(in.net, weights, calib);

  const double fp_fitness = evaluate_accuracy(in.net, weights, fitness_set);
  set_threshold(r, config, config.threshold.fp_accuracy.value_or(fp_fitness));
  fmt::print(log, "fitness set {} samples, FP accuracy {:.4f}, threshold {:.4f}\n",
             fitness_set.size(), fp_fitness, r.threshold);

  const Evaluator evaluator = [&](const Genome& g) {
    const QuantizedModel model(in.net, weights, QuantConfig{g.bits}, stats);
    Evaluation e;
    e.accuracy = evaluate_accuracy(model.as_forward(), fitness_set);
    e.compression = compression_ratio(model.config(), CompressionMode::kGeometric);
    e.latency_ms = config.search.latency == LatencyMode::kFixed
                       ? config.search.fixed_latency_ms
                       : measure_latency(model.as_forward(), config.timing, timing_batch)
                             .median_ms;
    return e;
  };

  FitnessCache cache(evaluator, r.threshold);
  out.result = run_ga(ga, cache);
  for (const auto& g : out.result.log) {
    fmt::print(log, "generation {:3d}  best {:<14} fitness {:.4f}\n", g.generation,
               g.best.label(), g.best_fitness);
  }
  fmt::print(log, "{} unique genomes evaluated\n", out.result.unique_evaluations);
  for (int a : ga.alleles) {
    out.uniform.push_back(cache.score(Genome{std::vector<int>(layers, a)}));
  }

  const Evaluation fp = evaluator(Genome{std::vector<int>(layers, 32)});
  r.rows.push_back(make_row(Genome{std::vector<int>(layers, 32)}.label(), std::nullopt,
                            fp.accuracy, fp.compression, fp.latency_ms, r.threshold));
  double best_uniform = 0.0;
  std::string best_uniform_label;
  json uniform = json::object();
  for (const auto& u : out.uniform) {
    r.rows.push_back(make_row(u.genome.label(), std::nullopt, u.evaluation.accuracy,
                              u.evaluation.compression, u.evaluation.latency_ms,
                              r.threshold));
    uniform[u.genome.label()] = u.fitness;
    if (best_uniform_label.empty() || u.fitness > best_uniform) {
      best_uniform = u.fitness;
      best_uniform_label = u.genome.label();
    }
  }
  const ScoredGenome& best = out.result.best;
  const bool best_is_uniform =
      std::any_of(out.uniform.begin(), out.uniform.end(),
                  [&](const ScoredGenome& u) { return u.genome == best.genome; });
  if (!best_is_uniform) {
    r.rows.push_back(make_row(best.genome.label(), std::nullopt, best.evaluation.accuracy,
                              best.evaluation.compression, best.evaluation.latency_ms,
                              r.threshold));
  }
  finalize(r);

  // Final scoring of the returned genome on the full test set.
  const QuantizedModel best_model(in.net, weights, QuantConfig{best.genome.bits}, stats);
  const double p_full = evaluate_accuracy(best_model.as_forward(), in.test);
  const MetricReport full = make_report(
      MetricPoint{best.genome.label(), p_full, best.evaluation.compression,
                  best.evaluation.latency_ms},
      r.threshold);

  const fs::path log_path = fs::path(config.out_dir) / "search_log.json";
  write_text(log_path, search_log_to_json(out.result).dump(2) + "\n");
  r.artifacts["search_log"] = log_path.string();
  r.details["search"] = {
      {"best", best.genome.label()},
      {"best_fitness", best.fitness},
      {"best_uniform", best_uniform_label},
      {"best_uniform_fitness", best_uniform},
      {"uniform_fitness", uniform},
      {"improves_on_uniform", best.fitness > best_uniform},
      {"unique_evaluations", out.result.unique_evaluations},
      {"fitness_samples", fitness_set.size()},
      {"latency", latency_mode_name(config.search.latency)},
      {"best_full_test",
       {{"P", p_full},
        {"C", full.point.compression_c},
        {"T", full.point.latency_t_ms},
        {"I", full.index_i},
        {"Iprime", full.index_i_prime}}}};
  r.details["weights_hash"] = file_hash(config.weights);
  write_record(r, config);
  fmt::print(log, "best {} fitness {:.4f} (best uniform {} {:.4f}); full test P {:.4f}\n",
             best.genome.label(), best.fitness, best_uniform_label, best_uniform, p_full);
  return out;
}

RunRecord cmd_search(const ExperimentConfig& config, std::ostream& log) {
  return run_search(config, log).record;
}

RunRecord cmd_bench(const ExperimentConfig& config, std::ostream& log) {
  prepare(config);
  const Inputs in = load_inputs(config);
  const WeightStore weights = load_baseline(config, in.net);
  const Tensor timing_batch = timing_input(in.test, config.timing);
  const size_t layers = in.net.quantizable_layers().size();
  RunRecord r = begin_record("bench", config);
  r.seeds = {config.seeds.front()};
  set_threshold(r, config, config.threshold.fp_accuracy.value_or(0.0));

  const Dataset calib =
      sample_calibration(in.train, config.calibration_samples, config.seeds.front());
  const CalibrationStats stats = calibrate(in.net, weights, calib);
  json rows = json::array();
  for (int bits : config.bits) {
    const QuantizedModel model(in.net, weights, QuantConfig::uniform(bits, layers), stats);
    const LatencySample s = measure_latency(model.as_forward(), config.timing, timing_batch);
    json row = latency_json(s);
    row["bits"] = std::to_string(bits);
    rows.push_back(row);
    fmt::print(log, "bits {:2d}  median {:.3f} ms  p10 {:.3f}  p90 {:.3f}\n", bits, s.median_ms,
               s.p10_ms, s.p90_ms);
    for (const auto& w : s.warnings) fmt::print(log, "  warning: {}\n", w);
  }
  r.details["bench"] = rows;
  finalize(r);
  write_record(r, config);
  return r;
}

std::vector<fs::path> cmd_report(const std::vector<fs::path>& paths, ReportFormat format,
                                 const fs::path& out_dir, std::ostream& out) {
  if (paths.empty()) throw ConfigError("report needs at least one record");
  std::vector<RunRecord> records;
  std::vector<std::string> names;
  for (const auto& p : paths) {
    records.push_back(load_record(p));
    names.push_back(p.stem().string());
  }

  std::vector<fs::path> written;
  const auto emit = [&](const std::string& stem, const std::string& ext,
                        const std::string& text) {
    if (out_dir.empty()) {
      out << text;
    } else {
      const fs::path path = out_dir / (stem + ext);
      write_text(path, text);
      written.push_back(path);
    }
  };

  switch (format) {
    case ReportFormat::kJson:
      emit(records.size() == 1 ? names.front() : "report", ".report.json",
           format_json(records, names));
      break;
    case ReportFormat::kCsv:
    case ReportFormat::kTable:
      for (size_t k = 0; k < records.size(); ++k) {
        const bool csv = format == ReportFormat::kCsv;
        std::string text = csv ? format_csv(records[k]) : format_table(records[k]);
        if (out_dir.empty() && records.size() > 1) text = "# " + names[k] + "\n" + text;
        emit(names[k], csv ? ".csv" : ".txt", text);
      }
      break;
    case ReportFormat::kPlotData: {
      const fs::path dir = out_dir.empty() ? fs::path(".") : out_dir;
      for (size_t k = 0; k < records.size(); ++k) {
        for (const auto& series : format_plotdata(records[k])) {
          const fs::path path = dir / (names[k] + "." + series.name + ".dat");
          write_text(path, series.content);
          written.push_back(path);
        }
      }
      break;
    }
  }
  return written;
}

VerifyReport cmd_verify_paper(std::ostream& out) {
  VerifyReport report = verify_published(published_results());
  out << format_verify_report(report);
  return report;
}

}  // namespace qindex
