// Command-line front end: synthesize datasets, train, evaluate, predict and
// compute dataset statistics. Results go to files/stdout, progress to
// stderr. Exit codes: 0 success, 1 usage, 2 data error, 3 numerical failure.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "dds/checkpoint.hpp"
#include "dds/dataset.hpp"
#include "dds/metrics.hpp"
#include "dds/png_io.hpp"
#include "dds/synth.hpp"
#include "dds/train.hpp"

namespace fs = std::filesystem;
using namespace dds;

namespace {

void write_run_config(CLI::App& app, const fs::path& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw DataError("cannot write " + path.string());
  os << app.config_to_str(true, true);
}

std::string format_index(int i) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%05d", i);
  return buf;
}

TrainSample load_pair(const DatasetManifest& manifest, const ManifestRecord& record, int width,
                      int height) {
  TrainSample sample;
  Tensor raw = read_image_png(manifest.resolve(record.image_path));
  sample.image = canonicalize(raw, {width, height}, record.image_path);
  BinaryMask mask = read_mask_png(manifest.resolve(record.mask_path));
  sample.mask = resize_nearest(mask, height, width);
  return sample;
}

// ---------------------------------------------------------------------------
// synth

struct SynthOptions {
  int count = 10;
  std::uint64_t seed = 0;
  std::string out;
  int width = 512, height = 256;
  int min_caps = 1, max_caps = 4;
  double min_radius = 8.0, max_radius = 25.0;
  double noise = 0.02;
  double split_ratio = 0.8;
};

void run_synth(const SynthOptions& opt, CLI::App& app) {
  const fs::path out(opt.out);
  fs::create_directories(out / "images");
  fs::create_directories(out / "masks");
  write_run_config(app, out / "run_config.txt");

  SceneSpec spec;
  spec.width = opt.width;
  spec.height = opt.height;
  spec.min_caps = opt.min_caps;
  spec.max_caps = opt.max_caps;
  spec.min_radius_deg = opt.min_radius;
  spec.max_radius_deg = opt.max_radius;
  spec.noise_sigma = opt.noise;

  DatasetManifest manifest;
  manifest.base_dir = out;
  for (int i = 0; i < opt.count; ++i) {
    auto [image, mask] = synth_scene(opt.seed + static_cast<std::uint64_t>(i), spec);
    ManifestRecord record;
    record.image_path = "images/" + format_index(i) + ".png";
    record.mask_path = "masks/" + format_index(i) + ".png";
    record.source = "synthetic";
    write_image_png(out / record.image_path, image.pixels);
    write_mask_png(out / record.mask_path, mask);
    manifest.records.push_back(std::move(record));
  }
  std::cerr << "synth: wrote " << opt.count << " pairs under " << out.string() << "\n";
  if (manifest.records.size() >= 2) split_manifest(manifest, opt.split_ratio, opt.seed);
  manifest.save(out / "manifest.json");
  std::cout << (out / "manifest.json").string() << "\n";
}

// ---------------------------------------------------------------------------
// train

struct TrainOptions {
  std::string manifest;
  std::string out;
  TrainConfig cfg;
  bool no_da = false, no_mci = false, no_deep_supervision = false;
};

void run_train(TrainOptions& opt, CLI::App& app) {
  opt.cfg.enable_da = !opt.no_da;
  opt.cfg.enable_mci = !opt.no_mci;
  opt.cfg.deep_supervision = !opt.no_deep_supervision;
  opt.cfg.validate();

  const fs::path out(opt.out);
  fs::create_directories(out);
  write_run_config(app, out / "run_config.txt");

  DatasetManifest manifest = DatasetManifest::load(opt.manifest);
  manifest.check_files_exist();
  std::vector<TrainSample> train_set;
  for (std::size_t i : manifest.split_indices("train"))
    train_set.push_back(load_pair(manifest, manifest.records[i], opt.cfg.width, opt.cfg.height));
  if (train_set.empty()) throw DataError("train: manifest has no train split");
  std::cerr << "train: " << train_set.size() << " images, " << opt.cfg.iterations
            << " iterations, profile " << opt.cfg.profile << "\n";

  DdsNet net(opt.cfg.net_config());
  net.init_params(opt.cfg.seed);

  CheckpointMeta meta;
  meta.net = net.config();
  meta.seed = opt.cfg.seed;
  meta.width = opt.cfg.width;
  meta.height = opt.cfg.height;

  std::vector<IterationRecord> curve =
      train_loop(net, opt.cfg, train_set, [&](int iteration) {
        meta.iteration = iteration;
        const fs::path path = iteration == opt.cfg.iterations
                                  ? out / "checkpoint.dds"
                                  : out / ("checkpoint_" + std::to_string(iteration) + ".dds");
        save_checkpoint(path, net, meta);
        std::cerr << "train: checkpoint at iteration " << iteration << "\n";
      });

  write_loss_curve(out / "loss_curve.csv", curve);
  std::cerr << "train: final total loss " << curve.back().loss.total << "\n";
  std::cout << (out / "checkpoint.dds").string() << "\n";
}

// ---------------------------------------------------------------------------
// eval

struct EvalOptions {
  std::string checkpoint;
  std::string manifest;
  std::string split = "test";
  std::string out;
  bool pooled_f = false;
};

void run_eval(const EvalOptions& opt, CLI::App& app) {
  const fs::path out(opt.out);
  fs::create_directories(out);
  write_run_config(app, out / "run_config.txt");

  auto [net, meta] = load_checkpoint(opt.checkpoint);
  DatasetManifest manifest = DatasetManifest::load(opt.manifest);

  std::vector<PerImageMetrics> records;
  for (std::size_t i : manifest.split_indices(opt.split)) {
    const ManifestRecord& record = manifest.records[i];
    TrainSample pair = load_pair(manifest, record, meta.width, meta.height);
    SideOutputs sides = net->forward(pair.image.pixels);

    PerImageMetrics m;
    m.id = record.image_path;
    m.mae_value = mae(sides.final_map, pair.mask);
    try {
      m.f_beta = f_beta_adaptive(sides.final_map, pair.mask);
      m.weighted = weighted_f(sides.final_map, pair.mask);
      m.adaptive_confusion =
          confusion_at(sides.final_map, pair.mask, adaptive_threshold(sides.final_map));
    } catch (const UndefinedMetric&) {
      m.excluded = true;
    }
    records.push_back(std::move(m));
    std::cerr << "eval: " << record.image_path << "\n";
  }
  if (records.empty()) throw DataError("eval: split '" + opt.split + "' is empty");

  MetricsReport report = aggregate(records);

  std::ofstream csv(out / "report.csv", std::ios::trunc);
  csv.precision(12);
  csv << "image,mae,weighted_f,f_beta,excluded\n";
  for (const PerImageMetrics& r : report.per_image)
    csv << r.id << ',' << r.mae_value << ',' << r.weighted << ',' << r.f_beta << ','
        << (r.excluded ? 1 : 0) << '\n';
  csv << "MEAN," << report.mean_mae << ',' << report.mean_weighted_f << ','
      << report.mean_f_beta << ",\n";

  std::printf("%-12s %10s %10s %10s\n", "", "MAE v", "F^w_beta ^", "F_beta ^");
  std::printf("%-12s %10.4f %10.4f %10.4f\n", "dds", report.mean_mae, report.mean_weighted_f,
              report.mean_f_beta);
  if (report.excluded_count > 0)
    std::printf("excluded images (empty ground truth): %d\n", report.excluded_count);
  if (opt.pooled_f) std::printf("pooled F_beta: %.4f\n", pooled_f_beta(report.per_image));
}

// ---------------------------------------------------------------------------
// predict

struct PredictOptions {
  std::string checkpoint;
  std::string image;
  std::string out = "saliency.png";
};

void run_predict(const PredictOptions& opt, CLI::App& app) {
  auto [net, meta] = load_checkpoint(opt.checkpoint);
  Tensor raw = read_image_png(opt.image);
  const int orig_h = raw.dim(1), orig_w = raw.dim(2);

  EquirectImage canon = canonicalize(raw, {meta.width, meta.height}, opt.image);
  SideOutputs sides = net->forward(canon.pixels);

  // back to the caller's resolution
  Tensor map({1, meta.height, meta.width});
  std::copy(sides.final_map.values.data(),
            sides.final_map.values.data() + sides.final_map.values.size(), map.data());
  Tensor up = resize_bilinear(map, orig_h, orig_w);
  SaliencyMap final_map;
  final_map.values = Tensor({orig_h, orig_w});
  std::copy(up.data(), up.data() + up.size(), final_map.values.data());

  write_saliency_png(opt.out, final_map);
  write_run_config(app, fs::path(opt.out).replace_extension("run_config.txt"));
  std::cout << opt.out << "\n";
}

// ---------------------------------------------------------------------------
// stats

struct StatsOptions {
  std::string manifest;
  std::string out;
  int width = 512, height = 256;
  std::vector<double> count_edges{0.5, 1.5, 2.5, 3.5, 4.5, 5.5, 6.5, 7.5, 8.5, 9.5, 10.5};
  std::vector<double> area_edges{0.0, 0.01, 0.02, 0.05, 0.1, 0.2, 0.3, 0.5, 1.0};
};

void write_histogram_csv(const fs::path& path, const std::vector<double>& edges,
                         const std::vector<std::int64_t>& counts) {
  std::ofstream os(path, std::ios::trunc);
  os << "bin_low,bin_high,count\n";
  for (std::size_t i = 0; i < counts.size(); ++i)
    os << edges[i] << ',' << edges[i + 1] << ',' << counts[i] << '\n';
}

void write_histogram_png(const fs::path& path, const std::vector<std::int64_t>& counts) {
  const int bar_w = 24, height = 128;
  const int width = bar_w * static_cast<int>(counts.size());
  std::int64_t peak = 1;
  for (std::int64_t c : counts) peak = std::max(peak, c);

  SaliencyMap img;
  img.values = Tensor::full({height, width}, 1.0);
  for (std::size_t b = 0; b < counts.size(); ++b) {
    const int bar = static_cast<int>(static_cast<double>(counts[b]) / static_cast<double>(peak) *
                                     (height - 2));
    for (int y = height - bar; y < height; ++y)
      for (int x = static_cast<int>(b) * bar_w + 1; x < static_cast<int>(b + 1) * bar_w - 1; ++x)
        img.values.at(y, x) = 0.0;
  }
  write_saliency_png(path, img);
}

void run_stats(const StatsOptions& opt, CLI::App& app) {
  const fs::path out(opt.out);
  fs::create_directories(out);
  write_run_config(app, out / "run_config.txt");

  DatasetManifest manifest = DatasetManifest::load(opt.manifest);
  manifest.check_files_exist();
  if (manifest.records.empty()) throw DataError("stats: manifest is empty");

  std::vector<BinaryMask> masks;
  std::vector<double> counts_per_image;
  std::vector<double> all_area_fractions;
  std::ofstream objects_csv(out / "objects.csv", std::ios::trunc);
  objects_csv << "image,object_count,foreground_fraction\n";
  for (const ManifestRecord& record : manifest.records) {
    BinaryMask mask = read_mask_png(manifest.resolve(record.mask_path));
    ObjectStats stats = object_stats(mask);
    counts_per_image.push_back(stats.count);
    double fg = 0.0;
    for (double f : stats.area_fractions) fg += f;
    for (double f : stats.area_fractions) all_area_fractions.push_back(f);
    objects_csv << record.image_path << ',' << stats.count << ',' << fg << '\n';
    masks.push_back(std::move(mask));
  }
  std::cerr << "stats: scanned " << masks.size() << " masks\n";

  Tensor aam = average_annotation_map(masks, opt.height, opt.width);
  SaliencyMap aam_map;
  aam_map.values = std::move(aam);
  write_saliency_png(out / "aam.png", aam_map);

  const std::vector<std::int64_t> count_hist = histogram(counts_per_image, opt.count_edges);
  const std::vector<std::int64_t> area_hist = histogram(all_area_fractions, opt.area_edges);
  write_histogram_csv(out / "count_histogram.csv", opt.count_edges, count_hist);
  write_histogram_csv(out / "area_histogram.csv", opt.area_edges, area_hist);
  write_histogram_png(out / "count_histogram.png", count_hist);
  write_histogram_png(out / "area_histogram.png", area_hist);
  std::cout << (out / "aam.png").string() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Salient object detection on 360-degree equirectangular images"};
  app.require_subcommand(1);
  app.set_config("--config", "",
                 "Plain-text key=value configuration file (INI sections per subcommand)");

  SynthOptions synth;
  CLI::App* synth_cmd = app.add_subcommand("synth", "Generate a synthetic dataset with a manifest");
  synth_cmd->add_option("--count", synth.count, "Number of image/mask pairs")->capture_default_str();
  synth_cmd->add_option("--seed", synth.seed, "Master seed")->capture_default_str();
  synth_cmd->add_option("--out", synth.out, "Output directory")->required();
  synth_cmd->add_option("--width", synth.width)->capture_default_str();
  synth_cmd->add_option("--height", synth.height)->capture_default_str();
  synth_cmd->add_option("--min-caps", synth.min_caps)->capture_default_str();
  synth_cmd->add_option("--max-caps", synth.max_caps)->capture_default_str();
  synth_cmd->add_option("--min-radius", synth.min_radius, "Degrees")->capture_default_str();
  synth_cmd->add_option("--max-radius", synth.max_radius, "Degrees")->capture_default_str();
  synth_cmd->add_option("--noise", synth.noise, "Gaussian pixel noise sigma")->capture_default_str();
  synth_cmd->add_option("--split-ratio", synth.split_ratio)->capture_default_str();

  TrainOptions train;
  CLI::App* train_cmd = app.add_subcommand("train", "Train on the manifest's train split");
  train_cmd->add_option("--manifest", train.manifest, "manifest.json path")->required();
  train_cmd->add_option("--out", train.out, "Output directory")->required();
  train_cmd->add_option("--seed", train.cfg.seed)->capture_default_str();
  train_cmd->add_option("--profile", train.cfg.profile, "mini or resnet50-dilated")
      ->check(CLI::IsMember({"mini", "resnet50-dilated"}))
      ->capture_default_str();
  train_cmd->add_option("--blocks", train.cfg.blocks_n, "Distortion grid size N")
      ->capture_default_str();
  train_cmd->add_option("--iterations", train.cfg.iterations)->capture_default_str();
  train_cmd->add_option("--base-lr", train.cfg.base_lr)->capture_default_str();
  train_cmd->add_option("--head-lr-mult", train.cfg.head_lr_multiplier)->capture_default_str();
  train_cmd->add_option("--momentum", train.cfg.momentum)->capture_default_str();
  train_cmd->add_option("--weight-decay", train.cfg.weight_decay)->capture_default_str();
  train_cmd->add_option("--poly-power", train.cfg.poly_power)->capture_default_str();
  train_cmd->add_option("--width", train.cfg.width)->capture_default_str();
  train_cmd->add_option("--height", train.cfg.height)->capture_default_str();
  train_cmd->add_option("--batch", train.cfg.batch_size)->capture_default_str();
  train_cmd->add_option("--hflip-prob", train.cfg.hflip_prob)->capture_default_str();
  train_cmd->add_option("--checkpoint-every", train.cfg.checkpoint_every)->capture_default_str();
  train_cmd->add_flag("--no-da", train.no_da, "Disable the distortion-adaptive module");
  train_cmd->add_flag("--no-mci", train.no_mci, "Disable multi-scale context integration");
  train_cmd->add_flag("--no-deep-supervision", train.no_deep_supervision,
                      "Supervise only the finest side output");

  EvalOptions eval;
  CLI::App* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on a manifest split");
  eval_cmd->add_option("--checkpoint", eval.checkpoint)->required();
  eval_cmd->add_option("--manifest", eval.manifest)->required();
  eval_cmd->add_option("--split", eval.split)
      ->check(CLI::IsMember({"train", "test"}))
      ->capture_default_str();
  eval_cmd->add_option("--out", eval.out, "Output directory")->required();
  eval_cmd->add_flag("--pooled-f", eval.pooled_f, "Also report dataset-pooled F_beta");

  PredictOptions predict;
  CLI::App* predict_cmd = app.add_subcommand("predict", "Write a saliency map for one image");
  predict_cmd->add_option("--checkpoint", predict.checkpoint)->required();
  predict_cmd->add_option("--image", predict.image)->required();
  predict_cmd->add_option("--out", predict.out, "Output PNG")->capture_default_str();

  StatsOptions stats;
  CLI::App* stats_cmd = app.add_subcommand("stats", "Dataset statistics: AAM and histograms");
  stats_cmd->add_option("--manifest", stats.manifest)->required();
  stats_cmd->add_option("--out", stats.out, "Output directory")->required();
  stats_cmd->add_option("--width", stats.width, "AAM width")->capture_default_str();
  stats_cmd->add_option("--height", stats.height, "AAM height")->capture_default_str();
  stats_cmd->add_option("--count-edges", stats.count_edges, "Object-count histogram edges");
  stats_cmd->add_option("--area-edges", stats.area_edges, "Area-fraction histogram edges");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (app.got_subcommand(synth_cmd)) run_synth(synth, app);
    if (app.got_subcommand(train_cmd)) run_train(train, app);
    if (app.got_subcommand(eval_cmd)) run_eval(eval, app);
    if (app.got_subcommand(predict_cmd)) run_predict(predict, app);
    if (app.got_subcommand(stats_cmd)) run_stats(stats, app);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
