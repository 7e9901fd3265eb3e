#include "commands.hpp"

#include <algorithm>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>
#include <vector>

#include "fcdlif/calibration.hpp"
#include "fcdlif/error.hpp"
#include "fcdlif/io.hpp"
#include "fcdlif/log.hpp"
#include "fcdlif/metrics.hpp"
#include "fcdlif/model.hpp"
#include "fcdlif/patlak.hpp"
#include "fcdlif/phantom.hpp"
#include "fcdlif/robustness.hpp"
#include "fcdlif/training.hpp"
#include "fcdlif/tsne.hpp"

namespace fs = std::filesystem;

namespace fcdlif::cli {
namespace {

using io::format_double;

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  for (std::string part; std::getline(ss, part, sep);) out.push_back(part);
  return out;
}

std::size_t parse_count(const std::string& text, const std::string& what) {
  try {
    std::size_t used = 0;
    const auto v = std::stoull(text, &used);
    if (used != text.size() || v == 0) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("bad " + what + " '" + text + "'");
  }
}

Extent3 parse_grid(const std::string& text) {
  const auto parts = split(text, 'x');
  if (parts.size() != 3) throw ConfigError("grid must look like 24x16x16, got '" + text + "'");
  return {parse_count(parts[0], "grid"), parse_count(parts[1], "grid"), parse_count(parts[2], "grid")};
}

FrameSchedule parse_schedule(const std::string& text) {
  if (text == "standard") return FrameSchedule::standard();
  std::vector<std::pair<std::size_t, double>> blocks;
  for (const auto& block : split(text, ',')) {
    const auto parts = split(block, 'x');
    if (parts.size() != 2) throw ConfigError("schedule blocks look like 24x5 (count x seconds), got '" + block + "'");
    blocks.emplace_back(parse_count(parts[0], "frame count"), io::parse_double(parts[1]));
  }
  return FrameSchedule::from_blocks(blocks);
}

std::string schedule_text(const FrameSchedule& schedule) {
  std::string out;
  for (std::size_t i = 0; i < schedule.size();) {
    std::size_t j = i;
    while (j < schedule.size() && schedule[j].duration_s == schedule[i].duration_s) ++j;
    out += (out.empty() ? "" : ",") + std::to_string(j - i) + "x" + format_double(schedule[i].duration_s);
    i = j;
  }
  return out;
}

std::string subject_id(std::size_t i) {
  std::string s = std::to_string(i);
  return "subject_" + std::string(s.size() < 3 ? 3 - s.size() : 0, '0') + s;
}

std::vector<Sample> load_dataset(const fs::path& dir) {
  std::vector<fs::path> images;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".fdlf") images.push_back(entry.path());
  }
  std::sort(images.begin(), images.end());
  if (images.empty()) throw FormatError(dir.string() + ": no .fdlf images found");
  std::vector<Sample> out;
  for (const auto& path : images) {
    Sample s;
    s.id = path.stem().string();
    s.image = io::load_image(path);
    s.aif = io::load_curve(dir / (s.id + "_aif.csv"), s.image.schedule);
    out.push_back(std::move(s));
  }
  return out;
}

ModelConfig preset(const std::string& name) { return name == "reference" ? reference_config() : desk_config(); }

ModelFactory factory_for(const TrainOptions& o) {
  const ModelSpec spec{o.model == "baseline" ? ModelKind::baseline : ModelKind::fcdlif, preset(o.preset)};
  return [spec](std::uint64_t seed) { return build_model(spec, seed); };
}

TrainConfig train_config(const TrainOptions& o) {
  TrainConfig c;
  c.epochs = o.epochs;
  c.learning_rate = o.learning_rate;
  c.folds = o.folds;
  c.runs = o.runs;
  // The fixed-length baseline is trained without augmentation.
  c.augment = !o.no_augment && o.model != "baseline";
  c.seed = o.seed;
  c.threads = o.threads;
  return c;
}

std::map<std::string, std::string> train_settings(const TrainOptions& o, const TrainConfig& c) {
  return {{"data_dir", o.data_dir.string()},   {"epochs", std::to_string(c.epochs)},
          {"lr", format_double(c.learning_rate)}, {"folds", std::to_string(c.folds)},
          {"runs", std::to_string(c.runs)},        {"augment", c.augment ? "true" : "false"},
          {"seed", std::to_string(c.seed)},        {"model", o.model},
          {"preset", o.preset},                    {"threads", std::to_string(c.threads)}};
}

io::CsvTable history_table(const TrainResult& r) {
  io::CsvTable t{{"epoch", "train_wmse", "validation_wmse"}, {}};
  for (const auto& e : r.history) {
    t.rows.push_back({std::to_string(e.epoch), format_double(e.train_wmse), format_double(e.validation_wmse)});
  }
  return t;
}

void check_image_matches(const InputFunctionModel& model, const DynamicPetImage& image) {
  if (!(model.config().sfe.input_shape == image.shape)) {
    throw DimensionError("image grid " + to_string(image.shape) + " does not match the model's " +
                         to_string(model.config().sfe.input_shape) + "; resample the spatial dimensions first");
  }
}

fs::path find_prediction(const fs::path& dir, const std::string& id) {
  for (const auto& name : {id + "_pred.csv", id + ".csv", id + "_aif.csv"}) {
    if (fs::exists(dir / name)) return dir / name;
  }
  throw FormatError(dir.string() + ": no prediction for '" + id + "' (looked for " + id + "_pred.csv)");
}

}  // namespace

void run_simulate(const SimulateOptions& o) {
  DatasetOptions d;
  d.count = o.count;
  d.grid = parse_grid(o.grid);
  d.voxel_size_mm = o.voxel_size_mm;
  d.schedule = parse_schedule(o.schedule);
  d.count_scale = o.count_scale;
  d.seed = o.seed;
  fs::create_directories(o.out_dir);
  io::CsvTable params{{"id", "a1_per_s", "a2", "a3", "lambda1_per_s", "lambda2_per_s", "lambda3_per_s", "t0_s"}, {}};
  for (std::size_t i = 0; i < d.count; ++i) {
    const auto subject = simulate_subject(d, i);
    const auto id = subject_id(i);
    io::save_image(o.out_dir / (id + ".fdlf"), subject.sample.image);
    io::save_curve(o.out_dir / (id + "_aif.csv"), subject.sample.aif);
    const auto& f = subject.feng;
    params.rows.push_back({id, format_double(f.a1), format_double(f.a2), format_double(f.a3), format_double(f.lambda1),
                           format_double(f.lambda2), format_double(f.lambda3), format_double(f.t0_s)});
  }
  io::save_csv(o.out_dir / "aif_parameters.csv", params);
  io::write_manifest(o.out_dir / "manifest.json", "simulate",
                     {{"n", std::to_string(d.count)},
                      {"grid", to_string(d.grid)},
                      {"schedule", schedule_text(d.schedule)},
                      {"voxel_size_mm", format_double(d.voxel_size_mm)},
                      {"count_scale", format_double(d.count_scale)},
                      {"seed", std::to_string(d.seed)}});
  std::cout << "wrote " << d.count << " subjects to " << o.out_dir.string() << "\n";
}

void run_train(const TrainOptions& o) {
  const auto data = load_dataset(o.data_dir);
  const auto cfg = train_config(o);
  if (cfg.folds < 2) throw ConfigError("--folds must be at least 2");
  std::vector<Sample> training, validation;
  if (data.size() >= cfg.folds) {
    const auto fold = kfold_split(data.size(), cfg.folds, cfg.seed).front();
    for (auto i : fold.train) training.push_back(data[i]);
    for (auto i : fold.validation) validation.push_back(data[i]);
  } else {
    log::warning("fewer samples than folds; training on everything without a validation split");
    training = data;
  }
  auto model = factory_for(o)(cfg.seed);
  const auto result = train(*model, training, validation, cfg, [](const EpochRecord& e) {
    log::info("epoch " + std::to_string(e.epoch) + " train " + format_double(e.train_wmse) + " validation " +
              format_double(e.validation_wmse));
  });
  fs::create_directories(o.out_dir);
  io::save_weights(o.out_dir / "weights.fdlw", *model);
  io::save_csv(o.out_dir / "history.csv", history_table(result));
  auto settings = train_settings(o, cfg);
  settings["best_epoch"] = std::to_string(result.best_epoch);
  io::write_manifest(o.out_dir / "manifest.json", "train", settings);
  std::cout << "best epoch " << result.best_epoch << " validation wMSE " << format_double(result.best_validation_wmse)
            << "\n";
}

void run_crossval(const TrainOptions& o) {
  const auto data = load_dataset(o.data_dir);
  const auto cfg = train_config(o);
  const auto result = cross_validate(data, cfg, factory_for(o));
  fs::create_directories(o.out_dir / "predictions");
  for (const auto& job : result.jobs) {
    const auto tag = "fold" + std::to_string(job.fold) + "_run" + std::to_string(job.run);
    io::save_weights(o.out_dir / (tag + ".fdlw"), *job.model);
    io::save_csv(o.out_dir / (tag + "_history.csv"), history_table(job.training));
    for (std::size_t v = 0; v < job.validation.size(); ++v) {
      const auto& id = data[job.validation[v]].id;
      io::save_curve(o.out_dir / "predictions" / (id + "_run" + std::to_string(job.run) + ".csv"), job.predictions[v]);
    }
  }
  io::CsvTable metrics{{"fold", "run", "sample", "id", "mse", "mbe", "wmse"}, {}};
  for (const auto& r : result.records) {
    metrics.rows.push_back({std::to_string(r.fold), std::to_string(r.run), std::to_string(r.sample), r.id,
                            format_double(r.mse), format_double(r.mbe), format_double(r.wmse)});
  }
  io::save_csv(o.out_dir / "metrics.csv", metrics);
  io::CsvTable summary{{"id", "fold", "frame_index", "mean", "stddev"}, {}};
  fs::create_directories(o.out_dir / "mean");
  for (const auto& s : result.summarize()) {
    const auto& sample = data[s.sample];
    for (std::size_t t = 0; t < s.mean.size(); ++t) {
      summary.rows.push_back({sample.id, std::to_string(s.fold), std::to_string(t), format_double(s.mean[t]),
                              format_double(s.stddev[t])});
    }
    io::save_curve(o.out_dir / "mean" / (sample.id + "_pred.csv"), make_input_function(sample.image.schedule, s.mean));
  }
  io::save_csv(o.out_dir / "summary.csv", summary);
  io::write_manifest(o.out_dir / "manifest.json", "crossval", train_settings(o, cfg));
  std::cout << result.jobs.size() << " models, " << result.records.size() << " held-out predictions\n";
}

void run_predict(const PredictOptions& o) {
  const auto model = io::load_weights(o.weights);
  const auto image = io::load_image(o.image);
  check_image_matches(*model, image);
  const auto curve = predict(*model, image);
  fs::path out = o.out;
  if (out.empty()) out = o.image.parent_path() / (o.image.stem().string() + "_pred.csv");
  io::save_curve(out, curve);
  std::cout << out.string() << "\n";
}

void run_evaluate(const EvaluateOptions& o) {
  std::vector<fs::path> truths;
  for (const auto& entry : fs::directory_iterator(o.truth_dir)) {
    const auto name = entry.path().filename().string();
    if (name.size() > 8 && name.ends_with("_aif.csv")) truths.push_back(entry.path());
  }
  std::sort(truths.begin(), truths.end());
  if (truths.empty()) throw FormatError(o.truth_dir.string() + ": no <id>_aif.csv files found");

  std::vector<InputFunction> preds, targets;
  std::vector<double> pooled_pred, pooled_truth;
  io::CsvTable per_sample{{"id", "mse", "mbe", "wmse"}, {}};
  io::CsvTable ki{{"id", "voxel", "ki_reference", "ki_predicted"}, {}};
  for (const auto& path : truths) {
    const auto name = path.filename().string();
    const auto id = name.substr(0, name.size() - 8);
    const auto truth = io::load_curve(path);
    const auto pred = io::load_curve(find_prediction(o.pred_dir, id));
    if (pred.size() != truth.size()) {
      throw DimensionError("'" + id + "': prediction has " + std::to_string(pred.size()) + " frames, truth has " +
                           std::to_string(truth.size()));
    }
    per_sample.rows.push_back({id, format_double(mse(pred.values, truth.values)),
                               format_double(mbe(pred.values, truth.values)),
                               format_double(weighted_mse(pred, truth, LossWeights::for_length(truth.size())))});
    pooled_pred.insert(pooled_pred.end(), pred.values.begin(), pred.values.end());
    pooled_truth.insert(pooled_truth.end(), truth.values.begin(), truth.values.end());
    preds.push_back(pred);
    targets.push_back(truth);
    if (o.patlak) {
      const auto image = io::load_image(o.truth_dir / (id + ".fdlf"));
      const auto window = FitWindow::last_frames(image.frame_count(), o.patlak_frames);
      try {
        for (const auto& p : ki_scatter(image, truth.values, pred.values, window, o.ki_samples, o.seed)) {
          ki.rows.push_back({id, std::to_string(p.voxel), format_double(p.ki_reference), format_double(p.ki_predicted)});
        }
      } catch (const NumericError& e) {
        log::warning("'" + id + "': Ki scatter skipped: " + e.what());
      }
    }
  }

  io::CsvTable summary{{"metric", "value"}, {}};
  auto put = [&summary](const std::string& k, double v) { summary.rows.push_back({k, format_double(v)}); };
  put("mse", mse(pooled_pred, pooled_truth));
  put("mbe", mbe(pooled_pred, pooled_truth));
  try {
    const auto reg = orthogonal_regression(pooled_truth, pooled_pred);
    put("a", reg.slope);
    put("b", reg.intercept);
    put("r", reg.r);
    put("r2", reg.r2);
  } catch (const NumericError& e) {
    log::warning(std::string("orthogonal regression skipped: ") + e.what());
  }
  std::vector<double> subject_pred, subject_truth;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    subject_pred.push_back(std::accumulate(preds[i].values.begin(), preds[i].values.end(), 0.0) / preds[i].size());
    subject_truth.push_back(std::accumulate(targets[i].values.begin(), targets[i].values.end(), 0.0) / targets[i].size());
  }
  const bool by_subject = o.ttest_pairing == "subject";
  const auto tt = by_subject ? paired_ttest(subject_pred, subject_truth) : paired_ttest(pooled_pred, pooled_truth);
  put("t", tt.t);
  put("p", tt.p);
  summary.rows.push_back({"reject_h0", tt.reject ? "true" : "false"});

  io::CsvTable segments{{"segment", "count", "p5", "p25", "p50", "p75", "p95"}, {}};
  for (const auto& s : segment_error_profile(preds, targets)) {
    std::vector<std::string> row{s.segment, std::to_string(s.summary.count)};
    for (double v : s.summary.values) row.push_back(format_double(v));
    segments.rows.push_back(row);
  }
  std::vector<double> residuals(pooled_pred.size());
  for (std::size_t i = 0; i < residuals.size(); ++i) residuals[i] = pooled_pred[i] - pooled_truth[i];
  io::CsvTable qq{{"theoretical", "sample"}, {}};
  for (const auto& p : qq_points(residuals)) qq.rows.push_back({format_double(p.theoretical), format_double(p.sample)});

  fs::create_directories(o.out_dir);
  io::save_csv(o.out_dir / "metrics.csv", summary);
  io::save_csv(o.out_dir / "per_sample.csv", per_sample);
  io::save_csv(o.out_dir / "segments.csv", segments);
  io::save_csv(o.out_dir / "qq.csv", qq);
  if (o.patlak) io::save_csv(o.out_dir / "ki_scatter.csv", ki);
  io::write_manifest(o.out_dir / "manifest.json", "evaluate",
                     {{"pred_dir", o.pred_dir.string()},
                      {"truth_dir", o.truth_dir.string()},
                      {"patlak", o.patlak ? "true" : "false"},
                      {"patlak_frames", std::to_string(o.patlak_frames)},
                      {"ki_samples", std::to_string(o.ki_samples)},
                      {"ttest_pairing", o.ttest_pairing},
                      {"seed", std::to_string(o.seed)}});
  std::cout << io::to_csv(summary);
}

void run_robustness(const RobustnessOptions& o) {
  const auto model = io::load_weights(o.weights);
  const auto image = io::load_image(o.image);
  check_image_matches(*model, image);
  std::optional<InputFunction> truth;
  if (!o.truth.empty()) truth = io::load_curve(o.truth, image.schedule);
  const auto report = o.mode == "shift" ? shift_test(*model, image, truth) : truncation_test(*model, image, truth);

  io::CsvTable summary{{"key", "value"}, {}};
  summary.rows.push_back({"mode", o.mode});
  summary.rows.push_back({"model", std::string(kind_name(model->kind()))});
  summary.rows.push_back({"input_frames", std::to_string(image.frame_count())});
  summary.rows.push_back({"output_frames", std::to_string(report.modified.size())});
  summary.rows.push_back({"error", report.error.value_or("")});
  summary.rows.push_back({"interior_first", std::to_string(report.interior_first)});
  summary.rows.push_back({"interior_count", std::to_string(report.interior_count)});
  summary.rows.push_back({"interior_max_deviation", format_double(report.interior_max_deviation)});
  summary.rows.push_back({"overall_max_deviation", format_double(report.overall_max_deviation)});
  summary.rows.push_back({"wmse_vs_truth", report.wmse_vs_truth ? format_double(*report.wmse_vs_truth) : ""});
  io::save_csv(o.out, summary);

  io::CsvTable detail{{"position", "reference", "modified", "deviation", "interior"}, {}};
  for (std::size_t i = 0; i < report.deviation.size(); ++i) {
    const bool interior = i >= report.interior_first && i < report.interior_first + report.interior_count;
    detail.rows.push_back({std::to_string(i), format_double(report.reference[i + report.reference_offset]),
                           format_double(report.modified[i + report.modified_offset]), format_double(report.deviation[i]),
                           interior ? "1" : "0"});
  }
  auto detail_path = o.out;
  detail_path.replace_filename(o.out.stem().string() + "_alignment.csv");
  io::save_csv(detail_path, detail);
  io::write_manifest(o.out.parent_path() / "manifest.json", "robustness",
                     {{"weights", o.weights.string()}, {"image", o.image.string()}, {"mode", o.mode}});
  std::cout << io::to_csv(summary);
}

void run_calibrate(const CalibrateOptions& o) {
  const auto trace = io::load_trace(o.trace);
  const auto samples = io::load_samples(o.samples);
  const auto result = calibrate(trace, samples, o.delay_s);
  const auto calibrated = apply_calibration(delay_correct(trace, o.delay_s), result);
  const auto schedule = parse_schedule(o.schedule);

  fs::create_directories(o.out_dir);
  io::save_trace(o.out_dir / "calibrated_trace.csv", calibrated);
  io::save_curve(o.out_dir / "calibrated_aif.csv", resample_to_frames(calibrated, schedule));
  io::CsvTable factors{{"index", "start_s", "manual_value", "factor", "included"}, {}};
  for (std::size_t i = 0; i < samples.size(); ++i) {
    factors.rows.push_back({std::to_string(i), format_double(samples[i].start_s), format_double(samples[i].value),
                            format_double(result.factors[i]), result.included[i] ? "1" : "0"});
  }
  io::save_csv(o.out_dir / "factors.csv", factors);
  io::write_manifest(o.out_dir / "manifest.json", "calibrate",
                     {{"trace", o.trace.string()},
                      {"samples", o.samples.string()},
                      {"delay_s", format_double(o.delay_s)},
                      {"schedule", schedule_text(schedule)},
                      {"overall_factor", format_double(result.overall_factor)}});
  std::cout << "overall factor " << format_double(result.overall_factor) << "\n";
}

void run_features(const FeaturesOptions& o) {
  const auto model = io::load_weights(o.weights);
  const auto* fc = dynamic_cast<const FcDlifModel*>(model.get());
  if (fc == nullptr) throw ConfigError("features needs FC-DLIF weights");
  const auto data = load_dataset(o.data_dir);
  std::vector<double> rows;
  std::vector<std::pair<std::string, std::size_t>> labels;
  std::size_t width = 0;
  for (const auto& s : data) {
    check_image_matches(*model, s.image);
    const auto f = extract_sfe_features(*fc, s.image);
    width = f.rows;
    for (std::size_t t = 0; t < f.cols; ++t) {
      for (std::size_t e = 0; e < f.rows; ++e) rows.push_back(f.at(e, t));
      labels.emplace_back(s.id, t);
    }
  }
  io::CsvTable table{{"id", "frame_index"}, {}};
  for (std::size_t e = 0; e < width; ++e) table.header.push_back("f" + std::to_string(e));
  std::optional<TsneResult> embedding;
  if (o.tsne) {
    TsneConfig cfg;
    cfg.perplexity = o.perplexity;
    cfg.iterations = o.iterations;
    cfg.seed = o.seed;
    embedding = tsne_embed(rows, labels.size(), width, cfg);
    table.header.push_back("tsne_x");
    table.header.push_back("tsne_y");
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    std::vector<std::string> row{labels[i].first, std::to_string(labels[i].second)};
    for (std::size_t e = 0; e < width; ++e) row.push_back(format_double(rows[i * width + e]));
    if (embedding) {
      row.push_back(format_double(embedding->coords[i][0]));
      row.push_back(format_double(embedding->coords[i][1]));
    }
    table.rows.push_back(std::move(row));
  }
  io::save_csv(o.out, table);
  std::map<std::string, std::string> settings{{"weights", o.weights.string()},
                                              {"data_dir", o.data_dir.string()},
                                              {"tsne", o.tsne ? "true" : "false"},
                                              {"perplexity", format_double(o.perplexity)},
                                              {"iterations", std::to_string(o.iterations)},
                                              {"seed", std::to_string(o.seed)}};
  if (embedding) {
    settings["initial_kl"] = format_double(embedding->initial_kl);
    settings["final_kl"] = format_double(embedding->final_kl);
  }
  io::write_manifest(o.out.parent_path() / "manifest.json", "features", settings);
  std::cout << labels.size() << " feature rows written to " << o.out.string() << "\n";
}

}  // namespace fcdlif::cli
