#include <iostream>

#include <CLI11.hpp>

#include "commands.hpp"
#include "fcdlif/error.hpp"

namespace {

const char* category(const fcdlif::Error& e) {
  if (dynamic_cast<const fcdlif::FormatError*>(&e)) return "format";
  if (dynamic_cast<const fcdlif::DimensionError*>(&e)) return "shape";
  if (dynamic_cast<const fcdlif::FixedLengthError*>(&e)) return "shape";
  if (dynamic_cast<const fcdlif::ConfigError*>(&e)) return "config";
  if (dynamic_cast<const fcdlif::CalibrationError*>(&e)) return "calibration";
  if (dynamic_cast<const fcdlif::NumericError*>(&e)) return "numeric";
  return "error";
}

}  // namespace

int main(int argc, char** argv) {
  using namespace fcdlif::cli;
  CLI::App app{"FC-DLIF: input functions from dynamic PET"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(FCDLIF_CLI_VERSION));

  SimulateOptions sim;
  auto* simulate = app.add_subcommand("simulate", "Generate synthetic image/AIF pairs");
  simulate->add_option("--n", sim.count, "Number of subjects")->check(CLI::PositiveNumber);
  simulate->add_option("--grid", sim.grid, "Voxel grid XxYxZ");
  simulate->add_option("--schedule", sim.schedule, "'standard' or blocks like 1x30,24x5,9x20,8x300 (count x seconds)");
  simulate->add_option("--voxel-size", sim.voxel_size_mm, "Isotropic voxel size in mm");
  simulate->add_option("--count-scale", sim.count_scale, "Counts per (SUV * s); 'inf' disables noise");
  simulate->add_option("--seed", sim.seed);
  simulate->add_option("--out-dir", sim.out_dir)->required();

  TrainOptions tr;
  auto add_train_flags = [&tr](CLI::App* cmd) {
    cmd->add_option("--data-dir", tr.data_dir, "Directory of <id>.fdlf + <id>_aif.csv pairs")->required();
    cmd->add_option("--epochs", tr.epochs)->check(CLI::PositiveNumber);
    cmd->add_option("--lr", tr.learning_rate);
    cmd->add_option("--folds", tr.folds);
    cmd->add_option("--runs", tr.runs);
    cmd->add_flag("--no-augment", tr.no_augment, "Disable Poisson augmentation");
    cmd->add_option("--seed", tr.seed);
    cmd->add_option("--model", tr.model, "fcdlif or baseline")->check(CLI::IsMember({"fcdlif", "baseline"}));
    cmd->add_option("--preset", tr.preset, "desk or reference")->check(CLI::IsMember({"desk", "reference"}));
    cmd->add_option("--out-dir", tr.out_dir)->required();
  };
  auto* train = app.add_subcommand("train", "Train one model; the first fold is held out for checkpoint selection");
  add_train_flags(train);
  auto* crossval = app.add_subcommand("crossval", "k-fold cross-validation with repeated runs");
  add_train_flags(crossval);
  crossval->add_option("--threads", tr.threads, "Parallel (fold, run) jobs")->check(CLI::PositiveNumber);

  PredictOptions pr;
  auto* predict = app.add_subcommand("predict", "Predict the input function of one image");
  predict->add_option("--weights", pr.weights)->required()->check(CLI::ExistingFile);
  predict->add_option("--image", pr.image)->required()->check(CLI::ExistingFile);
  predict->add_option("--out", pr.out, "Curve CSV (default: <image>_pred.csv)");

  EvaluateOptions ev;
  auto* evaluate = app.add_subcommand("evaluate", "Compare predicted and measured input functions");
  evaluate->add_option("--pred-dir", ev.pred_dir)->required()->check(CLI::ExistingDirectory);
  evaluate->add_option("--truth-dir", ev.truth_dir)->required()->check(CLI::ExistingDirectory);
  evaluate->add_flag("--patlak", ev.patlak, "Also compare voxel-wise Patlak Ki (needs images in --truth-dir)");
  evaluate->add_option("--patlak-frames", ev.patlak_frames, "Frames in the Patlak fit window (from the end)");
  evaluate->add_option("--ki-samples", ev.ki_samples, "Voxels sampled per image for the Ki scatter");
  evaluate->add_option("--ttest-pairing", ev.ttest_pairing, "Pair frames, or per-subject curve means")
      ->check(CLI::IsMember({"frame", "subject"}));
  evaluate->add_option("--seed", ev.seed);
  evaluate->add_option("--out-dir", ev.out_dir)->required();

  RobustnessOptions rb;
  auto* robustness = app.add_subcommand("robustness", "Frame-shift and truncation tests");
  robustness->add_option("--weights", rb.weights)->required()->check(CLI::ExistingFile);
  robustness->add_option("--image", rb.image)->required()->check(CLI::ExistingFile);
  robustness->add_option("--truth", rb.truth, "Measured AIF CSV for the wMSE column")->check(CLI::ExistingFile);
  robustness->add_option("--mode", rb.mode)->check(CLI::IsMember({"shift", "truncate"}));
  robustness->add_option("--out", rb.out)->required();

  CalibrateOptions ca;
  auto* calibrate = app.add_subcommand("calibrate", "Calibrate a continuous arterial-line trace");
  calibrate->add_option("--trace", ca.trace, "CSV time_s,value at 1 Hz")->required()->check(CLI::ExistingFile);
  calibrate->add_option("--samples", ca.samples, "CSV start_s,value (30 s windows)")->required()->check(CLI::ExistingFile);
  calibrate->add_option("--delay", ca.delay_s, "Dispersion delay in seconds")->required();
  calibrate->add_option("--schedule", ca.schedule, "Frame schedule for the resampled AIF");
  calibrate->add_option("--out-dir", ca.out_dir)->required();

  FeaturesOptions fe;
  auto* features = app.add_subcommand("features", "Export SFE embeddings, optionally with t-SNE");
  features->add_option("--weights", fe.weights)->required()->check(CLI::ExistingFile);
  features->add_option("--data-dir", fe.data_dir)->required()->check(CLI::ExistingDirectory);
  features->add_flag("--tsne", fe.tsne);
  features->add_option("--perplexity", fe.perplexity);
  features->add_option("--iterations", fe.iterations);
  features->add_option("--seed", fe.seed);
  features->add_option("--out", fe.out)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*simulate) run_simulate(sim);
    if (*train) run_train(tr);
    if (*crossval) run_crossval(tr);
    if (*predict) run_predict(pr);
    if (*evaluate) run_evaluate(ev);
    if (*robustness) run_robustness(rb);
    if (*calibrate) run_calibrate(ca);
    if (*features) run_features(fe);
  } catch (const fcdlif::Error& e) {
    std::cerr << "error: " << category(e) << ": " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: io: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
