// gcntrack command-line tool: track, eval, solve, synth, ablate.

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "gcntrack/config.hpp"
#include "gcntrack/dataset.hpp"
#include "gcntrack/errors.hpp"
#include "gcntrack/eval.hpp"
#include "gcntrack/io.hpp"
#include "gcntrack/solver.hpp"
#include "gcntrack/tracker.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace gcntrack;

namespace {

constexpr int kExitInput = 1;
constexpr int kExitNumerical = 2;

// Runs fn(0..n-1) on up to `jobs` threads; rethrows the first failure.
template <typename Fn>
void parallel_for(int n, int jobs, Fn&& fn) {
  jobs = std::clamp(jobs, 1, std::max(1, n));
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (int i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = n;
      }
    }
  };
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
}

// Removes a freshly created output directory unless dismissed.
class OutputGuard {
 public:
  explicit OutputGuard(const fs::path& dir) : dir_(dir), created_(!fs::exists(dir)) {
    fs::create_directories(dir_);
  }
  ~OutputGuard() {
    if (armed_ && created_) {
      std::error_code ec;
      fs::remove_all(dir_, ec);
    }
  }
  void dismiss() { armed_ = false; }

 private:
  fs::path dir_;
  bool created_;
  bool armed_ = true;
};

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

json box_json(const std::optional<Rect>& box) {
  if (!box) return nullptr;
  return json::array({box->x, box->y, box->width, box->height});
}

// Flag values layered over the JSON config.
struct TrackerFlags {
  std::optional<double> sigma, lambda1, lambda2, alpha, beta, min_error, ridge;
  std::optional<double> region_expand, threshold;
  std::optional<int> max_iter, superpixels, min_area;
  std::optional<std::string> mode, fidelity, topology;

  void add_to(CLI::App* app) {
    app->add_option("--sigma", sigma, "Edge kernel width (default 10)");
    app->add_option("--lambda1", lambda1, "Smoothing strength (default 0.01)");
    app->add_option("--lambda2", lambda2, "Sharpening strength (default 0.07)");
    app->add_option("--alpha", alpha, "Graph regularization weight (default 0.001)");
    app->add_option("--beta", beta, "Indicator fitting weight (default 50)");
    app->add_option("--min-error", min_error, "Relative loss change to stop (default 1e-4)");
    app->add_option("--max-iter", max_iter, "Solver iteration cap (default 100)");
    app->add_option("--ridge", ridge, "Ridge added to the W normal equations (default 1e-8)");
    app->add_option("--superpixels", superpixels, "Target superpixels per region (default 600)");
    app->add_option("--min-superpixel-area", min_area, "Minimum mean superpixel area (default 12)");
    app->add_option("--region-expand", region_expand, "Candidate region scale (default 1.5)");
    app->add_option("--threshold", threshold, "Mask threshold on normalized scores (default 0.5)");
    app->add_option("--mode", mode, "Propagation: mixed | only-smoothing | none");
    app->add_option("--fidelity", fidelity, "Label update: exact-minimizer | paper-literal");
    app->add_option("--topology", topology, "Spatial edges: touching | full");
  }

  void apply(TrackerConfig& c) const {
    if (sigma) c.sigma = *sigma;
    if (lambda1) c.lambda1 = *lambda1;
    if (lambda2) c.lambda2 = *lambda2;
    if (alpha) c.alpha = *alpha;
    if (beta) c.beta = *beta;
    if (min_error) c.min_error = *min_error;
    if (ridge) c.ridge = *ridge;
    if (max_iter) c.max_iter = *max_iter;
    if (superpixels) c.target_superpixels = *superpixels;
    if (min_area) c.min_superpixel_area = *min_area;
    if (region_expand) c.region_expand = *region_expand;
    if (threshold) c.mask_threshold = *threshold;
    if (mode) c.propagation_mode = parse_propagation_mode(*mode);
    if (fidelity) c.fidelity = parse_fidelity(*fidelity);
    if (topology) c.topology = parse_spatial_topology(*topology);
  }
};

json diagnostics_json(const StepDiagnostics& d) {
  return {{"iterations", d.iterations}, {"final_loss", d.final_loss},
          {"converged", d.converged},   {"fallback", d.fallback},
          {"n_prev", d.n_prev},         {"n_curr", d.n_curr}};
}

// ---------------------------------------------------------------- track

struct TrackArgs {
  fs::path config_path;
  fs::path root;
  std::vector<std::string> sequences;
  fs::path flow_dir;
  fs::path out;
  int jobs = 0;
  bool dump_matrices = false;
  bool save_superpixels = false;
  TrackerFlags flags;
};

std::vector<std::string> discover_sequences(const fs::path& root) {
  std::vector<std::string> names;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (entry.is_directory() && fs::is_directory(entry.path() / "frames")) {
      names.push_back(entry.path().filename().string());
    }
  }
  std::sort(names.begin(), names.end());
  return names;
}

void check_sequence_dir(const fs::path& dir) {
  if (!fs::is_directory(dir / "frames")) throw InputError("missing frames directory: " + dir.string());
  if (!fs::is_regular_file(dir / "masks" / io::frame_file_name(0, ".png"))) {
    throw InputError("missing frame 0 mask in " + dir.string());
  }
}

void dump_trace(const fs::path& dir, int frame, const StepTrace& trace) {
  const std::string stem = io::frame_file_name(frame, "");
  write_matrix_text(dir / (stem + "_A.txt"), trace.graph.adjacency);
  write_matrix_text(dir / (stem + "_Am.txt"), trace.smoothing);
  write_matrix_text(dir / (stem + "_Ah.txt"), trace.sharpening);
}

void track_one(const RunConfig& run, const std::string& name, const TrackArgs& args) {
  const Sequence seq = io::load_sequence(run.sequence_root, name);
  const fs::path out = run.output_dir / name;
  fs::create_directories(out / "masks");
  if (args.dump_matrices) fs::create_directories(out / "debug");
  if (args.save_superpixels) fs::create_directories(out / "superpixels");

  FlowProvider flows;
  if (!run.flow_dir.empty()) {
    const fs::path dir = run.flow_dir / name;
    flows = [dir](int from, int to) -> std::optional<FlowField> {
      if (to != from + 1) return std::nullopt;
      return read_flo(dir / io::frame_file_name(from, ".flo"));
    };
  }
  TraceObserver observer;
  if (args.dump_matrices || args.save_superpixels) {
    observer = [&](int frame, const StepTrace& trace) {
      if (args.dump_matrices && trace.graph.size() > 0) dump_trace(out / "debug", frame, trace);
      if (args.save_superpixels) {
        io::write_labels_png(out / "superpixels" / io::frame_file_name(frame, ".png"),
                             trace.superpixels);
      }
    };
  }
  const Mask& first = *seq.masks.front();
  const auto frames = track_frames(seq.frames, first, run.tracker, flows, observer);

  json result;
  result["sequence"] = name;
  result["propagation_mode"] = to_string(run.tracker.propagation_mode);
  result["fidelity"] = to_string(run.tracker.fidelity);
  result["config"] = run.tracker;
  json& list = result["frames"] = json::array();
  for (std::size_t t = 0; t < frames.size(); ++t) {
    const auto& f = frames[t];
    io::write_mask_png(out / "masks" / io::frame_file_name(static_cast<int>(t), ".png"), f.mask);
    const bool has_mask = count_set(f.mask) > 0;
    json entry = {{"index", t}, {"box", box_json(has_mask ? std::optional(f.box) : std::nullopt)}};
    entry["diagnostics"] = diagnostics_json(f.diagnostics);
    list.push_back(std::move(entry));
  }
  write_json(out / "result.json", result);
}

int cmd_track(const TrackArgs& args) {
  RunConfig run;
  if (!args.config_path.empty()) run = load_run_config(args.config_path);
  args.flags.apply(run.tracker);
  if (!args.root.empty()) run.sequence_root = args.root;
  if (!args.flow_dir.empty()) run.flow_dir = args.flow_dir;
  if (!args.out.empty()) run.output_dir = args.out;
  if (args.jobs > 0) run.jobs = args.jobs;
  run.tracker.validate();
  if (run.sequence_root.empty()) throw InputError("no sequence root given");
  if (run.output_dir.empty()) throw InputError("no output directory given");
  if (!fs::is_directory(run.sequence_root)) {
    throw InputError("sequence root not found: " + run.sequence_root.string());
  }
  std::vector<std::string> names = args.sequences;
  if (names.empty()) names = discover_sequences(run.sequence_root);
  if (names.empty()) throw InputError("no sequences under " + run.sequence_root.string());
  for (const auto& name : names) check_sequence_dir(run.sequence_root / name);

  OutputGuard guard(run.output_dir);
  parallel_for(static_cast<int>(names.size()), run.jobs, [&](int i) {
    track_one(run, names[i], args);
    std::fprintf(stderr, "tracked %s\n", names[i].c_str());
  });
  write_json(run.output_dir / "run.json", run);
  guard.dismiss();
  return 0;
}

// ----------------------------------------------------------------- eval

struct EvalArgs {
  fs::path pred;
  fs::path truth;
  fs::path out;
  int jobs = 1;
};

std::set<int> indexed_files(const fs::path& dir) {
  std::set<int> indices;
  if (!fs::is_directory(dir)) return indices;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string stem = entry.path().stem().string();
    if (stem.size() != 5 || !std::all_of(stem.begin(), stem.end(), ::isdigit)) continue;
    indices.insert(std::stoi(stem));
  }
  return indices;
}

SequenceResult evaluate_dir(const fs::path& pred, const fs::path& truth, const std::string& name) {
  std::set<int> truth_frames = indexed_files(truth / "frames");
  const std::set<int> truth_masks = indexed_files(truth / "masks");
  if (truth_frames.empty()) truth_frames = truth_masks;
  if (truth_frames.empty()) throw InputError("no ground truth in " + truth.string());
  const std::set<int> pred_masks = indexed_files(pred / "masks");
  if (pred_masks != truth_frames) {
    throw InputError("frame mismatch between " + pred.string() + " and " + truth.string());
  }

  std::map<int, std::optional<Rect>> pred_boxes;
  if (fs::is_regular_file(pred / "result.json")) {
    std::ifstream in(pred / "result.json");
    const json result = json::parse(in, nullptr, false);
    if (result.is_discarded()) throw InputError("malformed " + (pred / "result.json").string());
    for (const auto& f : result.value("frames", json::array())) {
      const auto& b = f.at("box");
      pred_boxes[f.at("index").get<int>()] =
          b.is_null() ? std::nullopt
                      : std::optional(Rect{b[0].get<int>(), b[1].get<int>(), b[2].get<int>(),
                                           b[3].get<int>()});
    }
  }

  SequenceResult result;
  result.name = name;
  for (int index : truth_frames) {
    FrameRecord rec;
    rec.index = index;
    rec.predicted_mask = io::read_mask(pred / "masks" / io::frame_file_name(index, ".png"));
    if (auto it = pred_boxes.find(index); it != pred_boxes.end()) {
      rec.predicted_box = it->second;
    } else {
      rec.predicted_box = mask_to_box(*rec.predicted_mask);
    }
    if (truth_masks.count(index)) {
      rec.truth_mask = io::read_mask(truth / "masks" / io::frame_file_name(index, ".png"));
      if (!rec.truth_mask->same_shape(*rec.predicted_mask)) {
        throw InputError("mask size mismatch at frame " + std::to_string(index) + " of " + name);
      }
    }
    result.frames.push_back(std::move(rec));
  }
  return result;
}

int cmd_eval(const EvalArgs& args) {
  if (!fs::is_directory(args.pred)) throw InputError("predictions not found: " + args.pred.string());
  if (!fs::is_directory(args.truth)) throw InputError("ground truth not found: " + args.truth.string());

  std::vector<std::pair<std::string, std::pair<fs::path, fs::path>>> jobs;
  if (fs::is_directory(args.pred / "masks")) {
    jobs.push_back({args.truth.filename().string(), {args.pred, args.truth}});
  } else {
    for (const auto& entry : fs::directory_iterator(args.pred)) {
      if (!fs::is_directory(entry.path() / "masks")) continue;
      const std::string name = entry.path().filename().string();
      if (!fs::is_directory(args.truth / name)) {
        throw InputError("no ground truth for sequence " + name);
      }
      jobs.push_back({name, {entry.path(), args.truth / name}});
    }
    std::sort(jobs.begin(), jobs.end());
  }
  if (jobs.empty()) throw InputError("no predicted sequences in " + args.pred.string());

  std::vector<SequenceResult> results(jobs.size());
  parallel_for(static_cast<int>(jobs.size()), args.jobs, [&](int i) {
    results[i] = evaluate_dir(jobs[i].second.first, jobs[i].second.second, jobs[i].first);
  });

  OutputGuard guard(args.out);
  const Summary overall = summarize(results, "overall");
  json report;
  report["overall"] = to_json(overall);
  report["sequences"] = json::array();
  fs::create_directories(args.out / "frames");
  for (const auto& r : results) {
    report["sequences"].push_back(to_json(summarize(r)));
    std::ofstream csv(args.out / "frames" / (r.name + ".csv"));
    write_frame_csv(csv, score_frames(r));
  }
  write_json(args.out / "report.json", report);
  std::ofstream curves(args.out / "curves.csv");
  write_curve_csv(curves, overall);
  guard.dismiss();

  std::printf("frames %d  mask IoU %.4f  box IoU %.4f  precision@20 %.4f  AUC mask %.4f  AUC box %.4f\n",
              overall.frames, overall.mean_mask_iou, overall.mean_box_iou, overall.precision_at_20,
              overall.mask_success.auc, overall.box_success.auc);
  return 0;
}

// ---------------------------------------------------------------- solve

struct SolveArgs {
  fs::path problem;
  fs::path out;
  std::string fidelity = "exact-minimizer";
  std::optional<double> alpha, beta, min_error, ridge;
  std::optional<int> max_iter;
};

int cmd_solve(const SolveArgs& args) {
  std::ifstream in(args.problem);
  if (!in) throw InputError("cannot read " + args.problem.string());
  const Problem problem = read_problem(in);
  SolverConfig config;
  config.fidelity = parse_fidelity(args.fidelity);
  if (args.alpha) config.alpha = *args.alpha;
  if (args.beta) config.beta = *args.beta;
  if (args.min_error) config.min_error = *args.min_error;
  if (args.ridge) config.ridge = *args.ridge;
  if (args.max_iter) config.max_iter = *args.max_iter;
  const SolverState state = solve(problem, config);

  json j;
  j["fidelity"] = to_string(config.fidelity);
  j["n_prev"] = problem.n_prev;
  j["n_curr"] = problem.n_curr;
  j["y"] = std::vector<double>(state.labels.data(), state.labels.data() + state.labels.size());
  j["weights"] = std::vector<double>(state.weights.data(), state.weights.data() + state.weights.size());
  j["bias"] = state.bias;
  j["loss_trace"] = state.loss_trace;
  j["iterations"] = state.iterations;
  j["converged"] = state.converged;
  if (args.out.empty()) {
    std::cout << j.dump(2) << '\n';
  } else {
    if (args.out.has_parent_path()) fs::create_directories(args.out.parent_path());
    write_json(args.out, j);
  }
  return 0;
}

// ---------------------------------------------------------------- synth

struct SynthArgs {
  fs::path spec;
  fs::path out;
  bool suite = false;
};

int cmd_synth(const SynthArgs& args) {
  std::vector<SynthSpec> specs;
  if (!args.spec.empty()) {
    std::ifstream in(args.spec);
    if (!in) throw InputError("cannot read " + args.spec.string());
    const json j = json::parse(in, nullptr, false);
    if (j.is_discarded()) throw InputError("malformed spec " + args.spec.string());
    try {
      if (j.is_array()) {
        specs = j.get<std::vector<SynthSpec>>();
      } else {
        specs.push_back(j.get<SynthSpec>());
      }
    } catch (const json::exception& e) {
      throw InputError(std::string("bad spec: ") + e.what());
    }
  }
  if (args.suite || specs.empty()) {
    for (auto& s : synthetic_suite()) specs.push_back(s);
  }
  std::vector<Sequence> seqs;
  for (const auto& s : specs) seqs.push_back(synth_sequence(s));

  OutputGuard guard(args.out);
  for (const auto& seq : seqs) io::save_sequence(args.out, seq);
  write_json(args.out / "specs.json", specs);
  guard.dismiss();
  return 0;
}

// --------------------------------------------------------------- ablate

struct AblateArgs {
  fs::path config_path;
  fs::path out;
  int jobs = 0;
  TrackerFlags flags;
};

int cmd_ablate(const AblateArgs& args) {
  RunConfig run;
  if (!args.config_path.empty()) run = load_run_config(args.config_path);
  args.flags.apply(run.tracker);
  if (args.jobs > 0) run.jobs = args.jobs;
  run.tracker.validate();

  const std::vector<SynthSpec> suite = synthetic_suite();
  std::vector<Sequence> seqs;
  for (const auto& s : suite) seqs.push_back(synth_sequence(s));
  const PropagationMode modes[] = {PropagationMode::mixed, PropagationMode::smoothing_only,
                                   PropagationMode::identity};
  const int n_modes = 3, n_seq = static_cast<int>(seqs.size());

  std::vector<SequenceResult> results(n_modes * n_seq);
  parallel_for(n_modes * n_seq, run.jobs, [&](int job) {
    TrackerConfig config = run.tracker;
    config.propagation_mode = modes[job / n_seq];
    const Sequence& seq = seqs[job % n_seq];
    const auto frames = track_frames(seq.frames, *seq.masks.front(), config);
    SequenceResult& r = results[job];
    r.name = seq.name;
    for (std::size_t t = 0; t < frames.size(); ++t) {
      FrameRecord rec;
      rec.index = static_cast<int>(t);
      rec.predicted_mask = frames[t].mask;
      if (count_set(frames[t].mask) > 0) rec.predicted_box = frames[t].box;
      rec.truth_mask = seq.masks[t];
      r.frames.push_back(std::move(rec));
    }
  });

  OutputGuard guard(args.out);
  json table = json::array();
  std::ofstream csv(args.out / "ablation.csv");
  csv << "mode,Success-Seg,Success-Box,Precision,mean_mask_iou,mean_box_iou\n";
  std::printf("%-16s %12s %12s %10s\n", "mode", "Success-Seg", "Success-Box", "Precision");
  for (int m = 0; m < n_modes; ++m) {
    const std::span<const SequenceResult> rows(results.data() + m * n_seq, n_seq);
    const Summary s = summarize(rows, std::string(to_string(modes[m])));
    json row = {{"mode", s.name},
                {"Success-Seg", s.mask_success.auc},
                {"Success-Box", s.box_success.auc},
                {"Precision", s.precision_at_20},
                {"mean_mask_iou", s.mean_mask_iou},
                {"mean_box_iou", s.mean_box_iou},
                {"sequences", json::array()}};
    for (const auto& r : rows) row["sequences"].push_back(to_json(summarize(r)));
    table.push_back(std::move(row));
    csv << s.name << ',' << s.mask_success.auc << ',' << s.box_success.auc << ','
        << s.precision_at_20 << ',' << s.mean_mask_iou << ',' << s.mean_box_iou << '\n';
    std::printf("%-16s %12.4f %12.4f %10.4f\n", s.name.c_str(), s.mask_success.auc,
                s.box_success.auc, s.precision_at_20);
  }
  write_json(args.out / "ablation.json", {{"config", run.tracker}, {"rows", table}});
  guard.dismiss();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Superpixel graph tracker: tracking, evaluation and solver tools"};
  app.require_subcommand(1);

  TrackArgs track;
  auto* track_cmd = app.add_subcommand("track", "Track the target through one or more sequences");
  track_cmd->add_option("--config", track.config_path, "JSON run configuration")->check(CLI::ExistingFile);
  track_cmd->add_option("--root", track.root, "Directory holding sequence folders");
  track_cmd->add_option("--sequence", track.sequences, "Sequence name (repeatable; default: all)");
  track_cmd->add_option("--flow-dir", track.flow_dir, "Precomputed flow: DIR/<sequence>/%05d.flo");
  track_cmd->add_option("--out", track.out, "Output directory");
  track_cmd->add_option("--jobs", track.jobs, "Sequences tracked in parallel")->check(CLI::PositiveNumber);
  track_cmd->add_flag("--dump-matrices", track.dump_matrices, "Write A, smoothing and sharpening operators per frame");
  track_cmd->add_flag("--save-superpixels", track.save_superpixels, "Write 16-bit superpixel label PNGs");
  track.flags.add_to(track_cmd);

  EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("eval", "Score predicted masks against ground truth");
  eval_cmd->add_option("--pred", eval.pred, "Predictions: a track output sequence dir or its parent")->required();
  eval_cmd->add_option("--truth", eval.truth, "Ground truth: a sequence dir or the dataset root")->required();
  eval_cmd->add_option("--out", eval.out, "Report directory")->required();
  eval_cmd->add_option("--jobs", eval.jobs, "Sequences scored in parallel")->check(CLI::PositiveNumber);

  SolveArgs solve_args;
  auto* solve_cmd = app.add_subcommand("solve", "Run the alternating solver on a problem file");
  solve_cmd->add_option("problem", solve_args.problem, "Problem text file")->required();
  solve_cmd->add_option("--out", solve_args.out, "Write JSON here instead of stdout");
  solve_cmd->add_option("--fidelity", solve_args.fidelity, "exact-minimizer | paper-literal");
  solve_cmd->add_option("--alpha", solve_args.alpha, "Graph regularization weight");
  solve_cmd->add_option("--beta", solve_args.beta, "Indicator fitting weight");
  solve_cmd->add_option("--min-error", solve_args.min_error, "Relative loss change to stop");
  solve_cmd->add_option("--max-iter", solve_args.max_iter, "Iteration cap");
  solve_cmd->add_option("--ridge", solve_args.ridge, "Ridge added to the W normal equations");

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "Render synthetic sequences in the dataset layout");
  synth_cmd->add_option("--spec", synth.spec, "JSON spec (object or array)");
  synth_cmd->add_flag("--suite", synth.suite, "Include the built-in synthetic suite");
  synth_cmd->add_option("--out", synth.out, "Dataset root to write")->required();

  AblateArgs ablate;
  auto* ablate_cmd = app.add_subcommand("ablate", "Compare propagation modes on the synthetic suite");
  ablate_cmd->add_option("--config", ablate.config_path, "JSON run configuration")->check(CLI::ExistingFile);
  ablate_cmd->add_option("--out", ablate.out, "Report directory")->required();
  ablate_cmd->add_option("--jobs", ablate.jobs, "Runs in parallel")->check(CLI::PositiveNumber);
  ablate.flags.add_to(ablate_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitInput;
  }

  try {
    if (*track_cmd) return cmd_track(track);
    if (*eval_cmd) return cmd_eval(eval);
    if (*solve_cmd) return cmd_solve(solve_args);
    if (*synth_cmd) return cmd_synth(synth);
    if (*ablate_cmd) return cmd_ablate(ablate);
  } catch (const NumericalError& e) {
    std::fprintf(stderr, "numerical error: %s\n", e.what());
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitInput;
  }
  return kExitInput;
}
