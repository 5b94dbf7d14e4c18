// End-to-end limited-vs-comprehensive training experiment.
//
// Arms: CNN trained on limited sunlit regions without augmentation, the same
// with relighting augmentation, CNN trained on the comprehensive scene without
// augmentation, and SAM built from the limited regions. Each arm runs over a
// training-size sweep with seeded repetitions; outputs land in
// <output>/{arm}/{n_train}/{rep}/ plus summary tables at the top level.
#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "spectro/classifier.hpp"
#include "spectro/core.hpp"
#include "spectro/evaluation.hpp"
#include "spectro/illumination.hpp"
#include "spectro/io.hpp"
#include "spectro/radiometric.hpp"
#include "spectro/ratio_estimation.hpp"
#include "spectro/synthetic.hpp"

namespace spectro::repro {

namespace fs = std::filesystem;
using nlohmann::json;

struct SceneFiles {
  std::string cube, labels, shadow_mask, cube_t2;
  friend bool operator==(const SceneFiles&, const SceneFiles&) = default;
};

struct RunConfig {
  std::string name = "relighting-synthetic";
  std::string output_dir = "report";
  std::uint64_t seed = 7;

  // Scene: "synthetic" renders from `scene`; "files" loads `files`.
  std::string scene_source = "synthetic";
  std::string preset = "visible";
  synth::SceneSpec scene = synth::SceneSpec::visible();
  SceneFiles files;

  radiometric::Method norm_method = radiometric::Method::ZeroWavelength;
  Rect norm_panel;
  std::optional<std::size_t> norm_reference_channel;
  std::size_t norm_zero_channel = 0;

  std::string architecture = "2conv2fc";
  // Desk-scale schedule: one pass over the data, stretched to at least
  // `min_steps` mini-batches so small training sets still converge.
  std::size_t epochs = 1;
  double learning_rate = 0.01;
  double momentum = 0.9;
  std::size_t batch_size = 50;
  std::size_t min_steps = 1000;
  double clip_norm = 5.0;
  std::size_t M = 10;

  std::optional<std::array<double, 3>> ratio_bands;
  double mu = 0.3;
  double xi = 1.2;
  std::vector<std::size_t> pair_offsets{1, 2, 4};
  std::size_t sg_window = 11;
  std::size_t sg_order = 2;

  std::vector<std::string> arms{"limited_noaug", "limited_aug", "comprehensive_noaug", "sam_limited"};
  std::vector<std::size_t> sweep{100, 178, 316, 562, 1000};
  std::size_t repetitions = 5;
  std::size_t n_validation = 50;
  // One rectangle list per class; unset = fewest sunlit rectangles per class holding the largest sweep size.
  std::optional<std::vector<std::vector<Rect>>> limited_regions;

  bool timepair = true;
  double elevation_t2_deg = 40.0;
  std::size_t timepair_n = 100;

  bool write_predictions = true;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

inline constexpr const char* kArmLimited = "limited_noaug";
inline constexpr const char* kArmAugmented = "limited_aug";
inline constexpr const char* kArmComprehensive = "comprehensive_noaug";
inline constexpr const char* kArmSam = "sam_limited";
inline const std::vector<std::string>& arm_names() {
  static const std::vector<std::string> arms{kArmLimited, kArmAugmented, kArmComprehensive, kArmSam};
  return arms;
}

// ---------------------------------------------------------------------------
// Config file (JSON)

namespace detail {

inline json rect_json(const Rect& r) { return json::array({r.r0, r.c0, r.r1, r.c1}); }

inline Rect rect_from(const json& j) {
  const auto v = j.get<std::vector<std::size_t>>();
  if (v.size() != 4) throw Error("rectangle must be [r0, c0, r1, c1]");
  return {v[0], v[1], v[2], v[3]};
}

/// Reads known keys from an object and rejects unknown ones.
class Reader {
 public:
  Reader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw Error(where_ + " must be an object");
  }
  template <class T>
  void get(const char* key, T& out) {
    seen_.push_back(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw Error(where_ + "." + key + ": " + e.what());
    }
  }
  const json* sub(const char* key) {
    seen_.push_back(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }
  void finish() const {
    for (const auto& [k, v] : j_.items())
      if (std::find(seen_.begin(), seen_.end(), k) == seen_.end()) throw Error("unknown config key " + where_ + "." + k);
  }

 private:
  const json& j_;
  std::string where_;
  std::vector<std::string> seen_;
};

}  // namespace detail

inline json to_json(const RunConfig& c) {
  const auto& s = c.scene;
  json j;
  j["name"] = c.name;
  j["output_dir"] = c.output_dir;
  j["seed"] = c.seed;
  j["scene"] = {{"source", c.scene_source},
                {"preset", c.preset},
                {"height", s.height},
                {"width", s.width},
                {"bands", s.bands},
                {"lambda_min_nm", s.lambda_min_nm},
                {"lambda_max_nm", s.lambda_max_nm},
                {"classes", s.n_classes},
                {"shadow_frac", s.shadow_frac},
                {"noise_sigma", s.noise_sigma},
                {"seed", s.seed},
                {"ratio_ref", s.ratio_ref},
                {"ratio_exponent", s.ratio_exponent},
                {"sun_peak", s.sun_peak},
                {"sun_elevation_deg", s.sun_elevation_deg},
                {"shadow_dir_deg", s.shadow_dir_deg},
                {"cell_rows_px", s.cell_rows_px},
                {"cell_cols_px", s.cell_cols_px},
                {"max_tilt_deg", s.max_tilt_deg},
                {"occluders", s.n_occluders},
                {"class_separation", s.class_separation},
                {"axis_tolerance_deg", s.axis_tolerance_deg},
                {"max_albedo_sets", s.max_albedo_sets},
                {"albedo_variation", s.albedo_variation},
                {"files",
                 {{"cube", c.files.cube},
                  {"labels", c.files.labels},
                  {"shadow_mask", c.files.shadow_mask},
                  {"cube_t2", c.files.cube_t2}}}};
  j["normalization"] = {{"method", std::string(radiometric::method_name(c.norm_method))},
                        {"panel", detail::rect_json(c.norm_panel)},
                        {"reference_channel", c.norm_reference_channel ? json(*c.norm_reference_channel) : json(nullptr)},
                        {"zero_channel", c.norm_zero_channel}};
  j["architecture"] = c.architecture;
  j["train"] = {{"epochs", c.epochs},
                {"learning_rate", c.learning_rate},
                {"momentum", c.momentum},
                {"batch_size", c.batch_size},
                {"min_steps", c.min_steps},
                {"clip_norm", c.clip_norm}};
  j["augmentation"] = {{"M", c.M}};
  j["ratio"] = {{"bands", c.ratio_bands ? json(*c.ratio_bands) : json(nullptr)},
                {"mu", c.mu},
                {"xi", c.xi},
                {"offsets", c.pair_offsets},
                {"sg_window", c.sg_window},
                {"sg_order", c.sg_order}};
  json regions = nullptr;
  if (c.limited_regions) {
    regions = json::array();
    for (const auto& rs : *c.limited_regions) {
      json a = json::array();
      for (const auto& r : rs) a.push_back(detail::rect_json(r));
      regions.push_back(a);
    }
  }
  j["arms"] = c.arms;
  j["sampling"] = {{"sweep", c.sweep},
                   {"repetitions", c.repetitions},
                   {"n_validation", c.n_validation},
                   {"limited_regions", regions}};
  j["timepair"] = {{"enabled", c.timepair}, {"elevation_t2_deg", c.elevation_t2_deg}, {"n_train", c.timepair_n}};
  j["write_predictions"] = c.write_predictions;
  return j;
}

inline RunConfig from_json(const json& j) {
  RunConfig c;
  detail::Reader top(j, "config");
  top.get("name", c.name);
  top.get("output_dir", c.output_dir);
  top.get("seed", c.seed);
  if (const json* sj = top.sub("scene")) {
    detail::Reader r(*sj, "scene");
    r.get("source", c.scene_source);
    r.get("preset", c.preset);
    if (c.preset == "visible") c.scene = synth::SceneSpec::visible();
    else if (c.preset == "swir") c.scene = synth::SceneSpec::swir();
    else throw Error("scene.preset must be 'visible' or 'swir'");
    auto& s = c.scene;
    r.get("height", s.height);
    r.get("width", s.width);
    r.get("bands", s.bands);
    r.get("lambda_min_nm", s.lambda_min_nm);
    r.get("lambda_max_nm", s.lambda_max_nm);
    r.get("classes", s.n_classes);
    r.get("shadow_frac", s.shadow_frac);
    r.get("noise_sigma", s.noise_sigma);
    r.get("seed", s.seed);
    r.get("ratio_ref", s.ratio_ref);
    r.get("ratio_exponent", s.ratio_exponent);
    r.get("sun_peak", s.sun_peak);
    r.get("sun_elevation_deg", s.sun_elevation_deg);
    r.get("shadow_dir_deg", s.shadow_dir_deg);
    r.get("cell_rows_px", s.cell_rows_px);
    r.get("cell_cols_px", s.cell_cols_px);
    r.get("max_tilt_deg", s.max_tilt_deg);
    r.get("occluders", s.n_occluders);
    r.get("class_separation", s.class_separation);
    r.get("axis_tolerance_deg", s.axis_tolerance_deg);
    r.get("max_albedo_sets", s.max_albedo_sets);
    r.get("albedo_variation", s.albedo_variation);
    if (const json* fj = r.sub("files")) {
      detail::Reader f(*fj, "scene.files");
      f.get("cube", c.files.cube);
      f.get("labels", c.files.labels);
      f.get("shadow_mask", c.files.shadow_mask);
      f.get("cube_t2", c.files.cube_t2);
      f.finish();
    }
    r.finish();
  }
  if (const json* nj = top.sub("normalization")) {
    detail::Reader r(*nj, "normalization");
    std::string m = std::string(radiometric::method_name(c.norm_method));
    r.get("method", m);
    c.norm_method = radiometric::parse_method(m);
    if (const json* p = r.sub("panel")) c.norm_panel = detail::rect_from(*p);
    if (const json* rc = r.sub("reference_channel"); rc && !rc->is_null()) c.norm_reference_channel = rc->get<std::size_t>();
    r.get("zero_channel", c.norm_zero_channel);
    r.finish();
  }
  top.get("architecture", c.architecture);
  top.get("arms", c.arms);
  if (const json* tj = top.sub("train")) {
    detail::Reader r(*tj, "train");
    r.get("epochs", c.epochs);
    r.get("learning_rate", c.learning_rate);
    r.get("momentum", c.momentum);
    r.get("batch_size", c.batch_size);
    r.get("min_steps", c.min_steps);
    r.get("clip_norm", c.clip_norm);
    r.finish();
  }
  if (const json* aj = top.sub("augmentation")) {
    detail::Reader r(*aj, "augmentation");
    r.get("M", c.M);
    r.finish();
  }
  if (const json* rj = top.sub("ratio")) {
    detail::Reader r(*rj, "ratio");
    if (const json* b = r.sub("bands"); b && !b->is_null()) c.ratio_bands = b->get<std::array<double, 3>>();
    r.get("mu", c.mu);
    r.get("xi", c.xi);
    r.get("offsets", c.pair_offsets);
    r.get("sg_window", c.sg_window);
    r.get("sg_order", c.sg_order);
    r.finish();
  }
  if (const json* sj = top.sub("sampling")) {
    detail::Reader r(*sj, "sampling");
    r.get("sweep", c.sweep);
    r.get("repetitions", c.repetitions);
    r.get("n_validation", c.n_validation);
    if (const json* lr = r.sub("limited_regions"); lr && !lr->is_null()) {
      std::vector<std::vector<Rect>> regions;
      for (const auto& cls : *lr) {
        std::vector<Rect> rs;
        for (const auto& rect : cls) rs.push_back(detail::rect_from(rect));
        regions.push_back(std::move(rs));
      }
      c.limited_regions = std::move(regions);
    }
    r.finish();
  }
  if (const json* tj = top.sub("timepair")) {
    detail::Reader r(*tj, "timepair");
    r.get("enabled", c.timepair);
    r.get("elevation_t2_deg", c.elevation_t2_deg);
    r.get("n_train", c.timepair_n);
    r.finish();
  }
  top.get("write_predictions", c.write_predictions);
  top.finish();
  return c;
}

inline RunConfig load_config(const fs::path& path) { return from_json(io::detail::parse_json(path)); }

inline void validate(const RunConfig& c) {
  if (c.scene_source != "synthetic" && c.scene_source != "files")
    throw Error("scene.source must be 'synthetic' or 'files'");
  if (c.scene_source == "synthetic") c.scene.validate();
  if (c.scene_source == "files") {
    if (c.files.cube.empty() || !fs::exists(io::cube_json_path(c.files.cube)))
      throw Error("scene cube not found: '" + c.files.cube + "'");
    if (c.files.labels.empty() || !fs::exists(c.files.labels))
      throw Error("scene labels not found: '" + c.files.labels + "'");
    if (!c.files.shadow_mask.empty() && !fs::exists(c.files.shadow_mask))
      throw Error("shadow mask not found: '" + c.files.shadow_mask + "'");
    if (c.timepair && (c.files.cube_t2.empty() || !fs::exists(io::cube_json_path(c.files.cube_t2))))
      throw Error("timepair needs scene.files.cube_t2");
  }
  if (c.arms.empty()) throw Error("arms is empty");
  for (const auto& a : c.arms)
    if (std::find(arm_names().begin(), arm_names().end(), a) == arm_names().end()) throw Error("unknown arm '" + a + "'");
  if (c.sweep.empty()) throw Error("sampling.sweep is empty");
  if (c.repetitions == 0) throw Error("sampling.repetitions must be at least 1");
  if (c.M < 1) throw Error("augmentation.M must be at least 1");
  if (c.timepair && std::find(c.sweep.begin(), c.sweep.end(), c.timepair_n) == c.sweep.end())
    throw Error("timepair.n_train must be one of the sweep sizes");
  if (c.timepair && !(c.elevation_t2_deg > 0.0 && c.elevation_t2_deg < 90.0))
    throw Error("timepair.elevation_t2_deg must lie in (0, 90)");
  cnn::TrainConfig t{c.epochs, c.learning_rate, c.momentum, c.batch_size, 0, c.min_steps, c.clip_norm};
  t.validate();
  (void)cnn::ArchitectureSpec::parse(c.architecture);
}

// ---------------------------------------------------------------------------
// Parallel map

/// Worker count from SPECTRO_THREADS, else the hardware concurrency.
inline std::size_t thread_count() {
  if (const char* env = std::getenv("SPECTRO_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1) return static_cast<std::size_t>(v);
    throw Error("SPECTRO_THREADS must be a positive integer");
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Run f(i) for i in [0, n) on up to `threads` workers. The first failing index
/// (lowest i) has its exception rethrown after all workers finish.
template <class F>
void parallel_for(std::size_t n, std::size_t threads, F&& f) {
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < n;) {
      try {
        f(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t t = std::min(threads, n);
  if (t <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t k = 0; k < t; ++k) pool.emplace_back(worker);
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

// ---------------------------------------------------------------------------
// Experiment

struct Scene {
  HyperCube cube;
  LabelMap labels;
  std::optional<HyperCube> cube_t2;
  std::optional<std::vector<double>> true_ratio;
};

struct RunResult {
  std::string arm;
  std::size_t n_train = 0;
  std::size_t rep = 0;
  eval::EvalReport report;
  std::optional<double> label_change;
};

struct Stats {
  double mean = 0.0, sd = 0.0;
  std::size_t n = 0;
};

inline Stats stats_of(const std::vector<double>& v) {
  Stats s;
  s.n = v.size();
  if (v.empty()) return s;
  for (double x : v) s.mean += x;
  s.mean /= static_cast<double>(v.size());
  if (v.size() > 1) {
    for (double x : v) s.sd += (x - s.mean) * (x - s.mean);
    s.sd = std::sqrt(s.sd / static_cast<double>(v.size() - 1));
  }
  return s;
}

struct ArmSummary {
  Stats f1, auc, sun_f1, shadow_f1;
};

struct ReproResult {
  fs::path dir;
  ratio::RatioEstimate ratio;
  std::optional<double> ratio_cosine;
  std::vector<std::vector<Rect>> limited_regions;
  std::vector<RunResult> runs;
  std::map<std::string, std::map<std::size_t, ArmSummary>> summary;  // arm -> n -> stats
  std::map<std::string, Stats> label_change;                         // arm -> stats over reps
};

namespace detail {

template <class F>
auto stage(const std::string& name, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const std::exception& e) {
    throw Error("stage '" + name + "' failed: " + e.what());
  }
}

inline Scene load_scene(const RunConfig& c) {
  Scene s;
  if (c.scene_source == "synthetic") {
    if (c.timepair) {
      auto [a, b] = synth::generate_timepair(c.scene, c.scene.sun_elevation_deg, c.elevation_t2_deg);
      s.cube = std::move(a.cube);
      s.labels = std::move(a.labels);
      s.true_ratio = a.true_ratio.values();
      s.cube_t2 = std::move(b.cube);
    } else {
      auto a = synth::generate(c.scene);
      s.cube = std::move(a.cube);
      s.labels = std::move(a.labels);
      s.true_ratio = a.true_ratio.values();
    }
  } else {
    s.cube = io::load_cube(c.files.cube);
    s.labels = io::load_label_map(c.files.cube, c.files.labels, c.files.shadow_mask);
    if (c.timepair) {
      s.cube_t2 = io::load_cube(c.files.cube_t2);
      if (s.cube_t2->height() != s.cube.height() || s.cube_t2->width() != s.cube.width() ||
          s.cube_t2->grid().nm() != s.cube.grid().nm())
        throw Error("second-time cube does not match the first");
    }
  }
  return s;
}

inline std::vector<double> scores_for(const std::string& arm, const cnn::ClassifierModel* model,
                                      const std::vector<Spectrum>* library, std::span<const double> raw) {
  if (arm == kArmSam) return cnn::sam_classify(raw, *library);
  const auto p = model->probabilities(raw);
  return {p.begin(), p.end()};
}

inline eval::ScoredSet score_set(const std::string& arm, const cnn::ClassifierModel* model,
                                 const std::vector<Spectrum>* library, const std::vector<Sample>& samples) {
  eval::ScoredSet s;
  s.scores.reserve(samples.size());
  for (const auto& x : samples) {
    s.scores.push_back(scores_for(arm, model, library, x.spectrum));
    s.labels.push_back(x.label);
  }
  return s;
}

inline std::vector<int> label_raster(const std::string& arm, const cnn::ClassifierModel* model,
                                     const std::vector<Spectrum>* library, const HyperCube& cube,
                                     const std::vector<double>& thresholds) {
  std::vector<int> out(cube.pixels());
  for (std::size_t r = 0; r < cube.height(); ++r)
    for (std::size_t c = 0; c < cube.width(); ++c)
      out[r * cube.width() + c] = eval::assign_label(scores_for(arm, model, library, cube.spectrum(r, c)), thresholds);
  return out;
}

inline std::string num(double v) { return io::detail::fmt_double(v); }

}  // namespace detail

inline std::uint64_t split_seed(const RunConfig& c, bool comprehensive, std::size_t n, std::size_t rep) {
  return derive_seed(c.seed, {1, comprehensive ? 1u : 0u, n, rep});
}
inline std::uint64_t init_seed(const RunConfig& c, std::size_t n, std::size_t rep) { return derive_seed(c.seed, {2, n, rep}); }
inline std::uint64_t augment_seed(const RunConfig& c, std::size_t n, std::size_t rep) {
  return derive_seed(c.seed, {3, n, rep});
}

/// Per class, the fewest disjoint sunlit rectangles that hold at least `min_pixels`.
inline std::vector<std::vector<Rect>> auto_limited_regions(const LabelMap& labels, std::size_t min_pixels) {
  std::vector<std::vector<Rect>> out;
  for (std::size_t k = 0; k < labels.n_classes(); ++k)
    out.push_back(synth::find_sunlit_regions(labels, static_cast<int>(k), min_pixels));
  return out;
}

inline ReproResult run_repro(const RunConfig& cfg, std::FILE* log = nullptr) {
  detail::stage("validate config", [&] { validate(cfg); });
  ReproResult res;
  res.dir = cfg.output_dir;
  auto say = [&](const std::string& m) {
    if (log) std::fprintf(log, "[repro] %s\n", m.c_str());
  };

  const Scene scene = detail::stage("scene", [&] { return detail::load_scene(cfg); });
  detail::stage("write config", [&] {
    fs::create_directories(res.dir);
    io::detail::write_file(res.dir / "config.json", to_json(cfg).dump(2) + "\n");
  });

  ratio::EstimatorOptions eo;
  eo.bands = cfg.ratio_bands;
  eo.pairs = {cfg.mu, cfg.xi, cfg.pair_offsets};
  eo.smoothing = {cfg.sg_window, cfg.sg_order, 1e-6};
  res.ratio = detail::stage("estimate ratio", [&] { return ratio::estimate_ratio_from_image(scene.cube, eo); });
  if (scene.true_ratio) res.ratio_cosine = ratio::cosine_similarity(res.ratio.curve.values(), *scene.true_ratio);
  io::save_ratio_csv(scene.cube.grid().nm(), res.ratio.curve.values(), res.dir / "ratio.csv");
  say("ratio estimated from " + std::to_string(res.ratio.n_pairs) + " pairs");

  const std::size_t n_max = *std::max_element(cfg.sweep.begin(), cfg.sweep.end());
  res.limited_regions = detail::stage("limited regions", [&] {
    return cfg.limited_regions ? *cfg.limited_regions : auto_limited_regions(scene.labels, n_max);
  });
  const std::vector<std::vector<Rect>> whole(scene.labels.n_classes(),
                                             std::vector<Rect>{{0, 0, scene.cube.height(), scene.cube.width()}});

  radiometric::Normalizer norm;
  norm.method = cfg.norm_method;
  norm.panel = cfg.norm_panel;
  norm.reference_channel = cfg.norm_reference_channel;
  norm.zero_channel = cfg.norm_zero_channel;
  norm = detail::stage("fit normalisation", [&] { return radiometric::fit(norm, scene.cube); });

  const auto dense_truth = scene.labels.dense();

  struct Job {
    std::string arm;
    std::size_t n, rep;
  };
  std::vector<Job> jobs;
  for (std::size_t n : cfg.sweep)
    for (std::size_t rep = 0; rep < cfg.repetitions; ++rep)
      for (const auto& arm : arm_names())
        if (std::find(cfg.arms.begin(), cfg.arms.end(), arm) != cfg.arms.end()) jobs.push_back({arm, n, rep});
  res.runs.resize(jobs.size());

  const auto curve = res.ratio.curve;
  parallel_for(jobs.size(), thread_count(), [&](std::size_t j) {
    const Job& job = jobs[j];
    const std::string tag = job.arm + "/" + std::to_string(job.n) + "/" + std::to_string(job.rep);
    const bool comprehensive = job.arm == kArmComprehensive;
    const DatasetSplit split = detail::stage("sample " + tag, [&] {
      return sample_regions(scene.cube, scene.labels, comprehensive ? whole : res.limited_regions, job.n,
                            split_seed(cfg, comprehensive, job.n, job.rep), cfg.n_validation);
    });

    std::optional<cnn::ClassifierModel> model;
    std::optional<std::vector<Spectrum>> library;
    if (job.arm == kArmSam) {
      library = cnn::class_means(split.train, split.class_names.size());
    } else {
      model = detail::stage("train " + tag, [&] {
        auto arch = cnn::ArchitectureSpec::parse(cfg.architecture);
        cnn::TrainConfig tc{cfg.epochs,     cfg.learning_rate,  cfg.momentum, cfg.batch_size,
                            init_seed(cfg, job.n, job.rep), cfg.min_steps, cfg.clip_norm};
        cnn::BatchTransform aug;
        if (job.arm == kArmAugmented) {
          const std::uint64_t aseed = augment_seed(cfg, job.n, job.rep);
          aug = [&, aseed](std::span<const Sample> batch, std::uint64_t batch_seed) {
            illumination::AugmentationConfig ac{cfg.M, derive_seed(aseed, {batch_seed})};
            return illumination::augment_batch(batch, ac, illumination::scaled_by_sun_angle(curve));
          };
        }
        return cnn::train(split, arch, tc, norm, aug);
      });
    }
    const auto* mp = model ? &*model : nullptr;
    const auto* lp = library ? &*library : nullptr;

    RunResult rr;
    rr.arm = job.arm;
    rr.n_train = job.n;
    rr.rep = job.rep;
    detail::stage("evaluate " + tag, [&] {
      const auto val = detail::score_set(job.arm, mp, lp, split.validation);
      const auto test = detail::score_set(job.arm, mp, lp, split.test);
      std::vector<std::uint8_t> shadow(split.test.size());
      for (std::size_t i = 0; i < split.test.size(); ++i)
        shadow[i] = scene.labels.in_shadow(split.test[i].coord.row, split.test[i].coord.col) ? 1 : 0;
      rr.report = eval::evaluate(val, test, split.class_names, &shadow);
      if (model) model->thresholds = rr.report.thresholds;

      if (cfg.timepair && job.n == cfg.timepair_n) {
        const auto a = detail::label_raster(job.arm, mp, lp, scene.cube, rr.report.thresholds);
        const auto b = detail::label_raster(job.arm, mp, lp, *scene.cube_t2, rr.report.thresholds);
        rr.label_change = eval::label_change_fraction(a, b);
      }

      const fs::path dir = res.dir / job.arm / std::to_string(job.n) / std::to_string(job.rep);
      fs::create_directories(dir);
      json m;
      m["arm"] = job.arm;
      m["n_train_per_class"] = job.n;
      m["repetition"] = job.rep;
      m["seeds"] = {{"master", cfg.seed},
                    {"split", split_seed(cfg, comprehensive, job.n, job.rep)},
                    {"init", init_seed(cfg, job.n, job.rep)},
                    {"augment", job.arm == kArmAugmented ? json(augment_seed(cfg, job.n, job.rep)) : json(nullptr)}};
      m["counts"] = {{"train", split.train.size()}, {"validation", split.validation.size()}, {"test", split.test.size()}};
      m["validation_source"] = comprehensive ? "remaining pixels" : "outside the limited training regions";
      m["report"] = eval::to_json(rr.report);
      m["label_change"] = rr.label_change ? json(*rr.label_change) : json(nullptr);
      if (model)
        m["training"] = {{"epochs", model->meta.epochs},
                         {"final_loss", model->meta.final_loss},
                         {"loss_history", model->meta.loss_history}};
      m["config"] = to_json(cfg);
      io::detail::write_file(dir / "metrics.json", m.dump(2) + "\n");
      if (cfg.write_predictions) {
        std::string csv = "row,col,truth,pred,in_shadow\n";
        for (std::size_t i = 0; i < split.test.size(); ++i) {
          std::vector<double> sc = test.scores[i];
          const auto& p = split.test[i].coord;
          csv += std::to_string(p.row) + "," + std::to_string(p.col) + "," + std::to_string(split.test[i].label) + "," +
                 std::to_string(eval::assign_label(sc, rr.report.thresholds)) + "," + std::to_string(shadow[i]) + "\n";
        }
        io::detail::write_file(dir / "predictions.csv", csv);
      }
    });
    say(tag + " mean F1 " + detail::num(rr.report.all.mean_f1.value_or(0.0)));
    res.runs[j] = std::move(rr);
  });

  // Summaries.
  detail::stage("summarise", [&] {
    std::string csv =
        "arm,n_train,repetitions,mean_f1,sd_f1,mean_auc,sd_auc,sun_f1,sd_sun_f1,shadow_f1,sd_shadow_f1\n";
    json js = json::object();
    for (const auto& arm : arm_names()) {
      if (std::find(cfg.arms.begin(), cfg.arms.end(), arm) == cfg.arms.end()) continue;
      for (std::size_t n : cfg.sweep) {
        std::vector<double> f1, auc, sun, shadow;
        for (const auto& r : res.runs) {
          if (r.arm != arm || r.n_train != n) continue;
          if (r.report.all.mean_f1) f1.push_back(*r.report.all.mean_f1);
          if (r.report.all.mean_auc) auc.push_back(*r.report.all.mean_auc);
          if (r.report.sun && r.report.sun->mean_f1) sun.push_back(*r.report.sun->mean_f1);
          if (r.report.shadow && r.report.shadow->mean_f1) shadow.push_back(*r.report.shadow->mean_f1);
        }
        ArmSummary s{stats_of(f1), stats_of(auc), stats_of(sun), stats_of(shadow)};
        res.summary[arm][n] = s;
        csv += arm + "," + std::to_string(n) + "," + std::to_string(f1.size()) + "," + detail::num(s.f1.mean) + "," +
               detail::num(s.f1.sd) + "," + detail::num(s.auc.mean) + "," + detail::num(s.auc.sd) + "," +
               detail::num(s.sun_f1.mean) + "," + detail::num(s.sun_f1.sd) + "," + detail::num(s.shadow_f1.mean) +
               "," + detail::num(s.shadow_f1.sd) + "\n";
        js[arm][std::to_string(n)] = {{"mean_f1", s.f1.mean},         {"sd_f1", s.f1.sd},
                                      {"mean_auc", s.auc.mean},       {"sd_auc", s.auc.sd},
                                      {"sun_f1", s.sun_f1.mean},      {"sd_sun_f1", s.sun_f1.sd},
                                      {"shadow_f1", s.shadow_f1.mean}, {"sd_shadow_f1", s.shadow_f1.sd}};
      }
    }
    io::detail::write_file(res.dir / "summary.csv", csv);

    json tp = nullptr;
    if (cfg.timepair) {
      std::string tcsv = "arm,repetition,label_change\n";
      tp = json::object();
      for (const auto& arm : arm_names()) {
        if (std::find(cfg.arms.begin(), cfg.arms.end(), arm) == cfg.arms.end()) continue;
        std::vector<double> v;
        for (const auto& r : res.runs)
          if (r.arm == arm && r.label_change) {
            v.push_back(*r.label_change);
            tcsv += arm + "," + std::to_string(r.rep) + "," + detail::num(*r.label_change) + "\n";
          }
        res.label_change[arm] = stats_of(v);
        tp[arm] = {{"mean", res.label_change[arm].mean}, {"sd", res.label_change[arm].sd}, {"values", v}};
      }
      io::detail::write_file(res.dir / "timepair.csv", tcsv);
    }

    json regions = json::array();
    for (const auto& rs : res.limited_regions) {
      json a = json::array();
      for (const auto& r : rs) a.push_back(detail::rect_json(r));
      regions.push_back(a);
    }
    json out;
    out["config"] = to_json(cfg);
    out["ratio"] = {{"n_pairs", res.ratio.n_pairs},
                    {"cosine_to_truth", res.ratio_cosine ? json(*res.ratio_cosine) : json(nullptr)}};
    out["limited_regions"] = regions;
    out["arms"] = js;
    out["timepair"] = tp;
    io::detail::write_file(res.dir / "summary.json", out.dump(2) + "\n");
  });
  return res;
}

}  // namespace spectro::repro
