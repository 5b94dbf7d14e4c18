#include <cstdio>
#include <exception>
#include <filesystem>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "spectro/spectro.hpp"

namespace fs = std::filesystem;
using namespace spectro;
using nlohmann::json;

namespace {

std::vector<std::size_t> parse_list(const std::string& s, std::size_t expect, const std::string& what) {
  std::vector<std::size_t> v;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      std::size_t used = 0;
      v.push_back(std::stoul(tok, &used));
      if (used != tok.size()) throw Error("");
    } catch (const std::exception&) {
      throw Error(what + ": '" + s + "' is not a list of non-negative integers");
    }
  }
  if (expect && v.size() != expect) throw Error(what + " needs " + std::to_string(expect) + " comma-separated values");
  return v;
}

std::vector<double> parse_doubles(const std::string& s, std::size_t expect, const std::string& what) {
  std::vector<double> v;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      v.push_back(std::stod(tok));
    } catch (const std::exception&) {
      throw Error(what + ": '" + s + "' is not a list of numbers");
    }
  }
  if (expect && v.size() != expect) throw Error(what + " needs " + std::to_string(expect) + " comma-separated values");
  return v;
}

Rect parse_rect(const std::string& s) {
  const auto v = parse_list(s, 4, "rectangle");
  return {v[0], v[1], v[2], v[3]};
}

void write_geometry(const synth::SyntheticScene& sc, const fs::path& path) {
  std::string out = "row,col,visible,theta,gamma\n";
  const std::size_t W = sc.cube.width();
  for (std::size_t i = 0; i < sc.geometry.size(); ++i) {
    const auto& g = sc.geometry[i];
    out += std::to_string(i / W) + "," + std::to_string(i % W) + "," + std::to_string(g.visible) + "," +
           io::detail::fmt_double(g.theta) + "," + io::detail::fmt_double(g.gamma) + "\n";
  }
  io::detail::write_file(path, out);
}

void write_scene(const synth::SyntheticScene& sc, const fs::path& dir, const std::string& suffix, const json& extra) {
  json meta = extra;
  meta["classes"] = sc.labels.class_names();
  meta["sun_elevation_deg"] = sc.sun_elevation_deg;
  io::save_cube(sc.cube, dir / ("cube" + suffix), meta);
  io::save_mask_pgm(*sc.labels.shadow_mask(), sc.cube.height(), sc.cube.width(), dir / ("shadow" + suffix + ".pgm"));
  write_geometry(sc, dir / ("geometry" + suffix + ".csv"));
}

/// Normaliser configured from CLI flags; fitted on `fit_cube` when the method needs statistics.
struct NormFlags {
  std::string method = "raw";
  std::string panel;
  std::optional<std::size_t> ref_channel;
  std::size_t zero_channel = 0;

  void add(CLI::App* app, const std::string& default_method) {
    method = default_method;
    app->add_option("--method,--norm", method, "raw|flatfield|residual|iarr|continuum|zerowave")->capture_default_str();
    app->add_option("--panel", panel, "flat-field panel rectangle r0,c0,r1,c1 (half-open)");
    app->add_option("--ref-channel", ref_channel, "residual-image reference channel (default: brightest mean)");
    app->add_option("--zero-channel", zero_channel, "zero-wavelength channel")->capture_default_str();
  }

  radiometric::Normalizer make() const {
    radiometric::Normalizer n;
    n.method = radiometric::parse_method(method);
    if (!panel.empty()) n.panel = parse_rect(panel);
    n.reference_channel = ref_channel;
    n.zero_channel = zero_channel;
    return n;
  }
};

std::vector<LabelEntry> sample_entries(const std::vector<Sample>& s) {
  std::vector<LabelEntry> out;
  for (const auto& x : s) out.push_back({x.coord.row, x.coord.col, x.label});
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spectro: hyperspectral relighting augmentation toolkit"};
  app.require_subcommand(1);

  // ---- synth
  auto* synth_cmd = app.add_subcommand("synth", "render a synthetic scene with known ground truth");
  std::string preset = "visible";
  auto spec = synth::SceneSpec::visible();
  std::string synth_out;
  std::optional<double> t2_elev;
  synth_cmd->add_option("--preset", preset, "visible|swir")->capture_default_str()->check(CLI::IsMember({"visible", "swir"}));
  synth_cmd->add_option("--classes", spec.n_classes, "number of materials")->capture_default_str();
  synth_cmd->add_option("--shadow-frac", spec.shadow_frac, "fraction of pixels in cast shadow")->capture_default_str();
  synth_cmd->add_option("--noise", spec.noise_sigma, "relative multiplicative noise sigma")->capture_default_str();
  synth_cmd->add_option("--albedo-variation", spec.albedo_variation, "per-facet albedo variation amplitude")
      ->capture_default_str();
  synth_cmd->add_option("--seed", spec.seed)->capture_default_str();
  synth_cmd->add_option("--height", spec.height)->capture_default_str();
  synth_cmd->add_option("--width", spec.width)->capture_default_str();
  synth_cmd->add_option("--bands", spec.bands)->capture_default_str();
  synth_cmd->add_option("--elevation", spec.sun_elevation_deg, "sun elevation in degrees")->capture_default_str();
  synth_cmd->add_option("--timepair-elevation", t2_elev, "also render the layout at this second sun elevation");
  synth_cmd->add_option("--out", synth_out, "output directory")->required();

  // ---- normalize
  auto* norm_cmd = app.add_subcommand("normalize", "radiometric normalisation of a cube");
  NormFlags norm_flags;
  norm_flags.add(norm_cmd, "raw");
  std::string norm_fit, norm_in, norm_out;
  norm_cmd->add_option("--fit-cube", norm_fit, "cube the scene statistics are fitted on (default: --in)");
  norm_cmd->add_option("--in", norm_in, "input cube")->required();
  norm_cmd->add_option("--out", norm_out, "output cube")->required();

  // ---- estimate-ratio
  auto* est_cmd = app.add_subcommand("estimate-ratio", "estimate the sun/sky irradiance ratio from sun/shadow pairs");
  std::string est_in, est_out, est_pairs, est_bands, est_offsets = "1,2,4";
  ratio::EstimatorOptions eo;
  est_cmd->add_option("--in", est_in, "raw cube")->required();
  est_cmd->add_option("--bands", est_bands, "pseudo-RGB wavelengths in nm, e.g. 450,550,600 (default by grid)");
  est_cmd->add_option("--mu", eo.pairs.mu)->capture_default_str();
  est_cmd->add_option("--xi", eo.pairs.xi)->capture_default_str();
  est_cmd->add_option("--offsets", est_offsets, "transect pixel offsets")->capture_default_str();
  est_cmd->add_option("--sg-window", eo.smoothing.window)->capture_default_str();
  est_cmd->add_option("--sg-order", eo.smoothing.order)->capture_default_str();
  est_cmd->add_option("--out", est_out, "ratio CSV")->required();
  est_cmd->add_option("--pairs-out", est_pairs, "accepted pairs CSV");

  // ---- sample
  auto* sample_cmd = app.add_subcommand("sample", "draw a train/validation/test split from labelled regions");
  std::string sm_cube, sm_labels, sm_mask, sm_out;
  std::vector<std::string> sm_regions;
  std::size_t sm_n = 100, sm_nval = 50;
  std::uint64_t sm_seed = 7;
  bool sm_comprehensive = false;
  sample_cmd->add_option("--cube", sm_cube)->required();
  sample_cmd->add_option("--labels", sm_labels, "labels CSV")->required();
  sample_cmd->add_option("--shadow-mask", sm_mask, "PGM shadow mask (used to find sunlit regions)");
  sample_cmd->add_option("--region", sm_regions, "CLASS:r0,c0,r1,c1 (repeatable); classes without one get sunlit regions found automatically");
  sample_cmd->add_flag("--comprehensive", sm_comprehensive, "train from the whole image");
  sample_cmd->add_option("--n", sm_n, "training samples per class")->capture_default_str();
  sample_cmd->add_option("--n-val", sm_nval, "validation samples per class")->capture_default_str();
  sample_cmd->add_option("--seed", sm_seed)->capture_default_str();
  sample_cmd->add_option("--out", sm_out, "split path")->required();

  // ---- augment
  auto* aug_cmd = app.add_subcommand("augment", "relight the training part of a split");
  std::string aug_in, aug_ratio, aug_out;
  std::size_t aug_M = 10, aug_batch = 0;
  std::uint64_t aug_seed = 7;
  aug_cmd->add_option("--in", aug_in, "input split")->required();
  aug_cmd->add_option("--ratio", aug_ratio, "ratio CSV")->required();
  aug_cmd->add_option("--M", aug_M, "ratio draws per batch")->capture_default_str();
  aug_cmd->add_option("--batch-size", aug_batch, "augment in batches of this size (0: one batch)")->capture_default_str();
  aug_cmd->add_option("--seed", aug_seed)->capture_default_str();
  aug_cmd->add_option("--out", aug_out, "output split")->required();

  // ---- train
  auto* train_cmd = app.add_subcommand("train", "train the spectral CNN");
  std::string tr_data, tr_arch = "2conv2fc", tr_ratio, tr_out, tr_fit;
  std::size_t tr_M = 10;
  cnn::TrainConfig tc;
  NormFlags tr_norm;
  tc.seed = 7;
  train_cmd->add_option("--data", tr_data, "split path")->required();
  train_cmd->add_option("--arch", tr_arch, "<k>conv<m>fc")->capture_default_str();
  train_cmd->add_option("--augment", tr_ratio, "ratio CSV; enables relighting augmentation per batch");
  train_cmd->add_option("--M", tr_M, "ratio draws per batch")->capture_default_str();
  tr_norm.add(train_cmd, "zerowave");
  train_cmd->add_option("--fit-cube", tr_fit, "cube for normalisation statistics (default: all split spectra)");
  train_cmd->add_option("--epochs", tc.epochs)->capture_default_str();
  train_cmd->add_option("--lr", tc.learning_rate)->capture_default_str();
  train_cmd->add_option("--momentum", tc.momentum)->capture_default_str();
  train_cmd->add_option("--batch-size", tc.batch_size)->capture_default_str();
  train_cmd->add_option("--min-steps", tc.min_steps, "raise epochs until this many SGD steps run")->capture_default_str();
  train_cmd->add_option("--clip-norm", tc.clip_norm, "gradient L2 clip (0: off)")->capture_default_str();
  train_cmd->add_option("--seed", tc.seed)->capture_default_str();
  train_cmd->add_option("--out", tr_out, "model file")->required();

  // ---- classify
  auto* cls_cmd = app.add_subcommand("classify", "classify every pixel of a cube");
  std::string cl_model, cl_in, cl_out, cl_probs;
  cls_cmd->add_option("--model", cl_model)->required();
  cls_cmd->add_option("--in", cl_in, "cube")->required();
  cls_cmd->add_option("--out", cl_out, "labels CSV (pixels below threshold are left out)")->required();
  cls_cmd->add_option("--probs-out", cl_probs, "probability raster");

  // ---- evaluate
  auto* ev_cmd = app.add_subcommand("evaluate", "score a probability raster against labels");
  std::string ev_probs, ev_truth, ev_val, ev_mask, ev_out, ev_exclude, ev_cube;
  ev_cmd->add_option("--probs", ev_probs)->required();
  ev_cmd->add_option("--truth", ev_truth, "labels CSV")->required();
  ev_cmd->add_option("--val-split", ev_val, "labels CSV of validation pixels (threshold selection)")->required();
  ev_cmd->add_option("--exclude", ev_exclude, "labels CSV of pixels to leave out of the test set (e.g. training)");
  ev_cmd->add_option("--shadow-mask", ev_mask, "PGM shadow mask for sun/shadow stratification");
  ev_cmd->add_option("--class-names-from", ev_cube, "cube whose sidecar lists class names");
  ev_cmd->add_option("--out", ev_out, "report JSON")->required();

  // ---- repro
  auto* rp_cmd = app.add_subcommand("repro", "run the limited/augmented/comprehensive experiment");
  std::string rp_config, rp_out, rp_dump;
  rp_cmd->add_option("--config", rp_config, "JSON run config (defaults apply to missing keys)");
  rp_cmd->add_option("--out", rp_out, "report directory (overrides output_dir)");
  rp_cmd->add_option("--dump-config", rp_dump, "write the resolved config here and exit");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*synth_cmd) {
      auto s = preset == "swir" ? synth::SceneSpec::swir() : synth::SceneSpec::visible();
      s.n_classes = spec.n_classes;
      s.shadow_frac = spec.shadow_frac;
      s.noise_sigma = spec.noise_sigma;
      s.albedo_variation = spec.albedo_variation;
      s.seed = spec.seed;
      s.height = spec.height;
      s.width = spec.width;
      s.bands = spec.bands;
      s.sun_elevation_deg = spec.sun_elevation_deg;
      const fs::path dir = synth_out;
      fs::create_directories(dir);
      json extra = {{"generator", {{"preset", preset}, {"seed", s.seed}, {"noise_sigma", s.noise_sigma},
                                   {"shadow_frac", s.shadow_frac}}}};
      synth::SyntheticScene a;
      if (t2_elev) {
        auto [x, y] = synth::generate_timepair(s, s.sun_elevation_deg, *t2_elev);
        write_scene(y, dir, "_t2", extra);
        a = std::move(x);
      } else {
        a = synth::generate(s);
      }
      write_scene(a, dir, "", extra);
      io::save_labels_csv(a.labels.entries(), dir / "labels.csv");
      io::save_ratio_csv(a.cube.grid().nm(), a.true_ratio.values(), dir / "ratio_true.csv");
      std::string sky = "wavelength_nm,sky_irradiance\n";
      for (std::size_t k = 0; k < a.sky.size(); ++k)
        sky += io::detail::fmt_double(a.cube.grid()[k]) + "," + io::detail::fmt_double(a.sky[k]) + "\n";
      io::detail::write_file(dir / "sky.csv", sky);
      std::printf("scene %zux%zux%zu, %zu classes, %.1f%% shadow -> %s\n", a.cube.height(), a.cube.width(),
                  a.cube.bands(), a.labels.n_classes(), 100.0 * synth::mask_fraction(*a.labels.shadow_mask()),
                  dir.string().c_str());
    } else if (*norm_cmd) {
      auto n = norm_flags.make();
      const HyperCube in = io::load_cube(norm_in);
      n = radiometric::fit(n, norm_fit.empty() ? in : io::load_cube(norm_fit));
      json meta = io::load_cube_meta(norm_in);
      meta["normalization"] = cnn::normalizer_to_json(n);
      io::save_cube(radiometric::normalize_cube(n, in), norm_out, meta);
    } else if (*est_cmd) {
      const HyperCube cube = io::load_cube(est_in);
      if (!est_bands.empty()) {
        const auto b = parse_doubles(est_bands, 3, "--bands");
        eo.bands = std::array<double, 3>{b[0], b[1], b[2]};
      }
      eo.pairs.offsets = parse_list(est_offsets, 0, "--offsets");
      const auto est = ratio::estimate_ratio_from_image(cube, eo);
      io::save_ratio_csv(cube.grid().nm(), est.curve.values(), est_out);
      if (!est_pairs.empty()) {
        std::string out = "sun_row,sun_col,shadow_row,shadow_col\n";
        for (const auto& p : est.pairs)
          out += std::to_string(p.sunlit.row) + "," + std::to_string(p.sunlit.col) + "," +
                 std::to_string(p.shadow.row) + "," + std::to_string(p.shadow.col) + "\n";
        io::detail::write_file(est_pairs, out);
      }
      std::printf("%zu sun/shadow pairs\n", est.n_pairs);
    } else if (*sample_cmd) {
      const HyperCube cube = io::load_cube(sm_cube);
      const LabelMap labels = io::load_label_map(sm_cube, sm_labels, sm_mask);
      const std::size_t K = labels.n_classes();
      std::vector<std::vector<Rect>> regions(K);
      if (sm_comprehensive) {
        for (auto& r : regions) r = {{0, 0, cube.height(), cube.width()}};
      } else {
        for (const auto& s : sm_regions) {
          const auto colon = s.find(':');
          if (colon == std::string::npos) throw Error("--region must be CLASS:r0,c0,r1,c1");
          const std::size_t k = parse_list(s.substr(0, colon), 1, "--region class")[0];
          if (k >= K) throw Error("--region class " + std::to_string(k) + " out of range");
          regions[k].push_back(parse_rect(s.substr(colon + 1)));
        }
        for (std::size_t k = 0; k < K; ++k)
          if (regions[k].empty()) regions[k] = synth::find_sunlit_regions(labels, static_cast<int>(k), sm_n);
      }
      const auto split = sample_regions(cube, labels, regions, sm_n, sm_seed, sm_nval);
      json rj = json::array();
      for (const auto& rs : regions) {
        json a = json::array();
        for (const auto& r : rs) a.push_back({r.r0, r.c0, r.r1, r.c1});
        rj.push_back(a);
      }
      io::save_split(split, sm_out,
                     {{"sampling", {{"seed", sm_seed}, {"n_per_class", sm_n}, {"n_validation_per_class", sm_nval},
                                    {"regions", rj}, {"comprehensive", sm_comprehensive},
                                    {"validation_source", sm_comprehensive ? "remaining pixels"
                                                                          : "outside the training regions"}}}});
      const auto stem = io::detail::stem_of(sm_out, "split").string();
      io::save_labels_csv(sample_entries(split.train), stem + ".train.csv");
      io::save_labels_csv(sample_entries(split.validation), stem + ".val.csv");
      io::save_labels_csv(sample_entries(split.test), stem + ".test.csv");
      std::printf("train %zu, validation %zu, test %zu\n", split.train.size(), split.validation.size(),
                  split.test.size());
    } else if (*aug_cmd) {
      auto split = io::load_split(aug_in);
      const auto rc = io::load_ratio_csv(aug_ratio);
      if (rc.wavelengths_nm != split.grid.nm()) throw Error("ratio curve and split use different wavelength grids");
      const auto estimator = illumination::scaled_by_sun_angle(illumination::IrradianceRatio(rc.values));
      const std::size_t bs = aug_batch == 0 ? split.train.size() : aug_batch;
      std::vector<Sample> out;
      for (std::size_t b0 = 0, b = 0; b0 < split.train.size(); b0 += bs, ++b) {
        const std::span<const Sample> batch(split.train.data() + b0, std::min(bs, split.train.size() - b0));
        auto part = illumination::augment_batch(batch, {aug_M, derive_seed(aug_seed, {b})}, estimator);
        out.insert(out.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
      }
      split.train = std::move(out);
      io::save_split(split, aug_out, {{"augmentation", {{"M", aug_M}, {"seed", aug_seed}, {"batch_size", bs}}}});
      std::printf("train %zu after augmentation\n", split.train.size());
    } else if (*train_cmd) {
      const auto split = io::load_split(tr_data);
      auto n = tr_norm.make();
      if (n.needs_fit()) {
        if (!tr_fit.empty()) {
          n = radiometric::fit(n, io::load_cube(tr_fit));
        } else {
          if (n.method == radiometric::Method::FlatField) throw Error("flat-field training needs --fit-cube");
          std::vector<Spectrum> all;
          for (const auto* part : {&split.train, &split.validation, &split.test})
            for (const auto& s : *part) all.push_back(s.spectrum);
          n = radiometric::fit(n, all);
        }
      }
      cnn::BatchTransform aug;
      if (!tr_ratio.empty()) {
        const auto rc = io::load_ratio_csv(tr_ratio);
        if (rc.wavelengths_nm != split.grid.nm()) throw Error("ratio curve and split use different wavelength grids");
        const auto estimator = illumination::scaled_by_sun_angle(illumination::IrradianceRatio(rc.values));
        aug = [estimator, tr_M](std::span<const Sample> batch, std::uint64_t seed) {
          return illumination::augment_batch(batch, {tr_M, seed}, estimator);
        };
      }
      auto model = cnn::train(split, cnn::ArchitectureSpec::parse(tr_arch), tc, n, aug);
      // Thresholds come from validation when every class has both positives and negatives there.
      if (!split.validation.empty()) {
        eval::ScoredSet val;
        for (const auto& s : split.validation) {
          const auto p = model.probabilities(s.spectrum);
          val.scores.emplace_back(p.begin(), p.end());
          val.labels.push_back(s.label);
        }
        try {
          for (std::size_t k = 0; k < model.n_classes(); ++k)
            model.thresholds.push_back(eval::select_threshold(val.column(k), val.is_class(k)));
        } catch (const Error&) {
          model.thresholds.clear();
        }
      }
      cnn::save_model(model, tr_out);
      std::printf("trained %s for %zu epochs, final loss %.6g\n", tr_arch.c_str(), model.meta.epochs,
                  model.meta.final_loss);
    } else if (*cls_cmd) {
      const auto model = cnn::load_model(cl_model);
      const HyperCube cube = io::load_cube(cl_in);
      if (cube.grid().nm() != model.wavelengths_nm) throw Error("cube wavelengths do not match the model");
      io::ProbRaster pr{cube.height(), cube.width(), model.n_classes(), {}};
      pr.probs.reserve(cube.pixels() * model.n_classes());
      std::vector<LabelEntry> assigned;
      for (std::size_t r = 0; r < cube.height(); ++r)
        for (std::size_t c = 0; c < cube.width(); ++c) {
          const auto p = model.probabilities(cube.spectrum(r, c));
          pr.probs.insert(pr.probs.end(), p.begin(), p.end());
          const std::vector<double> pd(p.begin(), p.end());
          const int k = eval::assign_label(pd, model.thresholds);
          if (k >= 0) assigned.push_back({r, c, k});
        }
      io::save_labels_csv(assigned, cl_out);
      if (!cl_probs.empty()) io::save_probs(pr, cl_probs);
      std::printf("%zu of %zu pixels assigned\n", assigned.size(), cube.pixels());
    } else if (*ev_cmd) {
      const auto pr = io::load_probs(ev_probs);
      const auto truth = io::load_labels_csv(ev_truth);
      const auto val = io::load_labels_csv(ev_val);
      std::vector<std::uint8_t> skip(pr.height * pr.width, 0);
      auto check = [&](const LabelEntry& e) {
        if (e.row >= pr.height || e.col >= pr.width) throw Error("label outside the probability raster");
        if (e.class_id < 0 || static_cast<std::size_t>(e.class_id) >= pr.n_classes) throw Error("label class out of range");
      };
      eval::ScoredSet vset, tset;
      for (const auto& e : val) {
        check(e);
        const auto p = pr.at(e.row, e.col);
        vset.scores.emplace_back(p.begin(), p.end());
        vset.labels.push_back(e.class_id);
        skip[e.row * pr.width + e.col] = 1;
      }
      if (!ev_exclude.empty())
        for (const auto& e : io::load_labels_csv(ev_exclude)) {
          if (e.row >= pr.height || e.col >= pr.width) throw Error("excluded pixel outside the probability raster");
          skip[e.row * pr.width + e.col] = 1;
        }
      std::optional<io::MaskImage> mask;
      if (!ev_mask.empty()) {
        mask = io::load_mask_pgm(ev_mask);
        if (mask->height != pr.height || mask->width != pr.width) throw Error("shadow mask does not match the raster");
      }
      std::vector<std::uint8_t> shadow;
      for (const auto& e : truth) {
        check(e);
        if (skip[e.row * pr.width + e.col]) continue;
        const auto p = pr.at(e.row, e.col);
        tset.scores.emplace_back(p.begin(), p.end());
        tset.labels.push_back(e.class_id);
        if (mask) shadow.push_back(mask->mask[e.row * pr.width + e.col]);
      }
      std::vector<std::string> names;
      if (!ev_cube.empty()) names = io::load_cube_meta(ev_cube).at("classes").get<std::vector<std::string>>();
      else
        for (std::size_t k = 0; k < pr.n_classes; ++k) names.push_back("class_" + std::to_string(k));
      if (names.size() != pr.n_classes) throw Error("class name count does not match the raster");
      const auto report = eval::evaluate(vset, tset, names, mask ? &shadow : nullptr);
      json j = eval::to_json(report);
      j["inputs"] = {{"probs", ev_probs}, {"truth", ev_truth}, {"val_split", ev_val}, {"exclude", ev_exclude},
                     {"shadow_mask", ev_mask}};
      io::detail::write_file(ev_out, j.dump(2) + "\n");
      std::printf("mean F1 %.4f, mean AUC %.4f over %zu test pixels\n", report.all.mean_f1.value_or(0.0),
                  report.all.mean_auc.value_or(0.0), report.all.n_samples);
    } else if (*rp_cmd) {
      auto cfg = rp_config.empty() ? repro::RunConfig{} : repro::load_config(rp_config);
      if (!rp_out.empty()) cfg.output_dir = rp_out;
      if (!rp_dump.empty()) {
        io::detail::write_file(rp_dump, repro::to_json(cfg).dump(2) + "\n");
        return 0;
      }
      const auto res = repro::run_repro(cfg, stderr);
      std::printf("report written to %s\n", res.dir.string().c_str());
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
