#include "pnpmri_cli/commands.hpp"

#include "pnpmri_cli/png.hpp"

#include <pnpmri/error.hpp>
#include <pnpmri/pnp_admm.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>

namespace fs = std::filesystem;

namespace pnpmri::cli {

namespace {

constexpr int kSchemaVersion = 1;

void make_dir(const fs::path &dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory '" + dir.string() + "': " + ec.message());
}

void write_json(const fs::path &path, const Json &j) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open '" + path.string() + "' for writing");
  os << j.dump(2) << '\n';
  if (!os) throw IoError("failed writing '" + path.string() + "'");
}

template <typename F> auto load_input(const std::string &what, F &&f) {
  try {
    return f();
  } catch (const FormatError &e) {
    throw IoError(what + ": " + e.what());
  }
}

std::string shape(const Image &x) { return std::to_string(x.rows()) + "x" + std::to_string(x.cols()); }

std::string mask_slug(const MaskSpec &m) {
  if (m.accel_rows == 1 && (m.pattern != PatternKind::Uniform2d || m.accel_cols == 1)) return "full";
  std::string s = "R" + std::to_string(m.accel_rows);
  if (m.pattern == PatternKind::Uniform2d) s += "x" + std::to_string(m.accel_cols);
  return s + "_acs" + std::to_string(m.acs);
}

double max_real(const Image &x) {
  double m = 0.0;
  for (const auto &v : x.values()) m = std::max(m, v.real());
  return m;
}

// Test case k of an experiment: phantom seed base + k, one noise stream per case.
struct Case {
  Image truth;
  SensitivityMaps maps;
  KSpaceData data;
};

Case make_case(const ExperimentConfig &cfg, const MaskSpec &mask_spec, std::uint64_t k) {
  PhantomSpec ps = cfg.phantom;
  ps.rng_seed = cfg.seed + k;
  Case c{make_phantom(ps), make_sensitivity_maps(cfg.coils, ps.rows, ps.cols, cfg.seed), {}};
  const SamplingMask mask = make_mask(ps.rows, ps.cols, mask_spec);
  c.data = simulate_acquisition(c.truth, c.maps, mask, {cfg.noise_sigma, derive_seed(cfg.seed, k)});
  return c;
}

// Values as they come back from the float32 sample files, so in-memory
// pipelines agree exactly with ones that pass through disk.
Complex to_f32(Complex v) {
  return Complex(static_cast<float>(v.real()), static_cast<float>(v.imag()));
}

Image stored(Image x) {
  for (auto &v : x.values()) v = to_f32(v);
  return x;
}

Case stored(const Case &c) {
  CoilArray samples = c.data.samples();
  for (auto &v : samples.values()) v = to_f32(v);
  CoilArray maps = c.maps.values();
  for (auto &v : maps.values()) v = to_f32(v);
  return {stored(c.truth), SensitivityMaps::normalize(maps), KSpaceData(std::move(samples), c.data.mask())};
}

Json phantom_json(const PhantomSpec &ps) {
  return {{"kind", to_string(ps.kind)}, {"rows", ps.rows}, {"cols", ps.cols}, {"jitter", ps.jitter},
          {"rng_seed", ps.rng_seed}};
}

Json history_json(const std::vector<IterationRecord> &history) {
  Json records = Json::array();
  for (const auto &h : history) {
    Json r;
    r["iteration"] = h.iteration;
    r["primal_gap"] = h.primal_gap;
    r["prox_residual"] = h.prox_residual;
    r["cg_iterations"] = h.cg_iterations;
    r["prox_nonconverged"] = h.prox_nonconverged;
    r["data_residual"] = h.data_residual;
    if (h.psnr) r["psnr_db"] = *h.psnr;
    records.push_back(r);
  }
  return records;
}

struct Trained {
  CnnArchitecture arch;
  CnnWeights weights;
  bool loss_decreased = true;
};

Trained train_for(const ExperimentConfig &cfg, const MaskSpec &mask, const fs::path &dir, std::ostream &out) {
  DatasetSpec ds;
  ds.count = cfg.train.pairs;
  ds.phantom = cfg.phantom;
  ds.phantom.rng_seed = cfg.train.phantom_seed;
  ds.noise_sigmas = cfg.train.noise_sigmas;
  ds.aliased_every = cfg.train.aliased_every;
  ds.num_coils = cfg.coils;
  ds.mask = mask;
  ds.acquisition_sigma = cfg.noise_sigma;
  ds.seed = cfg.seed;
  AdamConfig adam = cfg.train.adam;
  adam.rng_seed = cfg.seed;

  const auto t0 = std::chrono::steady_clock::now();
  const TrainResult res = train_denoiser(make_denoiser_dataset(ds), cfg.train.arch, adam);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  make_dir(dir);
  save_checkpoint((dir / "denoiser.pnpw").string(), cfg.train.arch, res.weights,
                  {{"seed", std::to_string(cfg.seed)},
                   {"pairs", std::to_string(cfg.train.pairs)},
                   {"epochs", std::to_string(adam.epochs)},
                   {"mask", mask.describe()}});
  Json curve;
  curve["schema_version"] = kSchemaVersion;
  curve["seed"] = cfg.seed;
  curve["pairs"] = cfg.train.pairs;
  curve["epochs"] = adam.epochs;
  curve["mask"] = mask.describe();
  curve["initial_loss"] = res.initial_loss;
  curve["final_loss"] = res.final_loss;
  curve["epoch_losses"] = res.epoch_losses;
  write_json(dir / "train_loss.json", curve);

  out << "trained " << cfg.train.pairs << " pairs x " << adam.epochs << " epochs in " << std::fixed
      << std::setprecision(1) << secs << " s; loss " << std::scientific << std::setprecision(3) << res.initial_loss
      << " -> " << res.final_loss << std::defaultfloat << '\n';
  return {cfg.train.arch, res.weights, res.final_loss <= res.initial_loss};
}

double mean(const std::vector<double> &v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

// Sample standard deviation (n - 1); zero for a single case.
double stddev(const std::vector<double> &v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

} // namespace

ReconOutcome reconstruct(Method method, const ExperimentConfig &cfg, const Acquisition &acq, const Denoiser *den,
                         const Image *reference) {
  ReconOutcome r;
  switch (method) {
  case Method::ZeroFilled:
    r.image = zero_filled_recon(EncodingOperator(acq.maps, acq.data.mask()), acq.data);
    break;
  case Method::Grappa:
    r.image = grappa_reconstruct(acq.data, cfg.grappa);
    break;
  case Method::Pnp: {
    if (!den) throw ConfigError("pnp requires a denoiser checkpoint");
    PnpConfig p;
    p.lambda = cfg.pnp.lambda;
    p.num_iterations = cfg.pnp.iterations;
    p.cg = cfg.pnp.cg;
    PnpResult res = pnp_reconstruct(EncodingOperator(acq.maps, acq.data.mask()), acq.data, *den, p, reference);
    r.image = std::move(res.x);
    r.history = std::move(res.history);
    r.nonconverged = res.any_nonconverged;
    break;
  }
  }
  return r;
}

Json metric_report(const std::string &method, const std::string &mask, const Image &reference, const Image &test,
                   std::span<const std::uint8_t> support) {
  MetricOptions opts;
  opts.support = support;
  const PsnrResult p = psnr(reference, test, opts);
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["method"] = method;
  j["mask"] = mask;
  j["psnr_db"] = p.db;
  j["psnr_identical"] = p.identical;
  j["ssim"] = ssim(reference, test, opts);
  std::size_t n = reference.size();
  if (!support.empty()) n = static_cast<std::size_t>(std::count(support.begin(), support.end(), std::uint8_t{1}));
  j["support_pixels"] = n;
  return j;
}

int cmd_simulate(const ExperimentConfig &cfg, std::ostream &out) {
  const Case c = make_case(cfg, cfg.mask, 0);
  const fs::path dir(cfg.out_dir);
  make_dir(dir);
  PhantomSpec ps = cfg.phantom;
  ps.rng_seed = cfg.seed;
  Json extra;
  extra["content"] = "acquisition";
  extra["seed"] = cfg.seed;
  extra["sigma"] = cfg.noise_sigma;
  extra["phantom"] = phantom_json(ps);
  save_kspace((dir / "kspace.pnpk").string(), c.data, extra);
  Json truth_extra;
  truth_extra["content"] = "ground-truth";
  truth_extra["seed"] = cfg.seed;
  truth_extra["phantom"] = phantom_json(ps);
  save_image((dir / "truth.pnpi").string(), c.truth, truth_extra);
  save_maps((dir / "maps.pnpk").string(), c.maps);
  out << "simulated " << c.data.mask().describe() << ", " << cfg.coils << " coils, sigma " << cfg.noise_sigma
      << "; effective acceleration " << std::setprecision(4) << c.data.mask().acceleration() << std::defaultfloat
      << '\n';
  out << "wrote " << (dir / "kspace.pnpk").string() << ", " << (dir / "truth.pnpi").string() << ", "
      << (dir / "maps.pnpk").string() << '\n';
  return kExitOk;
}

int cmd_train(const ExperimentConfig &cfg, std::ostream &out) {
  const Trained t = train_for(cfg, cfg.mask, fs::path(cfg.out_dir), out);
  out << "wrote " << (fs::path(cfg.out_dir) / "denoiser.pnpw").string() << '\n';
  if (!t.loss_decreased) {
    out << "final training loss exceeds the initial loss\n";
    return kExitNonConvergence;
  }
  return kExitOk;
}

int cmd_reconstruct(const ExperimentConfig &cfg, std::ostream &out) {
  if (cfg.inputs.kspace.empty()) throw ConfigError("/inputs/kspace: required for reconstruct");
  if (cfg.method == Method::Pnp && cfg.pnp.checkpoint.empty()) {
    throw ConfigError("/pnp/checkpoint: required for method pnp");
  }
  if (cfg.method != Method::Grappa && cfg.maps == MapsSource::Simulated && cfg.inputs.maps.empty()) {
    throw ConfigError("/inputs/maps: required when maps is \"simulated\"");
  }
  KSpaceData data = load_input(cfg.inputs.kspace, [&] { return load_kspace(cfg.inputs.kspace).data; });

  std::optional<CnnDenoiser> den;
  if (cfg.method == Method::Pnp) {
    const Checkpoint ck = load_input(cfg.pnp.checkpoint, [&] { return load_checkpoint(cfg.pnp.checkpoint); });
    den.emplace(ck.arch, ck.weights);
  }
  std::optional<SensitivityMaps> maps;
  if (cfg.method != Method::Grappa) {
    if (cfg.maps == MapsSource::Simulated) {
      maps = load_input(cfg.inputs.maps, [&] { return load_maps(cfg.inputs.maps); });
    } else {
      maps = estimate_maps_lowres(data);
    }
    if (maps->rows() != data.rows() || maps->cols() != data.cols() || maps->num_coils() != data.num_coils()) {
      throw ConfigError("maps do not match the k-space dimensions");
    }
  }
  std::optional<Image> reference;
  if (!cfg.inputs.truth.empty()) {
    reference = magnitude(load_input(cfg.inputs.truth, [&] { return load_image(cfg.inputs.truth).image; }));
    if (reference->rows() != data.rows() || reference->cols() != data.cols()) {
      throw ConfigError("truth image is " + shape(*reference) + " but k-space is " + std::to_string(data.rows()) +
                        "x" + std::to_string(data.cols()));
    }
  }

  const Acquisition acq{std::move(data), maps ? *maps : SensitivityMaps{}};
  const ReconOutcome r =
      reconstruct(cfg.method, cfg, acq, den ? &*den : nullptr, reference ? &*reference : nullptr);

  const fs::path dir(cfg.out_dir);
  make_dir(dir);
  const std::string name = to_string(cfg.method);
  Json extra;
  extra["content"] = "reconstruction";
  extra["method"] = name;
  extra["mask"] = acq.data.mask().describe();
  if (cfg.method == Method::Pnp) {
    extra["lambda"] = cfg.pnp.lambda;
    extra["iterations"] = cfg.pnp.iterations;
  }
  save_image((dir / ("recon_" + name + ".pnpi")).string(), r.image, extra);
  if (cfg.method == Method::Pnp) {
    Json h;
    h["schema_version"] = kSchemaVersion;
    h["method"] = name;
    h["lambda"] = cfg.pnp.lambda;
    h["iterations"] = cfg.pnp.iterations;
    h["history"] = history_json(r.history);
    write_json(dir / "history.json", h);
  }
  out << "wrote " << (dir / ("recon_" + name + ".pnpi")).string() << '\n';
  if (reference) {
    out << "psnr " << std::fixed << std::setprecision(2) << psnr(*reference, magnitude(r.image)).db << " dB, ssim "
        << std::setprecision(4) << ssim(*reference, magnitude(r.image)) << std::defaultfloat << '\n';
  }
  if (r.nonconverged) {
    out << "warning: at least one prox solve hit cg_max_iters above tolerance\n";
    return kExitNonConvergence;
  }
  return kExitOk;
}

int cmd_evaluate(const std::string &reference_path, const std::string &test_path, const std::string &maps_path,
                 const std::string &out_dir, std::ostream &out) {
  const ImageFile ref = load_input(reference_path, [&] { return load_image(reference_path); });
  const ImageFile test = load_input(test_path, [&] { return load_image(test_path); });
  if (!ref.image.same_shape(test.image)) {
    throw ConfigError("reference '" + reference_path + "' is " + shape(ref.image) + " but test '" + test_path +
                      "' is " + shape(test.image));
  }
  std::optional<SensitivityMaps> maps;
  if (!maps_path.empty()) {
    maps = load_input(maps_path, [&] { return load_maps(maps_path); });
    if (maps->rows() != ref.image.rows() || maps->cols() != ref.image.cols()) {
      throw ConfigError("maps '" + maps_path + "' do not match the image size " + shape(ref.image));
    }
  }
  Json report = metric_report(test.header.value("method", "unknown"), test.header.value("mask", ""),
                              magnitude(ref.image), magnitude(test.image),
                              maps ? maps->support() : std::span<const std::uint8_t>{});
  if (test.header.contains("lambda")) report["lambda"] = test.header["lambda"];
  if (test.header.contains("iterations")) report["iterations"] = test.header["iterations"];
  report["reference"] = reference_path;
  report["test"] = test_path;
  if (!out_dir.empty()) {
    make_dir(out_dir);
    write_json(fs::path(out_dir) / "report.json", report);
  }
  out << report.dump(2) << '\n';
  return kExitOk;
}

int cmd_compare(const ExperimentConfig &cfg, std::ostream &out) {
  const bool wants_pnp = std::count(cfg.compare.methods.begin(), cfg.compare.methods.end(), Method::Pnp) > 0;
  std::optional<Checkpoint> given;
  if (wants_pnp && !cfg.pnp.checkpoint.empty()) {
    given = load_input(cfg.pnp.checkpoint, [&] { return load_checkpoint(cfg.pnp.checkpoint); });
  } else if (wants_pnp) {
    const std::uint64_t t0 = cfg.train.phantom_seed, t1 = t0 + cfg.train.pairs;
    const std::uint64_t c0 = cfg.seed, c1 = c0 + cfg.compare.cases;
    if (t0 < c1 && c0 < t1) {
      throw ConfigError("/train/phantom_seed: training phantoms [" + std::to_string(t0) + ", " + std::to_string(t1) +
                        ") overlap test phantoms [" + std::to_string(c0) + ", " + std::to_string(c1) + ")");
    }
  }
  const std::vector<MaskSpec> masks = cfg.compare.masks.empty() ? std::vector{cfg.mask} : cfg.compare.masks;
  const fs::path root(cfg.out_dir);
  make_dir(root);

  struct Cell {
    std::vector<double> psnr, ssim;
  };
  Json rows = Json::array();
  bool any_nonconverged = false;
  for (const MaskSpec &ms : masks) {
    const fs::path mdir = root / mask_slug(ms);
    make_dir(mdir);
    std::optional<CnnDenoiser> den;
    if (wants_pnp) {
      if (given) {
        den.emplace(given->arch, given->weights);
      } else {
        const Trained t = train_for(cfg, ms, mdir, out);
        den.emplace(t.arch, t.weights);
      }
    }

    std::map<Method, Cell> cells;
    for (std::size_t k = 0; k < cfg.compare.cases; ++k) {
      const Case raw = make_case(cfg, ms, k);
      const fs::path cdir = mdir / ("case_" + std::to_string(k));
      make_dir(cdir);
      save_kspace((cdir / "kspace.pnpk").string(), raw.data);
      save_image((cdir / "truth.pnpi").string(), raw.truth);
      save_maps((cdir / "maps.pnpk").string(), raw.maps);
      const Case c = stored(raw);
      const Image reference = magnitude(c.truth);
      const Acquisition acq{c.data, estimate_maps_lowres(c.data)};
      const Acquisition sim{c.data, c.maps};

      std::vector<std::pair<Method, Image>> mags;
      for (Method m : cfg.compare.methods) {
        const ReconOutcome r =
            reconstruct(m, cfg, cfg.maps == MapsSource::Estimated ? acq : sim, den ? &*den : nullptr, &reference);
        any_nonconverged = any_nonconverged || r.nonconverged;
        const std::string name = to_string(m);
        Json extra;
        extra["content"] = "reconstruction";
        extra["method"] = name;
        extra["mask"] = c.data.mask().describe();
        const Image mag = magnitude(stored(r.image));
        Json report = metric_report(name, c.data.mask().describe(), reference, mag, c.maps.support());
        if (m == Method::Pnp) {
          extra["lambda"] = report["lambda"] = cfg.pnp.lambda;
          extra["iterations"] = report["iterations"] = cfg.pnp.iterations;
          report["history"] = history_json(r.history);
        }
        report["case"] = k;
        save_image((cdir / (name + ".pnpi")).string(), r.image, extra);
        write_json(cdir / (name + ".json"), report);
        cells[m].psnr.push_back(report["psnr_db"].get<double>());
        cells[m].ssim.push_back(report["ssim"].get<double>());
        mags.emplace_back(m, mag);
      }

      if (cfg.compare.png) {
        const double top = max_real(reference);
        double err_top = 0.0;
        std::vector<std::pair<std::string, Image>> errors;
        for (const auto &[m, mag] : mags) {
          Image e(mag.rows(), mag.cols());
          for (std::size_t i = 0; i < e.size(); ++i) e[i] = std::abs(mag[i] - reference[i]);
          err_top = std::max(err_top, max_real(e));
          errors.emplace_back(to_string(m), std::move(e));
        }
        Json panels = Json::array();
        write_png((cdir / "reference.png").string(), reference, 0.0, top);
        panels.push_back({{"file", "reference.png"}, {"quantity", "magnitude"}, {"window", {0.0, top}}});
        for (const auto &[m, mag] : mags) {
          const std::string name = to_string(m);
          write_png((cdir / (name + ".png")).string(), mag, 0.0, top);
          panels.push_back({{"file", name + ".png"}, {"quantity", "magnitude"}, {"window", {0.0, top}}});
        }
        for (const auto &[name, e] : errors) {
          write_png((cdir / (name + "_error.png")).string(), e, 0.0, err_top);
          panels.push_back(
              {{"file", name + "_error.png"}, {"quantity", "abs error vs reference"}, {"window", {0.0, err_top}}});
        }
        Json sidecar;
        sidecar["schema_version"] = kSchemaVersion;
        sidecar["panels"] = panels;
        write_json(cdir / "panels.json", sidecar);
      }
    }

    std::vector<Json> mask_rows;
    for (Method m : cfg.compare.methods) {
      const Cell &cell = cells[m];
      Json row;
      row["mask"] = make_mask(cfg.phantom.rows, cfg.phantom.cols, ms).describe();
      row["method"] = to_string(m);
      row["cases"] = cell.psnr.size();
      row["psnr_mean"] = mean(cell.psnr);
      row["psnr_std"] = stddev(cell.psnr);
      row["ssim_mean"] = mean(cell.ssim);
      row["ssim_std"] = stddev(cell.ssim);
      mask_rows.push_back(row);
    }
    std::stable_sort(mask_rows.begin(), mask_rows.end(), [](const Json &a, const Json &b) {
      return a["psnr_mean"].get<double>() > b["psnr_mean"].get<double>();
    });
    for (auto &r : mask_rows) rows.push_back(std::move(r));
  }

  Json config = cfg.to_json();
  config.erase("out_dir");
  config.erase("inputs");
  Json summary;
  summary["schema_version"] = kSchemaVersion;
  summary["config"] = config;
  summary["std"] = "sample";
  summary["rows"] = rows;
  write_json(root / "summary.json", summary);

  out << std::left << std::setw(24) << "mask" << std::setw(13) << "method" << std::setw(20) << "PSNR (dB)"
      << "SSIM\n";
  for (const auto &r : rows) {
    std::ostringstream p, s;
    p << std::fixed << std::setprecision(2) << r["psnr_mean"].get<double>() << " +- " << r["psnr_std"].get<double>();
    s << std::fixed << std::setprecision(4) << r["ssim_mean"].get<double>() << " +- " << r["ssim_std"].get<double>();
    out << std::left << std::setw(24) << r["mask"].get<std::string>() << std::setw(13)
        << r["method"].get<std::string>() << std::setw(20) << p.str() << s.str() << '\n';
  }
  out << "wrote " << (root / "summary.json").string() << '\n';
  return any_nonconverged ? kExitNonConvergence : kExitOk;
}

int dispatch(const Invocation &inv, std::ostream &out, std::ostream &err) {
  try {
    if (inv.command == "evaluate") {
      if (inv.positional.size() < 2 || inv.positional.size() > 3) {
        throw ConfigError("evaluate expects REFERENCE TEST [MAPS]");
      }
      std::string out_dir = inv.overrides.out_dir.value_or("");
      if (!inv.config_path.empty() && !inv.overrides.out_dir) out_dir = load_config(inv.config_path).out_dir;
      return cmd_evaluate(inv.positional[0], inv.positional[1], inv.positional.size() == 3 ? inv.positional[2] : "",
                          out_dir, out);
    }
    if (inv.config_path.empty()) throw ConfigError("--config is required for " + inv.command);
    const ExperimentConfig cfg = load_config(inv.config_path, inv.overrides);
    if (inv.command == "simulate") return cmd_simulate(cfg, out);
    if (inv.command == "train") return cmd_train(cfg, out);
    if (inv.command == "reconstruct") return cmd_reconstruct(cfg, out);
    if (inv.command == "compare") return cmd_compare(cfg, out);
    throw ConfigError("unknown command '" + inv.command + "'");
  } catch (const ConfigError &e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const IoError &e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const FormatError &e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const fs::filesystem_error &e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const Error &e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }
}

} // namespace pnpmri::cli
