#include "png.hpp"

#include <parallax/fft.hpp>
#include <parallax/grappa.hpp>
#include <parallax/io.hpp>
#include <parallax/metrics.hpp>
#include <parallax/nn/checkpoint.hpp>
#include <parallax/nn/train.hpp>
#include <parallax/parallel.hpp>
#include <parallax/phantom.hpp>
#include <parallax/postprocess.hpp>
#include <parallax/recon.hpp>
#include <parallax/sampling.hpp>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>

using namespace parallax;
namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

struct Globals
{
  std::uint64_t seed = 0;
  std::string precision = "f32";
  bool deterministic = false;
  bool no_png = false;
  fs::path out_dir = ".";
};

// Drops singleton axes, then left-pads with ones to the requested rank.
template <typename V> Tensor<V> squeeze_to(Tensor<V> const &t, Index rank, std::string const &what)
{
  Shape s;
  for (auto d : t.shape()) {
    if (d != 1) { s.push_back(d); }
  }
  if (static_cast<Index>(s.size()) > rank) {
    fail(ErrorCategory::ShapeMismatch, what + ": expected at most " + std::to_string(rank) + " non-singleton axes, got " +
                                           shape_string(t.shape()));
  }
  while (static_cast<Index>(s.size()) < rank) { s.insert(s.begin(), 1); }
  return t.reshaped(s);
}

ComplexTensor read_kspace(fs::path const &path) { return squeeze_to(io::read_cfl<double>(path), 3, path.string()); }

// Magnitude slices of an (H, W) or (S, H, W) CFL.
std::vector<RealImage> read_slices(fs::path const &path)
{
  auto const t = abs(squeeze_to(io::read_cfl<double>(path), 3, path.string()));
  Index const S = t.dim(0), H = t.dim(1), W = t.dim(2);
  std::vector<RealImage> out;
  for (Index s = 0; s < S; s++) {
    RealImage img({H, W});
    std::copy(t.data().begin() + s * H * W, t.data().begin() + (s + 1) * H * W, img.data().begin());
    out.push_back(std::move(img));
  }
  return out;
}

SamplingMask read_mask(fs::path const &path) { return SamplingMask::from_json(io::read_text(path)); }

fs::path sidecar(fs::path const &cfl) { return io::cfl_base(cfl).concat(".json"); }

void write_kernel(fs::path const &base, grappa::Kernel const &g)
{
  io::write_cfl(base, cast<Cxf>(g.weights));
  ojson j;
  j["coils"] = g.coils;
  j["accel"] = g.geometry.accel;
  j["source_lines"] = g.geometry.source_lines;
  j["readout_taps"] = g.geometry.readout_taps;
  j["ridge"] = g.ridge;
  io::write_text(sidecar(base), j.dump(2) + "\n");
}

grappa::Kernel read_kernel(fs::path const &path)
{
  ojson j;
  try {
    j = ojson::parse(io::read_text(sidecar(path)));
  } catch (nlohmann::json::exception const &e) {
    fail(ErrorCategory::MalformedHeader, sidecar(path).string() + ": " + e.what());
  }
  grappa::Kernel g;
  try {
    g.coils = j.at("coils").get<Index>();
    g.geometry.accel = j.at("accel").get<int>();
    g.geometry.source_lines = j.at("source_lines").get<int>();
    g.geometry.readout_taps = j.at("readout_taps").get<int>();
    g.ridge = j.value("ridge", 0.0);
  } catch (nlohmann::json::exception const &e) {
    fail(ErrorCategory::MalformedHeader, sidecar(path).string() + ": " + e.what());
  }
  auto const w = io::read_cfl<double>(path);
  g.weights = w.reshaped({g.geometry.accel - 1, g.coils, g.coils, g.geometry.source_lines, g.geometry.readout_taps});
  return g;
}

class Outputs
{
public:
  explicit Outputs(Globals const &g)
    : g_{g}
  {
    fs::create_directories(g.out_dir);
  }
  fs::path path(std::string const &name) const { return g_.out_dir / name; }
  void image(std::string const &name, RealImage const &img) const
  {
    io::write_cfl(path(name), cast<Cxf>(img));
    if (!g_.no_png) { cli::write_png(path(name + ".png"), img); }
  }
  void text(std::string const &name, std::string const &s) const { io::write_text(path(name), s); }

private:
  Globals const &g_;
};

ojson option_value(CLI::Option const *opt)
{
  if (opt->get_expected_min() == 0) { return opt->count() > 0; }
  std::string s;
  if (opt->count() > 0) {
    auto const r = opt->reduced_results();
    s = r.empty() ? "" : r.front();
  } else {
    s = opt->get_default_str();
  }
  auto const parsed = ojson::parse(s, nullptr, false);
  if (!parsed.is_discarded() && parsed.is_number()) { return parsed; }
  if (s.empty() && opt->count() == 0) { return nullptr; }
  return s;
}

void add_options(ojson &j, CLI::App const &app)
{
  for (auto const *opt : app.get_options()) {
    auto const name = opt->get_single_name();
    if (name == "help" || name.empty()) { continue; }
    j[name] = option_value(opt);
  }
}

void write_config(CLI::App const &app, CLI::App const &sub, Globals const &g)
{
  ojson j;
  j["subcommand"] = sub.get_name();
  ojson globals, params;
  add_options(globals, app);
  add_options(params, sub);
  j["globals"] = globals;
  j["parameters"] = params;
  j["threads"] = thread_count();
  io::write_text(g.out_dir / "config.json", j.dump(2) + "\n");
}

int exit_code(ErrorCategory c) { return 10 + static_cast<int>(c); }

grappa::CalibrationOptions calibration(int accel, int source_lines, int readout_taps, std::optional<double> ridge)
{
  grappa::CalibrationOptions opt;
  opt.geometry = {accel, source_lines, readout_taps};
  opt.ridge = ridge;
  return opt;
}

std::vector<nn::TrainSample> load_split(io::Manifest const &m, std::string const &split)
{
  std::vector<nn::TrainSample> out;
  for (auto const &e : m.samples) {
    if (!split.empty() && e.split != split) { continue; }
    nn::TrainSample s;
    s.id = e.id;
    s.seed = e.seed;
    s.kspace = read_kspace(m.resolve(e.kspace_path));
    s.target = e.image_path.empty() ? rss(ifft2c(s.kspace)) : read_slices(m.resolve(e.image_path)).front();
    out.push_back(std::move(s));
  }
  return out;
}

struct TrainArgs
{
  fs::path data;
  std::string model = "grappanet";
  nn::TrainConfig cfg;
  Index base_channels = 16;
  Index depth = 2;
  int source_lines = 2;
  int readout_taps = 5;
  double loss_lambda = 1e-3;
  Index crop = 320;
  bool match_params = false;
  std::string family = "random";
  Index max_train = 0;
};

template <typename T> void run_train(TrainArgs &a, Globals const &g, Outputs const &out)
{
  auto const manifest = io::read_manifest(a.data);
  auto train_set = load_split(manifest, "train");
  auto const val_set = load_split(manifest, "val");
  if (a.max_train > 0 && static_cast<Index>(train_set.size()) > a.max_train) {
    train_set.resize(static_cast<std::size_t>(a.max_train));
  }
  if (train_set.empty()) { fail(ErrorCategory::InvalidInput, a.data.string() + ": no training samples"); }

  nn::ModelConfig mc;
  mc.kind = nn::parse_model_kind(a.model);
  mc.coils = train_set.front().kspace.dim(0);
  mc.base_channels = a.base_channels;
  mc.depth = a.depth;
  mc.geometry = {2, a.source_lines, a.readout_taps};
  mc.loss_lambda = a.loss_lambda;
  mc.crop = a.crop;
  if (a.match_params && mc.kind == nn::ModelKind::ImageUNet) {
    auto ref = mc;
    ref.kind = nn::ModelKind::GrappaNet;
    mc.base_channels = nn::matched_ablation_base(ref);
  }

  a.cfg.seed = g.seed;
  a.cfg.family = a.family == "equispaced" ? nn::MaskFamily::Equispaced : nn::MaskFamily::Random;
  if (a.family != "random" && a.family != "equispaced") { fail(ErrorCategory::Config, "unknown mask family " + a.family); }
  a.cfg.checkpoint_dir = out.path("checkpoints");

  nn::Model<T> model(mc, g.seed);
  auto const result = nn::train(model, train_set, val_set, a.cfg, [](nn::EpochLog const &e) {
    std::cerr << "epoch " << e.epoch << " " << e.split << " loss " << e.loss << " ssim " << e.ssim << "\n";
  });
  nn::save_checkpoint(out.path("model"), model, g.seed, a.cfg.epochs);

  std::ostringstream log, steps;
  nn::write_log_csv(log, result.log);
  steps.precision(17);
  steps << "step,loss\n";
  for (std::size_t i = 0; i < result.step_losses.size(); i++) { steps << i << "," << result.step_losses[i] << "\n"; }
  out.text("log.csv", log.str());
  out.text("step_losses.csv", steps.str());
}

template <typename T>
RealImage run_net(fs::path const &checkpoint, ComplexTensor const &k, SamplingMask const &m,
                  std::optional<grappa::Kernel> kernel)
{
  auto const model = nn::load_checkpoint<T>(checkpoint);
  auto const in = nn::prepare_input<T>(k, m, model.config(), std::move(kernel));
  return model.predict(in);
}

} // namespace

int main(int argc, char **argv)
{
  CLI::App app{"parallax: multi-coil MRI reconstruction toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--seed", g.seed, "Random seed")->capture_default_str();
  app.add_option("--precision", g.precision, "Network arithmetic precision")
    ->check(CLI::IsMember({"f32", "f64"}))
    ->capture_default_str();
  app.add_flag("--deterministic", g.deterministic, "Single-threaded, bitwise reproducible execution");
  app.add_flag("--no-png", g.no_png, "Skip PNG previews");
  app.add_option("-o,--out-dir", g.out_dir, "Output directory")->capture_default_str();

  std::function<void()> action;
  auto sub = [&](char const *name, char const *help) { return app.add_subcommand(name, help); };

  // phantom
  phantom::PhantomSpec ps;
  std::string contrast = "pd";
  bool dataset = false;
  Index volumes = 10, slices = 4;
  auto *ph = sub("phantom", "Synthesize a multi-coil phantom or a phantom dataset");
  ph->add_option("--height", ps.height, "Image rows")->capture_default_str();
  ph->add_option("--width", ps.width, "Image columns (phase-encode axis)")->capture_default_str();
  ph->add_option("--coils", ps.coils, "Receive coils")->capture_default_str();
  ph->add_option("--ellipses", ps.ellipses, "Ellipses per object")->capture_default_str();
  ph->add_option("--noise-std", ps.noise_std, "Complex Gaussian noise std per component")->capture_default_str();
  ph->add_option("--contrast", contrast, "pd or pdfs")->capture_default_str();
  ph->add_flag("--dataset", dataset, "Write a dataset with manifest.json instead of one phantom");
  ph->add_option("--volumes", volumes, "Dataset volumes")->capture_default_str();
  ph->add_option("--slices", slices, "Dataset slices per volume")->capture_default_str();

  // mask
  Index mask_width = 0;
  int accel = 4;
  double center_fraction = 0.08;
  std::string family = "random";
  auto *mk = sub("mask", "Generate a Cartesian column mask");
  mk->add_option("--width", mask_width, "Phase-encode columns")->required();
  mk->add_option("--accel", accel, "Acceleration factor R")->capture_default_str();
  mk->add_option("--center-fraction", center_fraction, "Fully sampled central fraction")->capture_default_str();
  mk->add_option("--family", family, "random or equispaced")
    ->check(CLI::IsMember({"random", "equispaced"}))
    ->capture_default_str();

  // shared inputs
  fs::path kspace_in, mask_in, kernel_in, checkpoint_in;
  int kernel_accel = 0, source_lines = 4, readout_taps = 5;
  std::optional<double> ridge;
  auto add_inputs = [&](CLI::App *a, bool kernel_opt) {
    a->add_option("--kspace", kspace_in, "Multi-coil k-space CFL (N, H, W); masked on read")->required();
    a->add_option("--mask", mask_in, "Mask JSON")->required();
    if (kernel_opt) { a->add_option("--kernel", kernel_in, "Kernel CFL with JSON sidecar; calibrated from the ACS if absent"); }
  };
  auto add_geometry = [&](CLI::App *a) {
    a->add_option("--kernel-accel", kernel_accel, "Kernel stride R' (0: the mask's acceleration)")->capture_default_str();
    a->add_option("--source-lines", source_lines, "Source lines per kernel")->capture_default_str();
    a->add_option("--readout-taps", readout_taps, "Readout taps per kernel")->capture_default_str();
    a->add_option("--ridge", ridge, "Ridge weight (default 1e-6 * ||A||_F^2 / columns)");
  };

  auto *gc = sub("grappa-calib", "Calibrate a GRAPPA kernel from the ACS region");
  add_inputs(gc, false);
  add_geometry(gc);
  auto *gr = sub("grappa-recon", "GRAPPA reconstruction followed by RSS");
  add_inputs(gr, true);
  add_geometry(gr);
  auto *zf = sub("zf-recon", "Zero-filled RSS reconstruction");
  add_inputs(zf, false);

  CsOptions cs;
  double map_threshold = 0.05;
  auto *csr = sub("cs-recon", "Total-variation compressed-sensing reconstruction");
  add_inputs(csr, false);
  csr->add_option("--iterations", cs.iterations, "Gradient iterations")->capture_default_str();
  csr->add_option("--lambda", cs.lambda, "TV weight (default 1e-3 * ||k_under|| / sqrt(HW))");
  csr->add_option("--step", cs.step, "Initial backtracking step")->capture_default_str();
  csr->add_option("--eps", cs.eps, "TV smoothing")->capture_default_str();
  csr->add_option("--map-threshold", map_threshold, "Sensitivity support threshold")->capture_default_str();

  TrainArgs ta;
  auto *tr = sub("train", "Train GrappaNet or the image U-Net ablation on a manifest");
  tr->add_option("--data", ta.data, "Dataset manifest.json")->required();
  tr->add_option("--model", ta.model, "grappanet or image_unet")->capture_default_str();
  tr->add_option("--epochs", ta.cfg.epochs, "Epochs")->capture_default_str();
  tr->add_option("--batch", ta.cfg.batch, "Batch size")->capture_default_str();
  tr->add_option("--lr", ta.cfg.optimizer.lr, "RMSProp learning rate")->capture_default_str();
  tr->add_option("--decay", ta.cfg.optimizer.decay, "RMSProp decay")->capture_default_str();
  tr->add_option("--rms-eps", ta.cfg.optimizer.eps, "RMSProp epsilon")->capture_default_str();
  tr->add_option("--accel", ta.cfg.acceleration, "Training acceleration R")->capture_default_str();
  tr->add_option("--center-fraction", ta.cfg.center_fraction, "Training center fraction")->capture_default_str();
  tr->add_option("--family", ta.family, "random or equispaced")->capture_default_str();
  tr->add_option("--base-channels", ta.base_channels, "U-Net base channels")->capture_default_str();
  tr->add_option("--depth", ta.depth, "U-Net pooling levels")->capture_default_str();
  tr->add_option("--source-lines", ta.source_lines, "Inner GRAPPA source lines")->capture_default_str();
  tr->add_option("--readout-taps", ta.readout_taps, "Inner GRAPPA readout taps")->capture_default_str();
  tr->add_option("--loss-lambda", ta.loss_lambda, "L1 weight in the loss")->capture_default_str();
  tr->add_option("--crop", ta.crop, "Center crop of the output image")->capture_default_str();
  tr->add_flag("--match-params", ta.match_params, "Size the image U-Net to GrappaNet's parameter count");
  tr->add_option("--max-train", ta.max_train, "Cap on training samples (0: all)")->capture_default_str();
  ta.cfg.resample_masks = true;

  auto *nr = sub("net-recon", "Reconstruct with a trained checkpoint");
  add_inputs(nr, true);
  nr->add_option("--checkpoint", checkpoint_in, "Checkpoint directory")->required();

  fs::path pred_in, target_in;
  double data_range = 0;
  auto *ev = sub("eval", "NMSE, PSNR and SSIM of a prediction against a target");
  ev->add_option("--pred", pred_in, "Predicted magnitude CFL (H, W) or (S, H, W)")->required();
  ev->add_option("--target", target_in, "Reference magnitude CFL")->required();
  ev->add_option("--data-range", data_range, "PSNR/SSIM data range (0: max of the target)")->capture_default_str();

  fs::path dither_in;
  double sigma = postprocess::kSigmaNonFatSuppressed;
  Index patch = 11;
  auto *di = sub("dither", "Brightness-adaptive noise dithering");
  di->add_option("--input", dither_in, "Magnitude image CFL")->required();
  di->add_option("--sigma", sigma, "Noise level (0.05 for fat-suppressed images)")->capture_default_str();
  di->add_option("--patch", patch, "Median filter patch size")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (CLI::ParseError const &e) {
    if (e.get_exit_code() == 0) { return app.exit(e); }
    std::cerr << "error[usage]: " << e.what() << "\n";
    return 2;
  }

  CLI::App const *chosen = app.get_subcommands().front();
  try {
    set_deterministic(g.deterministic);
    Outputs out(g);
    write_config(app, *chosen, g);
    auto const name = chosen->get_name();

    auto masked_input = [&] {
      auto const m = read_mask(mask_in);
      return std::make_pair(apply_mask(read_kspace(kspace_in), m), m);
    };
    auto kernel_options = [&](SamplingMask const &m) {
      return calibration(kernel_accel > 0 ? kernel_accel : m.acceleration(), source_lines, readout_taps, ridge);
    };

    if (name == "phantom") {
      ps.seed = g.seed;
      ps.contrast = phantom::parse_contrast(contrast);
      if (dataset) {
        phantom::make_dataset(g.out_dir, volumes, slices, ps, g.seed);
      } else {
        auto const p = phantom::make_phantom(ps);
        auto const k = phantom::simulate_acquisition(p.image, p.maps, full_mask(ps.width), ps.noise_std, g.seed);
        io::write_cfl(out.path("kspace"), cast<Cxf>(k));
        io::write_cfl(out.path("image"), cast<Cxf>(p.image));
        io::write_cfl(out.path("maps"), cast<Cxf>(p.maps.maps));
        out.image("target", rss(ifft2c(k)));
      }
    } else if (name == "mask") {
      auto const m = family == "random" ? make_random_mask(mask_width, accel, center_fraction, g.seed)
                                        : make_equispaced_mask(mask_width, accel, center_fraction, g.seed);
      out.text("mask.json", m.to_json() + "\n");
    } else if (name == "grappa-calib") {
      auto const [k, m] = masked_input();
      auto const g_kernel = grappa::calibrate(grappa::extract_acs(k, m), kernel_options(m));
      write_kernel(out.path("kernel"), g_kernel);
    } else if (name == "grappa-recon") {
      auto const [k, m] = masked_input();
      ComplexTensor filled;
      if (kernel_in.empty()) {
        filled = grappa::reconstruct(k, m, kernel_options(m));
      } else {
        filled = grappa::apply(k, m, read_kernel(kernel_in));
      }
      io::write_cfl(out.path("kspace_recon"), cast<Cxf>(filled));
      out.image("recon", rss(ifft2c(filled)));
    } else if (name == "zf-recon") {
      auto const [k, m] = masked_input();
      out.image("recon", zero_filled_recon(k));
    } else if (name == "cs-recon") {
      auto const [k, m] = masked_input();
      auto const maps = estimate_sensitivities(k, m, map_threshold);
      auto const r = cs_tv_reconstruct(k, m, maps, cs);
      out.image("recon", abs(r.image));
      std::ostringstream trace;
      write_trace_csv(trace, r.trace);
      out.text("trace.csv", trace.str());
    } else if (name == "train") {
      if (g.precision == "f64") {
        run_train<double>(ta, g, out);
      } else {
        run_train<float>(ta, g, out);
      }
    } else if (name == "net-recon") {
      auto const [k, m] = masked_input();
      std::optional<grappa::Kernel> kernel;
      if (!kernel_in.empty()) { kernel = read_kernel(kernel_in); }
      out.image("recon", g.precision == "f64" ? run_net<double>(checkpoint_in, k, m, kernel)
                                              : run_net<float>(checkpoint_in, k, m, kernel));
    } else if (name == "eval") {
      auto const pred = read_slices(pred_in);
      auto const target = read_slices(target_in);
      auto const report = metrics::evaluate(pred, target, data_range);
      std::ostringstream json, csv;
      metrics::write_report_json(json, report);
      metrics::write_report_csv(csv, report);
      out.text("metrics.json", json.str());
      out.text("metrics.csv", csv.str());
      std::cout << json.str();
    } else if (name == "dither") {
      auto const img = read_slices(dither_in).front();
      if (std::all_of(img.data().begin(), img.data().end(), [](double v) { return v == 0.0; })) {
        std::cerr << "warning: all-zero image returned unchanged\n";
      }
      out.image("dithered", postprocess::dither(img, sigma, g.seed, patch));
    }
  } catch (Error const &e) {
    std::cerr << "error[" << category_name(e.category()) << "]: " << e.what() << "\n";
    return exit_code(e.category());
  } catch (fs::filesystem_error const &e) {
    std::cerr << "error[" << category_name(ErrorCategory::Io) << "]: " << e.what() << "\n";
    return exit_code(ErrorCategory::Io);
  } catch (std::exception const &e) {
    std::cerr << "error[internal]: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
