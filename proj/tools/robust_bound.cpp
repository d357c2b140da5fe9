// robust-bound: Bayes errors, vicinity-convolved distributions, and
// certified-robustness bounds for 2-D classification distributions.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rbound/rbound.hpp"

namespace fs = std::filesystem;
using namespace rbound;

namespace {

// --- flat key=value config --------------------------------------------------
// Every long flag can appear as `name=value` (no leading dashes); command-line
// flags override config values because the config only seeds the defaults.

struct FlatConfig {
  std::map<std::string, std::string> kv;

  static FlatConfig load(const fs::path& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open config file: " + path.string());
    FlatConfig cfg;
    std::string line;
    while (std::getline(is, line)) {
      if (line.empty() || line[0] == '#') continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos)
        throw Error("config: expected key=value, got '" + line + "'");
      cfg.kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    return cfg;
  }

  template <class T>
  void seed(const std::string& key, T& value) const {
    const auto it = kv.find(key);
    if (it == kv.end()) return;
    std::istringstream ss(it->second);
    T parsed;
    if constexpr (std::is_same_v<T, std::string>) {
      parsed = it->second;
    } else if constexpr (std::is_same_v<T, bool>) {
      parsed = (it->second == "true" || it->second == "1");
    } else {
      if (!(ss >> parsed))
        throw Error("config: cannot parse " + key + "=" + it->second);
    }
    value = parsed;
  }
};

//! Pull --config out of argv before CLI11 sees anything.
FlatConfig preload_config(int argc, char** argv) {
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--config" && i + 1 < argc) return FlatConfig::load(argv[i + 1]);
    if (a.rfind("--config=", 0) == 0) return FlatConfig::load(a.substr(9));
  }
  return {};
}

// --- shared option bundles ----------------------------------------------------

struct CommonOpts {
  std::string grid;   // "x0,y0,dx,dy,nx,ny"; empty = per-dist default
  double tau_unc = 1e-3;
  std::uint64_t seed = 0;
  std::string out = ".";
  bool dump_intermediates = false;
  double leak_tol = 1e-3;
  std::string config; // consumed by preload; registered so CLI11 accepts it
};

struct DistOpts {
  std::string dist = "moons";
  double sigma = 0.3;
  int quad_points = 64;
  std::vector<double> priors;
  std::vector<double> means;  // flattened x,y pairs
  std::vector<double> sigmas; // per class
  std::string rects;          // "x0,y0,x1,y1;..."
  std::string samples;
  std::string bandwidth = "auto";
};

void add_common(CLI::App* sub, CommonOpts& o, const FlatConfig& cfg) {
  cfg.seed("grid", o.grid);
  cfg.seed("tau-unc", o.tau_unc);
  cfg.seed("seed", o.seed);
  cfg.seed("out", o.out);
  cfg.seed("dump-intermediates", o.dump_intermediates);
  cfg.seed("leak-tol", o.leak_tol);
  sub->add_option("--grid", o.grid, "grid as x0,y0,dx,dy,nx,ny");
  sub->add_option("--tau-unc", o.tau_unc, "uncertainty-region tolerance");
  sub->add_option("--seed", o.seed, "RNG seed");
  sub->add_option("--out", o.out, "output directory");
  sub->add_flag("--dump-intermediates", o.dump_intermediates,
                "write every pipeline intermediate as grid CSV");
  sub->add_option("--leak-tol", o.leak_tol,
                  "border-mass tolerance for convolution");
  sub->add_option("--config", o.config, "flat key=value config file");
}

void add_dist(CLI::App* sub, DistOpts& o, const FlatConfig& cfg) {
  cfg.seed("dist", o.dist);
  cfg.seed("sigma", o.sigma);
  cfg.seed("quad-points", o.quad_points);
  cfg.seed("rects", o.rects);
  cfg.seed("samples", o.samples);
  cfg.seed("bandwidth", o.bandwidth);
  sub->add_option("--dist", o.dist, "moons|mixture|squares|kde");
  sub->add_option("--sigma", o.sigma, "moons smearing std-dev");
  sub->add_option("--quad-points", o.quad_points,
                  "initial arc-quadrature panels");
  sub->add_option("--priors", o.priors, "class priors")->delimiter(',');
  sub->add_option("--means", o.means, "flattened Gaussian means x0,y0,x1,y1,...")
      ->delimiter(',');
  sub->add_option("--sigmas", o.sigmas, "per-class Gaussian std-devs")
      ->delimiter(',');
  sub->add_option("--rects", o.rects,
                  "per-class rectangles x0,y0,x1,y1;... (squares)");
  sub->add_option("--samples", o.samples, "labeled sample CSV (kde)");
  sub->add_option("--bandwidth", o.bandwidth, "kde bandwidth or 'auto'");
}

GridSpec parse_grid(const std::string& s) {
  const auto f = rbound::detail::parse_csv_row(s);
  if (f.size() != 6)
    throw Error("--grid expects 6 fields x0,y0,dx,dy,nx,ny, got '" + s + "'");
  GridSpec spec{f[0], f[1], f[2], f[3], static_cast<int>(f[4]),
                static_cast<int>(f[5])};
  spec.validate();
  return spec;
}

GridSpec squares_default_spec() {
  const double cell = 1.0 / 128;
  return GridSpec{-0.5, -0.5, cell, cell, 320, 256};
}

std::vector<Rect> parse_rects(const std::string& s) {
  std::vector<Rect> rects;
  std::stringstream ss(s);
  std::string part;
  while (std::getline(ss, part, ';')) {
    const auto f = rbound::detail::parse_csv_row(part);
    if (f.size() != 4)
      throw Error("--rects expects x0,y0,x1,y1 per class, got '" + part + "'");
    rects.push_back(Rect{f[0], f[1], f[2], f[3]});
  }
  return rects;
}

struct BuiltDistribution {
  LabeledDensity density;
  GridSpec spec;
};

BuiltDistribution build_distribution(const DistOpts& d, const CommonOpts& c) {
  std::optional<GridSpec> grid;
  if (!c.grid.empty()) grid = parse_grid(c.grid);

  if (d.dist == "moons") {
    const GridSpec spec = grid.value_or(default_moons_spec());
    const MoonsParams params{d.sigma, d.quad_points};
    return {make_moons_density(params, spec, c.leak_tol), spec};
  }
  if (d.dist == "squares") {
    const GridSpec spec = grid.value_or(squares_default_spec());
    std::vector<Rect> rects = d.rects.empty()
                                  ? std::vector<Rect>{{0, 0, 1, 1},
                                                      {0.5, 0, 1.5, 1}}
                                  : parse_rects(d.rects);
    std::vector<double> priors = d.priors;
    if (priors.empty())
      priors.assign(rects.size(), 1.0 / rects.size());
    return {make_uniform_patches(priors, rects, spec), spec};
  }
  if (d.dist == "mixture") {
    if (d.means.empty() || d.means.size() % 2 != 0)
      throw Error("--means must list x,y pairs for every class");
    const std::size_t k = d.means.size() / 2;
    if (d.sigmas.size() != k)
      throw Error("--sigmas must match the number of --means pairs");
    std::vector<double> priors = d.priors;
    if (priors.empty()) priors.assign(k, 1.0 / k);
    std::vector<std::array<double, 2>> means;
    for (std::size_t i = 0; i < k; ++i)
      means.push_back({d.means[2 * i], d.means[2 * i + 1]});
    const GridSpec spec =
        grid.value_or(GridSpec{-6, -6, 12.0 / 512, 12.0 / 512, 512, 512});
    return {make_gaussian_mixture(priors, means, d.sigmas, spec, c.leak_tol),
            spec};
  }
  if (d.dist == "kde") {
    if (d.samples.empty()) throw Error("--samples is required for --dist kde");
    const SampleSet s = read_samples_csv(fs::path(d.samples));
    std::optional<double> bandwidth;
    if (d.bandwidth != "auto") {
      std::istringstream ss(d.bandwidth);
      double h;
      if (!(ss >> h)) throw Error("--bandwidth must be a number or 'auto'");
      bandwidth = h;
    }
    GridSpec spec;
    if (grid) {
      spec = *grid;
    } else {
      double x_lo = s.points[0][0], x_hi = x_lo;
      double y_lo = s.points[0][1], y_hi = y_lo;
      for (const auto& p : s.points) {
        x_lo = std::min(x_lo, p[0]);
        x_hi = std::max(x_hi, p[0]);
        y_lo = std::min(y_lo, p[1]);
        y_hi = std::max(y_hi, p[1]);
      }
      const double mx = std::max(0.5, 0.25 * (x_hi - x_lo));
      const double my = std::max(0.5, 0.25 * (y_hi - y_lo));
      const int n = 512;
      spec = GridSpec{x_lo - mx, y_lo - my, (x_hi - x_lo + 2 * mx) / n,
                      (y_hi - y_lo + 2 * my) / n, n, n};
    }
    return {kde_fit(s, bandwidth, spec), spec};
  }
  throw Error("--dist must be one of moons|mixture|squares|kde, got '" +
              d.dist + "'");
}

std::vector<std::string> provenance(const std::string& command,
                                    const CommonOpts& c, const GridSpec& spec) {
  std::ostringstream ss;
  ss << "robust-bound " << kVersion << ", command: " << command
     << ", seed: " << c.seed << ", grid: " << spec.describe()
     << ", tau_unc: " << c.tau_unc;
  return {ss.str()};
}

fs::path ensure_out_dir(const CommonOpts& c) {
  fs::path dir(c.out);
  fs::create_directories(dir);
  return dir;
}

BoundsOptions bounds_options(const CommonOpts& c, const fs::path& out_dir) {
  BoundsOptions opt;
  opt.tau_unc = c.tau_unc;
  opt.leak_tol = c.leak_tol;
  if (c.dump_intermediates) opt.dump_dir = out_dir / "intermediates";
  return opt;
}

void print_report(const BoundsReport& r) {
  std::printf("epsilon      %.9g\n", r.epsilon);
  std::printf("norm         %s\n", norm_name(r.norm));
  std::printf("tau_unc      %.9g\n", r.tau_unc);
  std::printf("resolution   %dx%d\n", r.nx, r.ny);
  std::printf("beta_D       %.9g\n", r.beta_d);
  std::printf("beta_Dprime  %.9g\n", r.beta_dprime);
  std::printf("zeta_thm3    %.9g\n", r.zeta_thm3);
  std::printf("zeta_cor1    %.9g\n", r.zeta_cor1);
  std::printf("zeta_cor2    %.9g\n", r.zeta_cor2);
  std::printf("zeta_sharp   %.9g\n", r.zeta_sharp);
  std::printf("zeta_D       %.9g\n", r.zeta_d);
  std::printf("ub_zeta_D    %.9g\n", r.ub_zeta_d());
}

std::vector<int> load_or_predict(const std::string& predictions_file,
                                 bool predict_bayes, const DistOpts& dist_opts,
                                 const CommonOpts& common,
                                 const SampleSet& reference) {
  if (predict_bayes) {
    const BuiltDistribution b = build_distribution(dist_opts, common);
    const LabelGrid labels = bayes_classifier(b.density);
    std::vector<int> preds;
    preds.reserve(reference.size());
    for (const auto& p : reference.points)
      preds.push_back(labels.label_at(p[0], p[1]));
    return preds;
  }
  if (predictions_file.empty())
    throw Error("give --predictions FILE or --predict-bayes");
  std::ifstream is(predictions_file);
  if (!is) throw IoError("cannot open predictions: " + predictions_file);
  std::vector<int> preds(reference.size(), -1);
  std::string line;
  bool header_seen = false;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      header_seen = true;
      if (line.find("index") != std::string::npos) continue;
    }
    const auto comma = line.find(',');
    if (comma == std::string::npos)
      throw IoError("predictions: expected 'index,predicted_label', got '" +
                    line + "'");
    const std::size_t idx = std::stoul(line.substr(0, comma));
    if (idx >= preds.size())
      throw Error("predictions: index " + std::to_string(idx) +
                  " out of range for " + std::to_string(preds.size()) +
                  " reference samples");
    preds[idx] = std::stoi(line.substr(comma + 1));
  }
  for (std::size_t n = 0; n < preds.size(); ++n)
    if (preds[n] < 0)
      throw Error("predictions: missing row for index " + std::to_string(n));
  return preds;
}

SampleSet emit_samples(const BuiltDistribution& b, const DistOpts& d,
                       std::size_t n, std::mt19937_64& rng) {
  if (d.dist == "moons")
    return sample_moons(n, MoonsParams{d.sigma, d.quad_points}, rng);
  if (d.dist == "squares" && d.rects.empty()) {
    // exact sampler for the default rectangles
    SampleSet s;
    const std::vector<Rect> rects = {{0, 0, 1, 1}, {0.5, 0, 1.5, 1}};
    for (std::size_t i = 0; i < n; ++i) {
      const int k = sample_index(rng, b.density.priors);
      s.points.push_back({uniform(rng, rects[k].x_lo, rects[k].x_hi),
                          uniform(rng, rects[k].y_lo, rects[k].y_hi)});
      s.labels.push_back(k);
    }
    return s;
  }
  return sample_labeled_density(n, b.density, rng);
}

int run(int argc, char** argv) {
  const FlatConfig cfg = preload_config(argc, argv);
  std::string command;
  for (int i = 0; i < argc; ++i) {
    if (i) command += ' ';
    command += argv[i];
  }

  CLI::App app{"Bayes errors and certified-robustness bounds on 2-D grids"};
  app.require_subcommand(1);

  // density
  auto* density_cmd =
      app.add_subcommand("density", "construct a distribution, write its grids");
  CommonOpts density_common;
  DistOpts density_dist;
  std::size_t density_emit = 0;
  add_common(density_cmd, density_common, cfg);
  add_dist(density_cmd, density_dist, cfg);
  density_cmd->add_option("--emit-samples", density_emit,
                          "also draw N labeled samples");

  // calibrate-moons
  auto* cal_cmd = app.add_subcommand(
      "calibrate-moons", "sweep sigma to match a target Bayes error");
  CommonOpts cal_common;
  double cal_target = 0.0854;
  double cal_min = 0.10, cal_max = 0.35, cal_step = 0.005;
  int cal_quad = 64;
  add_common(cal_cmd, cal_common, cfg);
  cal_cmd->add_option("--target-beta", cal_target, "Bayes error to match");
  cal_cmd->add_option("--sigma-min", cal_min, "sweep start");
  cal_cmd->add_option("--sigma-max", cal_max, "sweep end");
  cal_cmd->add_option("--sigma-step", cal_step, "sweep step");
  cal_cmd->add_option("--quad-points", cal_quad, "arc-quadrature panels");

  // bayes-error
  auto* beta_cmd = app.add_subcommand("bayes-error",
                                      "print the Bayes error of a distribution");
  CommonOpts beta_common;
  DistOpts beta_dist;
  add_common(beta_cmd, beta_common, cfg);
  add_dist(beta_cmd, beta_dist, cfg);

  // convolve
  auto* conv_cmd =
      app.add_subcommand("convolve", "write the vicinity-convolved grids");
  CommonOpts conv_common;
  DistOpts conv_dist;
  std::string conv_norm = "linf";
  double conv_eps = 0.15;
  add_common(conv_cmd, conv_common, cfg);
  add_dist(conv_cmd, conv_dist, cfg);
  conv_cmd->add_option("--norm", conv_norm, "linf|l2");
  conv_cmd->add_option("--eps", conv_eps, "vicinity radius");

  // bounds
  auto* bounds_cmd =
      app.add_subcommand("bounds", "compute every bound for one kernel");
  CommonOpts bounds_common;
  DistOpts bounds_dist;
  std::string bounds_norm = "linf";
  double bounds_eps = 0.15;
  add_common(bounds_cmd, bounds_common, cfg);
  add_dist(bounds_cmd, bounds_dist, cfg);
  bounds_cmd->add_option("--norm", bounds_norm, "linf|l2");
  bounds_cmd->add_option("--eps", bounds_eps, "vicinity radius");

  // sweep
  auto* sweep_cmd =
      app.add_subcommand("sweep", "bounds across an epsilon list, CSV out");
  CommonOpts sweep_common;
  DistOpts sweep_dist;
  std::string sweep_norm = "linf";
  std::vector<double> sweep_eps;
  add_common(sweep_cmd, sweep_common, cfg);
  add_dist(sweep_cmd, sweep_dist, cfg);
  sweep_cmd->add_option("--norm", sweep_norm, "linf|l2");
  sweep_cmd->add_option("--eps", sweep_eps, "ascending epsilon list")
      ->delimiter(',');

  // zeta-sharp
  auto* zs_cmd = app.add_subcommand(
      "zeta-sharp", "print the convolved uncertainty mass (Eq.-23 bound)");
  CommonOpts zs_common;
  DistOpts zs_dist;
  std::string zs_norm = "linf";
  double zs_eps = 0.15;
  add_common(zs_cmd, zs_common, cfg);
  add_dist(zs_cmd, zs_dist, cfg);
  zs_cmd->add_option("--norm", zs_norm, "linf|l2");
  zs_cmd->add_option("--eps", zs_eps, "vicinity radius");

  // correctness
  auto* corr_cmd =
      app.add_subcommand("correctness", "appendix sample-based evaluations");
  corr_cmd->require_subcommand(1);

  auto* alg1_cmd = corr_cmd->add_subcommand(
      "alg1", "neighbor correctness, separate test/reference sets");
  CommonOpts alg1_common;
  DistOpts alg1_dist;
  std::string alg1_test, alg1_ref, alg1_preds;
  bool alg1_bayes = false;
  double alg1_theta = 0.15;
  add_common(alg1_cmd, alg1_common, cfg);
  add_dist(alg1_cmd, alg1_dist, cfg);
  alg1_cmd->add_option("--test-samples", alg1_test, "test sample CSV")
      ->required();
  alg1_cmd->add_option("--ref-samples", alg1_ref, "reference sample CSV")
      ->required();
  alg1_cmd->add_option("--predictions", alg1_preds,
                       "index,predicted_label CSV for the reference set");
  alg1_cmd->add_flag("--predict-bayes", alg1_bayes,
                     "predict with the --dist Bayes classifier instead");
  alg1_cmd->add_option("--theta", alg1_theta, "Chebyshev distance threshold");

  auto* alg2_cmd =
      corr_cmd->add_subcommand("alg2", "neighbor correctness, single set");
  CommonOpts alg2_common;
  DistOpts alg2_dist;
  std::string alg2_samples, alg2_preds;
  bool alg2_bayes = false;
  double alg2_theta = 0.15;
  add_common(alg2_cmd, alg2_common, cfg);
  add_dist(alg2_cmd, alg2_dist, cfg);
  alg2_cmd->add_option("--eval-samples", alg2_samples, "sample CSV to evaluate")
      ->required();
  alg2_cmd->add_option("--predictions", alg2_preds,
                       "index,predicted_label CSV");
  alg2_cmd->add_flag("--predict-bayes", alg2_bayes,
                     "predict with the --dist Bayes classifier instead");
  alg2_cmd->add_option("--theta", alg2_theta, "Chebyshev distance threshold");

  auto* prod_cmd = corr_cmd->add_subcommand(
      "product", "Monte-Carlo all-neighbors-correct probability");
  CommonOpts prod_common;
  DistOpts prod_dist;
  std::string prod_norm = "linf";
  double prod_eps = 0.15;
  int prod_n = 1, prod_trials = 10000;
  add_common(prod_cmd, prod_common, cfg);
  add_dist(prod_cmd, prod_dist, cfg);
  prod_cmd->add_option("--norm", prod_norm, "linf|l2");
  prod_cmd->add_option("--eps", prod_eps, "vicinity radius");
  prod_cmd->add_option("--n-samples", prod_n, "neighbors per draw");
  prod_cmd->add_option("--trials", prod_trials, "Monte-Carlo trials");

  // render
  auto* render_cmd =
      app.add_subcommand("render", "SVG heatmap of a grid CSV");
  CommonOpts render_common;
  std::string render_in, render_out;
  HeatmapOptions render_opts;
  double render_vmin = 0.0, render_vmax = 0.0;
  add_common(render_cmd, render_common, cfg);
  render_cmd->add_option("--grid-file", render_in, "input grid CSV")
      ->required();
  render_cmd->add_option("--out-file", render_out, "output SVG path");
  auto* vmin_opt =
      render_cmd->add_option("--vmin", render_vmin, "fixed scale minimum");
  auto* vmax_opt =
      render_cmd->add_option("--vmax", render_vmax, "fixed scale maximum");
  render_cmd->add_option("--max-cells", render_opts.max_cells,
                         "downsample target per axis");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  if (density_cmd->parsed()) {
    const BuiltDistribution b = build_distribution(density_dist, density_common);
    const fs::path dir = ensure_out_dir(density_common);
    const auto prov = provenance(command, density_common, b.spec);
    std::ofstream meta(dir / "density.meta");
    if (!meta) throw IoError("cannot write " + (dir / "density.meta").string());
    for (const auto& c : prov) meta << "# " << c << "\n";
    meta << "classes=" << b.density.num_classes() << "\n";
    for (int k = 0; k < b.density.num_classes(); ++k) {
      const std::string name = "class_" + std::to_string(k) + ".csv";
      write_grid_csv(dir / name, b.density.conditionals[k], prov);
      char buf[64];
      std::snprintf(buf, sizeof(buf), "prior_%d=%.17g", k, b.density.priors[k]);
      meta << buf << "\nconditional_" << k << "=" << name << "\n";
    }
    if (density_emit > 0) {
      auto rng = make_rng(density_common.seed);
      const SampleSet s = emit_samples(b, density_dist, density_emit, rng);
      write_samples_csv(dir / "samples.csv", s, prov);
    }
    std::printf("wrote %d conditional grids to %s\n", b.density.num_classes(),
                dir.string().c_str());
    return 0;
  }

  if (cal_cmd->parsed()) {
    GridSpec spec = cal_common.grid.empty() ? default_moons_spec()
                                            : parse_grid(cal_common.grid);
    const MoonsCalibration cal = calibrate_moons_sigma(
        cal_target, spec, cal_min, cal_max, cal_step, cal_quad);
    const fs::path dir = ensure_out_dir(cal_common);
    const auto prov = provenance(command, cal_common, spec);
    std::ofstream csv(dir / "calibration.csv");
    for (const auto& c : prov) csv << "# " << c << "\n";
    csv << "sigma,beta\n";
    char buf[80];
    for (const auto& [sigma, beta] : cal.table) {
      std::snprintf(buf, sizeof(buf), "%.9g,%.9g\n", sigma, beta);
      csv << buf;
    }
    std::ofstream star(dir / "sigma_star.txt");
    for (const auto& c : prov) star << "# " << c << "\n";
    std::snprintf(buf, sizeof(buf), "%.9g\n", cal.sigma_star);
    star << buf;
    std::printf("sigma_star = %.9g (beta = %.9g, target %.9g)\n",
                cal.sigma_star, cal.beta_star, cal_target);
    return 0;
  }

  if (beta_cmd->parsed()) {
    const BuiltDistribution b = build_distribution(beta_dist, beta_common);
    std::printf("%.9g\n", bayes_error(b.density));
    return 0;
  }

  if (conv_cmd->parsed()) {
    const BuiltDistribution b = build_distribution(conv_dist, conv_common);
    const VicinityKernel k = build_kernel(parse_norm(conv_norm), conv_eps,
                                          b.spec.dx, b.spec.dy);
    const LabeledDensity dprime =
        convolve_distribution(b.density, k, conv_common.leak_tol);
    const fs::path dir = ensure_out_dir(conv_common);
    const auto prov = provenance(command, conv_common, b.spec);
    for (int c = 0; c < dprime.num_classes(); ++c)
      write_grid_csv(dir / ("dprime_class_" + std::to_string(c) + ".csv"),
                     dprime.conditionals[c], prov);
    std::printf("wrote %d convolved grids to %s\n", dprime.num_classes(),
                dir.string().c_str());
    return 0;
  }

  if (bounds_cmd->parsed()) {
    const BuiltDistribution b = build_distribution(bounds_dist, bounds_common);
    const fs::path dir = ensure_out_dir(bounds_common);
    const BoundsReport r = compute_bounds(b.density, parse_norm(bounds_norm),
                                          bounds_eps,
                                          bounds_options(bounds_common, dir));
    print_report(r);
    const BoundsReport reports[] = {r};
    write_sweep_csv(dir / "bounds.csv", reports,
                    provenance(command, bounds_common, b.spec));
    return 0;
  }

  if (sweep_cmd->parsed()) {
    if (sweep_eps.empty()) throw Error("--eps list is required for sweep");
    const BuiltDistribution b = build_distribution(sweep_dist, sweep_common);
    const fs::path dir = ensure_out_dir(sweep_common);
    const auto reports =
        epsilon_sweep(b.density, parse_norm(sweep_norm), sweep_eps,
                      bounds_options(sweep_common, dir));
    write_sweep_csv(dir / "sweep.csv", reports,
                    provenance(command, sweep_common, b.spec));
    std::printf("wrote %zu rows to %s\n", reports.size(),
                (dir / "sweep.csv").string().c_str());
    return 0;
  }

  if (zs_cmd->parsed()) {
    const BuiltDistribution b = build_distribution(zs_dist, zs_common);
    const VicinityKernel k =
        build_kernel(parse_norm(zs_norm), zs_eps, b.spec.dx, b.spec.dy);
    std::printf("%.9g\n",
                zeta_sharp(b.density, k, zs_common.tau_unc, zs_common.leak_tol));
    return 0;
  }

  if (alg1_cmd->parsed()) {
    const SampleSet test = read_samples_csv(fs::path(alg1_test));
    const SampleSet ref = read_samples_csv(fs::path(alg1_ref));
    const auto preds =
        load_or_predict(alg1_preds, alg1_bayes, alg1_dist, alg1_common, ref);
    const NeighborStats r = neighbor_correctness(test, ref, preds, alg1_theta);
    std::printf("alpha               %.9g\n", r.alpha);
    std::printf("alpha_vacuous       %.9g\n", r.alpha_vacuous);
    std::printf("empty_neighborhoods %zu\n", r.empty_neighborhoods);
    return 0;
  }

  if (alg2_cmd->parsed()) {
    const SampleSet s = read_samples_csv(fs::path(alg2_samples));
    const auto preds =
        load_or_predict(alg2_preds, alg2_bayes, alg2_dist, alg2_common, s);
    const NeighborStats r = neighbor_correctness_self(s, preds, alg2_theta);
    std::printf("alpha               %.9g\n", r.alpha);
    std::printf("alpha_vacuous       %.9g\n", r.alpha_vacuous);
    std::printf("empty_neighborhoods %zu\n", r.empty_neighborhoods);
    return 0;
  }

  if (prod_cmd->parsed()) {
    const BuiltDistribution b = build_distribution(prod_dist, prod_common);
    const VicinityKernel k =
        build_kernel(parse_norm(prod_norm), prod_eps, b.spec.dx, b.spec.dy);
    std::printf("%.9g\n", all_correct_probability(b.density, k, prod_n,
                                                  prod_trials,
                                                  prod_common.seed));
    return 0;
  }

  if (render_cmd->parsed()) {
    const Grid2D g = read_grid_csv(fs::path(render_in));
    if (vmin_opt->count() > 0) render_opts.vmin = render_vmin;
    if (vmax_opt->count() > 0) render_opts.vmax = render_vmax;
    fs::path out = render_out.empty()
                       ? ensure_out_dir(render_common) / "heatmap.svg"
                       : fs::path(render_out);
    write_heatmap_svg(out, g, render_opts,
                      provenance(command, render_common, g.spec()));
    std::printf("wrote %s\n", out.string().c_str());
    return 0;
  }

  return 0;
}

} // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const IoError& e) {
    std::fprintf(stderr, "io error: %s\n", e.what());
    return 4;
  } catch (const LeakError& e) {
    std::fprintf(stderr, "numeric failure: %s\n", e.what());
    return 3;
  } catch (const ConvergenceError& e) {
    std::fprintf(stderr, "numeric failure: %s\n", e.what());
    return 3;
  } catch (const DegenerateDensityError& e) {
    std::fprintf(stderr, "numeric failure: %s\n", e.what());
    return 3;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "unexpected error: %s\n", e.what());
    return 1;
  }
}
