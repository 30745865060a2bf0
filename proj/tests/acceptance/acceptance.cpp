// Acceptance run: one PASS/FAIL line per criterion on stdout, progress on stderr.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dsgan/cli/commands.hpp"
#include "dsgan/data/pipeline.hpp"
#include "dsgan/data/png_io.hpp"
#include "dsgan/evaluation/report.hpp"
#include "dsgan/metrics/geo_metrics.hpp"
#include "dsgan/models/checkpoint.hpp"
#include "dsgan/models/network.hpp"
#include "dsgan/simd/kernels.hpp"
#include "dsgan/training/losses.hpp"
#include "dsgan/training/trainer.hpp"

using namespace dsgan;
namespace fs = std::filesystem;

namespace {

constexpr double kShapeBudgetS = 1.0;
constexpr double kLocalityBudgetS = 30.0;
constexpr double kOracleBudgetS = 60.0;
constexpr double kGradBudgetS = 60.0;
constexpr double kSmokeBudgetS = 600.0;
constexpr double kOracleTol = 1e-9;
constexpr double kGradRelTol = 1e-3;
constexpr double kClosedFormTol = 1e-6;
constexpr double kSelfChi2Tol = 1e-9;
constexpr double kTvRelBand = 0.5;
constexpr double kPublishedRealTvIsotropic = 5.37e-2;

struct Outcome {
  bool pass = false;
  std::string detail;
};

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

Tensor uniform(Shape4 shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  Tensor t(shape);
  for (double& v : t.values()) v = dist(rng);
  return t;
}

bool all_within(const Tensor& t, double lo, double hi) {
  return std::all_of(t.values().begin(), t.values().end(),
                     [&](double v) { return v >= lo && v <= hi; });
}

// ---------------------------------------------------------------- AC1

Outcome shape_contract() {
  Network g = make_network(default_generator_spec(1, 1), 1);
  Network d = make_network(default_discriminator_spec(1), 2);
  std::mt19937_64 rng(10);
  const Tensor z12 = uniform({1, 1, 12, 12}, rng);
  const Tensor z810 = uniform({1, 1, 8, 10}, rng);

  Stopwatch sw;
  const Tensor x = g.forward(z12);
  const Tensor m = d.forward(x);
  const Tensor x2 = g.forward(z810);
  const double t = sw.seconds();

  std::vector<std::string> bad;
  if (!(x.shape() == Shape4{1, 1, 384, 384})) bad.push_back("G(12x12) -> " + x.shape().str());
  if (!all_within(x, -1.0, 1.0)) bad.push_back("G output outside [-1,1]");
  if (!(m.shape() == Shape4{1, 1, 12, 12})) bad.push_back("D(384x384) -> " + m.shape().str());
  if (!all_within(m, 0.0, 1.0)) bad.push_back("D output outside [0,1]");
  if (!(x2.shape() == Shape4{1, 1, 256, 320})) bad.push_back("G(8x10) -> " + x2.shape().str());

  Outcome o;
  o.detail = bad.empty() ? "shapes and ranges exact" : bad.front();
  o.detail += "; three forwards took " + fmt("%.2f", t) + " s (limit " + fmt("%.0f", kShapeBudgetS) + " s)";
  o.pass = bad.empty() && t < kShapeBudgetS;
  return o;
}

// ---------------------------------------------------------------- AC2

Outcome locality() {
  Stopwatch sw;
  const NetworkSpec spec = default_generator_spec(1, 1);
  const Extent2 bound = receptive_field_bound(spec);
  constexpr std::size_t kNoise = 6, kNets = 4, kSitesPerNet = 5;
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<std::size_t> site(0, kNoise - 1);
  std::uniform_real_distribution<double> value(-1.0, 1.0);

  std::size_t trials = 0, violations = 0, silent = 0, oversize = 0;
  for (std::size_t k = 0; k < kNets; ++k) {
    const Network g = make_network(spec, 200 + k);
    const Tensor z = uniform({1, 1, kNoise, kNoise}, rng);
    const Tensor base = g.forward(z);
    for (std::size_t s = 0; s < kSitesPerNet; ++s, ++trials) {
      const std::size_t r = site(rng), c = site(rng);
      Tensor z2 = z;
      do z2.at(0, 0, r, c) = value(rng);
      while (z2.at(0, 0, r, c) == z.at(0, 0, r, c));
      const Tensor out = g.forward(z2);
      const Window win = dependency_window(spec, kNoise, kNoise, r, c);
      if (static_cast<std::size_t>(win.row_hi - win.row_lo + 1) > bound.h ||
          static_cast<std::size_t>(win.col_hi - win.col_lo + 1) > bound.w)
        ++oversize;
      std::size_t changed_inside = 0;
      for (std::size_t i = 0; i < out.h(); ++i)
        for (std::size_t j = 0; j < out.w(); ++j) {
          if (out.at(0, 0, i, j) == base.at(0, 0, i, j)) continue;
          if (win.contains(static_cast<long>(i), static_cast<long>(j)))
            ++changed_inside;
          else
            ++violations;
        }
      silent += changed_inside == 0;
    }
  }
  const double t = sw.seconds();
  Outcome o;
  o.pass = violations == 0 && oversize == 0 && silent == 0 && t < kLocalityBudgetS;
  o.detail = std::to_string(trials) + " trials on " + std::to_string(kNoise) + "x" + std::to_string(kNoise) +
             " noise, bound " + std::to_string(bound.h) + "x" + std::to_string(bound.w) + ": " +
             std::to_string(violations) + " pixels changed outside the window, " + std::to_string(oversize) +
             " windows over the bound, " + std::to_string(silent) + " perturbations with no effect; " +
             fmt("%.1f", t) + " s (limit " + fmt("%.0f", kLocalityBudgetS) + " s)";
  return o;
}

// ---------------------------------------------------------------- AC3

bool reachable(const BinaryFacies& f, std::size_t from, std::size_t to, bool eight) {
  std::vector<char> seen(f.labels.size(), 0);
  std::deque<std::size_t> queue{from};
  seen[from] = 1;
  const std::uint8_t lab = f.labels[from];
  while (!queue.empty()) {
    const std::size_t p = queue.front();
    queue.pop_front();
    if (p == to) return true;
    const long r = static_cast<long>(p / f.width), c = static_cast<long>(p % f.width);
    for (long dr = -1; dr <= 1; ++dr)
      for (long dc = -1; dc <= 1; ++dc) {
        if ((dr == 0 && dc == 0) || (!eight && dr != 0 && dc != 0)) continue;
        const long nr = r + dr, nc = c + dc;
        if (nr < 0 || nc < 0 || nr >= static_cast<long>(f.height) || nc >= static_cast<long>(f.width)) continue;
        const std::size_t q = static_cast<std::size_t>(nr) * f.width + static_cast<std::size_t>(nc);
        if (!seen[q] && f.labels[q] == lab) {
          seen[q] = 1;
          queue.push_back(q);
        }
      }
  }
  return false;
}

std::string check_connectivity_oracle(std::size_t& compared) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<std::size_t> dim(2, 12);
  std::bernoulli_distribution coin(0.5);
  for (int g = 0; g < 50; ++g) {
    BinaryFacies f;
    f.height = dim(rng);
    f.width = dim(rng);
    f.labels.resize(f.height * f.width);
    for (auto& v : f.labels) v = coin(rng);
    for (Connectivity conn : {Connectivity::four, Connectivity::eight})
      for (int facies : {0, 1})
        for (Axis axis : {Axis::x, Axis::y}) {
          const std::size_t max_lag = (axis == Axis::x ? f.width : f.height) - 1;
          const ConnectivityCurve curve = connectivity_function(f, facies, axis, max_lag, conn);
          for (std::size_t lag = 1; lag <= max_lag; ++lag) {
            std::uint64_t pairs = 0, joined = 0;
            const std::size_t dr = axis == Axis::y ? lag : 0, dc = axis == Axis::x ? lag : 0;
            for (std::size_t r = 0; r + dr < f.height; ++r)
              for (std::size_t c = 0; c + dc < f.width; ++c) {
                if (f(r, c) != facies || f(r + dr, c + dc) != facies) continue;
                ++pairs;
                joined += reachable(f, r * f.width + c, (r + dr) * f.width + c + dc,
                                    conn == Connectivity::eight);
              }
            const auto& got = curve.probabilities[lag - 1];
            const std::string where = "grid " + std::to_string(g) + " facies " + std::to_string(facies) +
                                      " axis " + to_string(axis) + " lag " + std::to_string(lag);
            if (curve.pair_counts[lag - 1] != pairs) return "pair count mismatch at " + where;
            if (pairs == 0) {
              if (got) return "defined probability without pairs at " + where;
              continue;
            }
            if (!got || std::abs(*got - static_cast<double>(joined) / static_cast<double>(pairs)) > kOracleTol)
              return "probability mismatch at " + where;
            ++compared;
          }
        }
  }
  return {};
}

Outcome metric_oracles() {
  Stopwatch sw;
  std::vector<std::string> bad;
  std::size_t compared = 0;
  if (std::string e = check_connectivity_oracle(compared); !e.empty()) bad.push_back(e);

  TextureImage checker(2, 2, ValueSpace::storage);
  checker(0, 1) = checker(1, 0) = 1.0;
  const double tv = total_variation(checker, TvVariant::anisotropic);
  if (std::abs(tv - 1.0) > kOracleTol) bad.push_back("checkerboard TV " + fmt("%.12g", tv));

  std::mt19937_64 rng(4);
  std::vector<double> p(59);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double sum = 0.0;
  for (double& v : p) sum += (v = u(rng));
  for (double& v : p) v /= sum;
  if (std::abs(chi2_distance(p, p)) > kOracleTol) bad.push_back("chi2(p,p) != 0");
  const std::vector<double> e0{1.0, 0.0}, e1{0.0, 1.0};
  if (std::abs(chi2_distance(e0, e1) - 1.0) > kOracleTol) bad.push_back("chi2([1,0],[0,1]) != 1");

  const TextureImage flat(16, 16, ValueSpace::storage, 0.5);
  for (double radius : {1.0, 2.0}) {
    const auto h = lbp_histogram(flat, radius);
    if (h.bins.size() != 256 || std::abs(h.bins[255] - 1.0) > kOracleTol)
      bad.push_back("constant-image LBP mass not in bin 255 at R=" + fmt("%.0f", radius));
  }
  const double t = sw.seconds();
  Outcome o;
  o.pass = bad.empty() && t < kOracleBudgetS;
  o.detail = (bad.empty() ? "connectivity matches BFS oracle on " + std::to_string(compared) +
                                " defined lags of 50 grids, TV/chi2/LBP closed forms hold"
                          : bad.front()) +
             "; " + fmt("%.2f", t) + " s";
  return o;
}

// ---------------------------------------------------------------- AC4

NetworkSpec tiny_generator() {
  GeneratorOptions o;
  o.deconv_filters = {2};
  o.deconv_kernel = 3;
  o.dilated_filters = {};
  o.dilations = {2};
  NetworkSpec s = make_generator_spec(1, 1, o);
  for (auto& l : s.layers) l.batch_norm = true;
  return s;
}

NetworkSpec tiny_discriminator() {
  DiscriminatorOptions o;
  o.filters = {2};
  o.kernel = 3;
  return make_discriminator_spec(1, o);
}

struct Probe {
  std::size_t param, index;
};

std::vector<Probe> pick_weights(const Network& net, std::size_t count, std::mt19937_64& rng) {
  std::vector<std::size_t> trainable;
  for (std::size_t i = 0; i < net.parameters().size(); ++i)
    if (net.parameters()[i].trainable) trainable.push_back(i);
  std::vector<Probe> out;
  while (out.size() < count) {
    const std::size_t p = trainable[rng() % trainable.size()];
    out.push_back({p, static_cast<std::size_t>(rng() % net.parameters()[p].value.size())});
  }
  return out;
}

// Worst relative error between analytic gradients already stored in `net`
// and central differences of `loss`.
double worst_gradient_error(Network& net, const std::vector<Probe>& probes,
                            const std::function<double()>& loss) {
  constexpr double h = 1e-6;
  double worst = 0.0;
  for (const Probe& pr : probes) {
    const double analytic = net.parameters()[pr.param].grad.values()[pr.index];
    double& w = net.parameters()[pr.param].value.values()[pr.index];
    const double w0 = w;
    w = w0 + h;
    const double up = loss();
    w = w0 - h;
    const double down = loss();
    w = w0;
    const double numeric = (up - down) / (2.0 * h);
    const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
    worst = std::max(worst, std::abs(analytic - numeric) / denom);
  }
  return worst;
}

Outcome gradient_check() {
  Stopwatch sw;
  constexpr std::size_t kProbes = 10;
  Network g = make_network(tiny_generator(), 5);
  Network d = make_network(tiny_discriminator(), 6);
  std::mt19937_64 rng(7);
  const Tensor z = uniform({4, 1, 4, 4}, rng);
  const Tensor real = uniform({4, 1, 8, 8}, rng);
  const Tensor fake = g.forward_train(z);

  d.zero_grad();
  const Tensor mr = d.forward_train(real), mf = d.forward_train(fake);
  const DiscriminatorLoss ld = loss_discriminator(mr, mf);
  d.forward_train(real);
  d.backward(ld.grad_real);
  d.forward_train(fake);
  d.backward(ld.grad_fake);
  const double err_d = worst_gradient_error(d, pick_weights(d, kProbes, rng), [&] {
    const Tensor a = d.forward_train(real), b = d.forward_train(fake);
    return loss_discriminator(a, b).value;
  });

  g.zero_grad();
  d.zero_grad();
  const Tensor x = g.forward_train(z);
  const LossTerm lg = loss_generator(d.forward_train(x));
  g.backward(d.backward(lg.grad, false, true), true, false);
  const double err_g = worst_gradient_error(g, pick_weights(g, kProbes, rng), [&] {
    return loss_generator(d.forward_train(g.forward_train(z))).value;
  });

  const double t = sw.seconds();
  Outcome o;
  o.pass = err_d < kGradRelTol && err_g < kGradRelTol && t < kGradBudgetS;
  o.detail = "worst relative error loss_D " + fmt("%.2e", err_d) + ", loss_G " + fmt("%.2e", err_g) +
             " over " + std::to_string(kProbes) + " weights each (limit " + fmt("%.0e", kGradRelTol) + "); " +
             fmt("%.2f", t) + " s";
  return o;
}

// ---------------------------------------------------------------- AC5

Outcome closed_form_losses() {
  const Tensor half({3, 1, 4, 5}, 0.5);
  const double ld = loss_discriminator(half, half).value;
  const double lg = loss_generator(half).value;
  const double ed = std::abs(ld - 2.0 * std::numbers::ln2), eg = std::abs(lg - std::numbers::ln2);
  return {ed < kClosedFormTol && eg < kClosedFormTol,
          "loss_D " + fmt("%.12f", ld) + " (2 ln 2 off by " + fmt("%.1e", ed) + "), loss_G " +
              fmt("%.12f", lg) + " (ln 2 off by " + fmt("%.1e", eg) + ")"};
}

// ---------------------------------------------------------------- AC6

NetworkSpec smoke_generator() {
  GeneratorOptions o;
  o.deconv_filters = {16, 16};
  o.dilated_filters = {16};
  o.dilations = {1, 2};
  return make_generator_spec(1, 1, o);
}

// Downscale equals the generator's upscale, so the probability map has the
// noise grid's size as in the full-scale pair.
NetworkSpec smoke_discriminator() {
  DiscriminatorOptions o;
  o.filters = {16};
  return make_discriminator_spec(1, o);
}

double mean_tv(const std::vector<TextureImage>& imgs) {
  double s = 0.0;
  for (const auto& im : imgs) s += total_variation(im, TvVariant::anisotropic);
  return s / static_cast<double>(imgs.size());
}

// Mean over images and facies of the defined lag-`lag` probabilities.
double mean_connectivity(const std::vector<TextureImage>& imgs, Axis axis, std::size_t lag) {
  double s = 0.0;
  std::size_t n = 0;
  for (const auto& im : imgs) {
    const BinaryFacies f = binarize(im);
    for (int facies : {0, 1}) {
      const auto curve = connectivity_function(f, facies, axis, lag);
      if (const auto& p = curve.probabilities[lag - 1]) {
        s += *p;
        ++n;
      }
    }
  }
  return n ? s / static_cast<double>(n) : 0.0;
}

Outcome training_smoke(const fs::path& work) {
  Stopwatch sw;
  const NetworkSpec gs = smoke_generator();
  std::vector<bool> bn;
  for (const auto& l : gs.layers) bn.push_back(l.batch_norm);
  if (bn != std::vector<bool>{false, false, true, false}) return {false, "unexpected batch-norm layout"};

  auto src = std::make_shared<const SourceImage>(make_toy_texture(ToyKind::stripes, 256, 256, {}, 0));
  TrainConfig c;
  c.seed = 42;
  c.epochs = 5;
  c.minibatches_per_epoch = 100;
  Trainer trainer(c, PatchSampler(src, 64, 43), gs, smoke_discriminator());
  const TrainResult r = train(trainer, TrainOutputs{.on_step = [](const TrainLogRecord& rec) {
                                 if (rec.step % 50 == 0)
                                   std::cerr << "  AC6 step " << rec.step << " loss_G " << rec.loss_g
                                             << " loss_D " << rec.loss_d << "\n";
                               }});
  const double train_s = sw.seconds();

  const std::vector<TextureImage> fake = generate(trainer.generator(), 16, 16, 16, 44);
  for (std::size_t i = 0; i < 4; ++i) write_png(work / ("ac6_sample_" + std::to_string(i) + ".png"), fake[i]);
  PatchSampler real_sampler(src, 64, 45);
  std::vector<TextureImage> real;
  for (int i = 0; i < 16; ++i) real.push_back(real_sampler.sample());

  const double g10 = r.log.at(9).loss_g, g_final = r.log.back().loss_g;
  const double tv_fake = mean_tv(fake), tv_real = mean_tv(real);
  const double tv_rel = std::abs(tv_fake - tv_real) / tv_real;
  const double along = mean_connectivity(fake, Axis::y, 8), across = mean_connectivity(fake, Axis::x, 8);
  const bool a = g_final < g10, b = tv_rel <= kTvRelBand, cc = along > across;
  const double t = sw.seconds();

  Outcome o;
  o.pass = a && b && cc && t < kSmokeBudgetS;
  o.detail = std::string("(a) loss_G ") + fmt("%.4f", g10) + " at iteration 10 -> " + fmt("%.4f", g_final) +
             " at " + std::to_string(r.log.size()) + (a ? " ok" : " NOT lower") + "; (b) TV_a generated " +
             fmt("%.4f", tv_fake) + " vs real " + fmt("%.4f", tv_real) + " (" + fmt("%.0f", 100 * tv_rel) +
             "% off" + (b ? ")" : ", over 50%)") + "; (c) lag-8 connectivity along " + fmt("%.3f", along) +
             " vs across " + fmt("%.3f", across) + (cc ? "" : " NOT greater") + "; training " +
             fmt("%.0f", train_s) + " s, total " + fmt("%.0f", t) + " s";
  return o;
}

// ---------------------------------------------------------------- AC7

Outcome checkpoint_round_trip(const fs::path& work) {
  auto src = std::make_shared<const SourceImage>(make_toy_texture(ToyKind::stripes, 128, 128, {}, 0));
  TrainConfig c;
  c.batch_size = 2;
  c.seed = 8;
  Trainer trainer(c, PatchSampler(src, 64, 9), smoke_generator(), smoke_discriminator());
  for (int i = 0; i < 3; ++i) trainer.step();
  const Checkpoint ck = trainer.checkpoint();
  const fs::path path = work / "ac7.ckpt";
  save_checkpoint(ck, path);
  const Checkpoint back = load_checkpoint(path);

  std::mt19937_64 rng(10);
  const Tensor z = uniform({2, 1, 16, 16}, rng);
  const bool same_g = generator_from_checkpoint(back).forward(z) == trainer.generator().forward(z);
  Network d(back.discriminator);
  restore_network(back, d, "D");
  const Tensor x = uniform({2, 1, 64, 64}, rng);
  const bool same_d = d.forward(x) == trainer.discriminator().forward(x);

  // Freshly initialised default architecture at full width.
  Checkpoint full;
  full.generator = default_generator_spec(1, 1);
  full.discriminator = default_discriminator_spec(1);
  const Network g_full = make_network(full.generator, 11);
  store_network(full, g_full, "G");
  save_checkpoint(full, work / "ac7_full.ckpt");
  const Tensor z6 = uniform({1, 1, 6, 6}, rng);
  const bool same_full =
      generator_from_checkpoint(load_checkpoint(work / "ac7_full.ckpt")).forward(z6) == g_full.forward(z6);

  return {same_g && same_d && same_full && back == ck,
          std::string("trained G ") + (same_g ? "bitwise" : "DIFFERS") + ", trained D " +
              (same_d ? "bitwise" : "DIFFERS") + ", default G " + (same_full ? "bitwise" : "DIFFERS") +
              ", checkpoint fields " + (back == ck ? "equal" : "DIFFER")};
}

// ---------------------------------------------------------------- AC8

Outcome self_identity() {
  auto src = std::make_shared<const SourceImage>(make_toy_texture(ToyKind::channels, 512, 512, {}, 12));
  PatchSampler sampler(src, 128, 13);
  std::vector<TextureImage> s;
  for (int i = 0; i < 8; ++i) s.push_back(sampler.sample());
  MetricConfig cfg;
  cfg.max_lag = 32;
  const MetricsReport rep = evaluate(s, s, cfg);
  double worst = 0.0, worst_per_image = 0.0;
  for (const char* name : {"lbp_r1", "lbp_r2", "hog"}) {
    worst = std::max(worst, rep.chi2_for(name).chi2);
    worst_per_image = std::max(worst_per_image, rep.chi2_for(name).chi2_per_image_mean);
  }
  const bool same_tv = rep.real == rep.synthetic;
  return {worst < kSelfChi2Tol && same_tv,
          "max chi2 over lbp_r1/lbp_r2/hog " + fmt("%.1e", worst) + ", TV statistics " +
              (same_tv ? "identical" : "DIFFER") + " (per-image-mean chi2, reported separately: " +
              fmt("%.2e", worst_per_image) + ")"};
}

// ---------------------------------------------------------------- AC9

int cli(const std::vector<std::string>& args, const fs::path& log) {
  std::ofstream out(log);
  std::ostringstream err;
  const int code = run_cli(args, out, err);
  out << err.str();
  if (code != 0) std::cerr << "  AC9 " << args.front() << " failed: " << err.str();
  return code;
}

Outcome reference_run(const fs::path& work, const std::string& image, std::size_t minibatches,
                      std::size_t eval_count) {
  const fs::path dir = work / "ac9";
  fs::create_directories(dir);
  std::string source = image;
  if (source.empty()) {
    source = (dir / "channels_2500.png").string();
    if (cli({"make-toy-data", "--kind", "channels", "--height", "2500", "--width", "2500", "--seed", "0",
             "--out", source},
            dir / "make_toy_data.log"))
      return {false, "make-toy-data failed"};
  }
  // Full-scale architecture and 384 px patches; batch and iteration count
  // shrunk so the run fits one CPU core and 5 GB of memory.
  const fs::path cfg = dir / "reference.txt";
  std::ofstream(cfg) << "data_source = " << source << "\n"
                     << "batch_size = 2\n"
                     << "epochs = 1\n"
                     << "minibatches_per_epoch = " << minibatches << "\n"
                     << "checkpoint_every = 1\n"
                     << "sample_every = 1\n"
                     << "eval_count = " << eval_count << "\n"
                     << "output_dir = " << (dir / "run").string() << "\n";
  if (cli({"train", "--config", cfg.string()}, dir / "train.log")) return {false, "train failed"};
  if (cli({"evaluate", "--config", (dir / "run" / "run_config.txt").string(), "--checkpoint",
           (dir / "run" / "checkpoint_final.ckpt").string(), "--out", (dir / "eval").string()},
          dir / "evaluate.log"))
    return {false, "evaluate failed"};

  const MetricsReport rep = parse_report(dir / "eval" / "report.json");
  std::vector<std::string> missing;
  for (const char* f : {"report.json", "curves_real.csv", "curves_synthetic.csv", "envelope.csv"})
    if (!fs::exists(dir / "eval" / f)) missing.push_back(f);
  std::ifstream table_in(dir / "evaluate.log");
  const std::string table{std::istreambuf_iterator<char>(table_in), std::istreambuf_iterator<char>()};
  for (const char* row : {"Real", "TV_i", "TV_a", "chi2 lbp_r1", "chi2 lbp_r2", "chi2 hog"})
    if (table.find(row) == std::string::npos) missing.push_back(std::string("table row ") + row);
  if (rep.connectivity.size() != 4) missing.push_back("connectivity facies x axis curves");

  Outcome o;
  o.pass = missing.empty() && rep.real.count == eval_count && rep.synthetic.count == eval_count &&
           rep.image_height == 384;
  o.detail = std::string("reference only; ") + (image.empty() ? "2500x2500 channels toy" : image) + ", " +
             std::to_string(minibatches) + " iterations, " + std::to_string(eval_count) +
             " images per set; real TV_i " + fmt("%.3e", rep.real.tv_isotropic_mean) +
             " (published reference " + fmt("%.2e", kPublishedRealTvIsotropic) + ", non-binding), synthetic TV_i " +
             fmt("%.3e", rep.synthetic.tv_isotropic_mean) + "; report in " + (dir / "eval").string() +
             (missing.empty() ? "" : "; missing " + missing.front());
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria runner"};
  std::string work_dir = "acceptance_work", ac9_image;
  std::vector<int> only;
  std::size_t ac9_iterations = 2, ac9_eval = 10;
  app.add_option("--work-dir", work_dir, "Scratch directory for files written by the run");
  app.add_option("--only", only, "Criteria to run (default: all)")->delimiter(',');
  app.add_option("--ac9-image", ac9_image, "Binary PNG for the reference run (default: channels toy)");
  app.add_option("--ac9-iterations", ac9_iterations, "Training iterations of the reference run");
  app.add_option("--ac9-eval-count", ac9_eval, "Images per set in the reference evaluation");
  CLI11_PARSE(app, argc, argv);

  const fs::path work = fs::absolute(work_dir);
  fs::create_directories(work);
  std::cerr << "kernel set: " << simd::isa_name(simd::active_isa()) << "\n";

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"shape contract", shape_contract},
      {"locality", locality},
      {"metric oracles", metric_oracles},
      {"gradient check", gradient_check},
      {"closed-form losses", closed_form_losses},
      {"training smoke test", [&] { return training_smoke(work); }},
      {"checkpoint round trip", [&] { return checkpoint_round_trip(work); }},
      {"evaluation self-identity", self_identity},
      {"reference run", [&] { return reference_run(work, ac9_image, ac9_iterations, ac9_eval); }},
  };

  const std::set<int> selected(only.begin(), only.end());
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!selected.empty() && !selected.count(id)) continue;
    std::cerr << "running AC" << id << " (" << criteria[i].first << ")\n";
    Stopwatch sw;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::cout << "AC" << id << " " << (o.pass ? "PASS" : "FAIL") << " " << criteria[i].first << " ["
              << fmt("%.1f", sw.seconds()) << " s]: " << o.detail << std::endl;
  }
  std::cout << (failures ? "acceptance: " + std::to_string(failures) + " criterion(s) failed"
                         : std::string("acceptance: all criteria passed"))
            << std::endl;
  return failures ? 1 : 0;
}
