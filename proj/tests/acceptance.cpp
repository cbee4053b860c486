// Acceptance suite. Prints one PASS/FAIL line per criterion and exits non-zero
// when any criterion fails. Artifacts of the desk-scale run are kept under
// ./acceptance-run (or $GEMIX_ACCEPTANCE_DIR) for inspection.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "core/cgan.hpp"
#include "core/classifier.hpp"
#include "core/dataset_store.hpp"
#include "core/errors.hpp"
#include "core/evaluation.hpp"
#include "core/label_sampler.hpp"
#include "core/mixers.hpp"
#include "core/pipeline.hpp"
#include "core/run_config.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace gemix;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
};

class Checks {
 public:
  void expect(bool ok, const std::string& what) {
    if (!ok) failures_.push_back(what);
  }
  bool ok() const { return failures_.empty(); }
  std::string failures() const {
    std::string s;
    for (const auto& f : failures_) s += (s.empty() ? "" : "; ") + f;
    return s;
  }

 private:
  std::vector<std::string> failures_;
};

std::string fmt(const char* pattern, double a, double b = 0, double c = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, pattern, a, b, c);
  return buf;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

Outcome timed(const std::function<Outcome()>& body) {
  const auto t0 = Clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o.pass = false;
    o.detail = std::string("exception: ") + e.what();
  }
  o.seconds = seconds_since(t0);
  return o;
}

void progress(const std::string& line) { std::cerr << "[acceptance] " << line << std::endl; }

// ---------------------------------------------------------------------------

Outcome sampler_statistics() {
  Checks c;
  const int n = 100000;
  std::ostringstream detail;

  Rng dir_rng = Rng::derive(1, stream::soft_labels);
  const auto theta = build_concentration(0, 3, 2.0, 1.0);
  double m[3] = {0, 0, 0};
  for (int i = 0; i < n; ++i) {
    const auto l = sample_soft_label(theta, dir_rng);
    for (int j = 0; j < 3; ++j) m[j] += l.weights[static_cast<std::size_t>(j)];
  }
  for (double& v : m) v /= n;
  c.expect(std::abs(m[0] - 0.50) <= 0.01 && std::abs(m[1] - 0.25) <= 0.01 && std::abs(m[2] - 0.25) <= 0.01,
           "Dirichlet mean");
  detail << fmt("Dir(2,1,1) mean (%.4f, %.4f, %.4f)", m[0], m[1], m[2]);

  double worst_mean = 0, worst_var = 0;
  for (double alpha : {0.2, 0.5, 1.0, 2.0}) {
    Rng rng = Rng::derive(2, static_cast<std::uint64_t>(alpha * 10));
    double s = 0, s2 = 0;
    for (int i = 0; i < n; ++i) {
      const double lam = sample_mix_coefficient(alpha, rng);
      s += lam;
      s2 += lam * lam;
    }
    const double mean = s / n, var = s2 / n - mean * mean;
    worst_mean = std::max(worst_mean, std::abs(mean - 0.5));
    worst_var = std::max(worst_var, std::abs(var - 1.0 / (4.0 * (2.0 * alpha + 1.0))));
  }
  c.expect(worst_mean <= 0.01, "Beta mean");
  c.expect(worst_var <= 0.005, "Beta variance");
  detail << fmt("; Beta |mean-0.5| <= %.4f, |var-analytic| <= %.4f", worst_mean, worst_var);

  Rng z_rng = Rng::derive(3, stream::latents);
  const int dim = 64;
  std::vector<double> s(dim, 0), s2(dim, 0);
  for (int i = 0; i < n; ++i) {
    const auto z = sample_latent(dim, z_rng);
    for (int d = 0; d < dim; ++d) {
      s[static_cast<std::size_t>(d)] += z.z[static_cast<std::size_t>(d)];
      s2[static_cast<std::size_t>(d)] += static_cast<double>(z.z[static_cast<std::size_t>(d)]) * z.z[static_cast<std::size_t>(d)];
    }
  }
  double zm = 0, zv = 0;
  for (int d = 0; d < dim; ++d) {
    const double mean = s[static_cast<std::size_t>(d)] / n;
    zm = std::max(zm, std::abs(mean));
    zv = std::max(zv, std::abs(s2[static_cast<std::size_t>(d)] / n - mean * mean - 1.0));
  }
  c.expect(zm <= 0.02, "latent mean");
  c.expect(zv <= 0.03, "latent variance");
  Rng a(9), b(9);
  c.expect(sample_latent(dim, a).z == sample_latent(dim, b).z, "latent determinism");
  c.expect(sample_latent(1, a).z.size() == 1, "scalar latent");
  detail << fmt("; latent |mean| <= %.4f, |var-1| <= %.4f", zm, zv);
  return {c.ok(), c.ok() ? detail.str() : c.failures() + " | " + detail.str()};
}

Outcome mixer_oracles() {
  Checks c;
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst_pair = 0, worst_mm = 0, worst_reduce = 0;
  bool exact_one_hot = true;
  for (int trial = 0; trial < 1000; ++trial) {
    const auto xi = testing::random_image(8, 8, 1, rng);
    const auto xj = testing::random_image(8, 8, 1, rng);
    const double lam = u(rng);
    const auto yi = SoftLabel::one_hot(0, 2), yj = SoftLabel::one_hot(1, 2);
    const auto pair = mixup_pair(xi, yi, xj, yj, lam);
    worst_pair = std::max(worst_pair, oracle::max_abs_diff(oracle::pair_mix(xi, xj, lam), pair.image));
    worst_pair = std::max({worst_pair, std::abs(pair.label.weights[0] - lam), std::abs(pair.label.weights[1] - (1 - lam))});

    const int k = 2 + trial % 4;
    std::vector<ImageTensor> imgs;
    for (int j = 0; j < k; ++j) imgs.push_back(testing::random_image(8, 8, 1, rng));
    std::vector<const ImageTensor*> ptrs;
    for (const auto& im : imgs) ptrs.push_back(&im);
    const SoftLabel ell{testing::random_simplex(k, rng)};
    const auto mm = mmixup(ptrs, ell);
    worst_mm = std::max(worst_mm, oracle::max_abs_diff(oracle::weighted_sum(imgs, ell.weights), mm.image));

    const auto reduced = mmixup(std::vector<const ImageTensor*>{&xi, &xj}, SoftLabel{{lam, 1 - lam}});
    for (std::size_t p = 0; p < reduced.image.size(); ++p)
      worst_reduce = std::max(worst_reduce, static_cast<double>(std::abs(reduced.image.values[p] - pair.image.values[p])));
    for (std::size_t j = 0; j < 2; ++j)
      worst_reduce = std::max(worst_reduce, std::abs(reduced.label.weights[j] - pair.label.weights[j]));

    const int hot = trial % k;
    exact_one_hot = exact_one_hot && mmixup(ptrs, SoftLabel::one_hot(hot, k)).image == imgs[static_cast<std::size_t>(hot)];
  }
  c.expect(worst_pair <= 1e-6, "mixup_pair oracle");
  c.expect(worst_mm <= 1e-6, "mmixup oracle");
  c.expect(worst_reduce <= 1e-6, "K=2 reduction");
  c.expect(exact_one_hot, "one-hot identity");
  const std::string detail = fmt("1000 cases: pair err %.2e, mmixup err %.2e, K=2 reduction err %.2e", worst_pair,
                                 worst_mm, worst_reduce) +
                             (exact_one_hot ? ", one-hot exact" : ", one-hot NOT exact");
  return {c.ok(), c.ok() ? detail : c.failures() + " | " + detail};
}

Outcome soft_cross_entropy_checks() {
  Checks c;
  const std::vector<double> p{0.5, 0.25, 0.25};
  const double hand = soft_cross_entropy(p, p);
  c.expect(std::abs(hand - 1.03972) <= 1e-4, "hand value");

  std::mt19937_64 rng(7);
  std::normal_distribution<double> n(0, 2);
  const double eps = 1e-5;
  double worst = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const int k = 2 + trial % 6;
    std::vector<double> z(static_cast<std::size_t>(k));
    for (auto& v : z) v = n(rng);
    const auto t = testing::random_simplex(k, rng);
    const auto g = soft_cross_entropy_logits_grad(z, t);
    for (std::size_t j = 0; j < z.size(); ++j) {
      auto up = z, down = z;
      up[j] += eps;
      down[j] -= eps;
      const double fd = (soft_cross_entropy_logits(up, t) - soft_cross_entropy_logits(down, t)) / (2 * eps);
      worst = std::max(worst, std::abs(fd - g[j]) / std::max({std::abs(fd), std::abs(g[j]), 1e-3}));
    }
  }
  c.expect(worst < 1e-4, "finite-difference gradient");

  int gibbs_ok = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto a = testing::random_simplex(4, rng), t = testing::random_simplex(4, rng);
    gibbs_ok += soft_cross_entropy(a, t) >= entropy(t) - 1e-12;
  }
  c.expect(gibbs_ok == 1000, "Gibbs inequality");
  const std::string detail = fmt("hand %.5f, max rel grad err %.2e, Gibbs %.0f/1000", hand, worst, gibbs_ok);
  return {c.ok(), c.ok() ? detail : c.failures() + " | " + detail};
}

Outcome metrics_oracle() {
  Checks c;
  const std::vector<int> truth{0, 0, 1, 1, 2, 2}, pred{0, 1, 1, 1, 2, 0};
  std::vector<std::vector<double>> probs;
  for (int p : pred) {
    std::vector<double> row(3, 0.1);
    row[static_cast<std::size_t>(p)] = 0.8;
    probs.push_back(row);
  }
  const auto cm = confusion_matrix(probs, truth, 3);
  c.expect(cm.counts == oracle::count_pairs(truth, pred, 3), "hand confusion (enumeration oracle)");
  c.expect(cm.counts == std::vector<std::vector<long long>>{{1, 1, 0}, {0, 2, 0}, {1, 0, 1}}, "hand confusion");
  const auto m = macro_prf(cm);
  c.expect(std::abs(m.precision - 0.7222) <= 1e-3, "macro-P");
  c.expect(std::abs(m.recall - 0.6667) <= 1e-3, "macro-R");
  c.expect(std::abs(m.f1 - 0.6937) <= 1e-3, "macro-F1");

  // Balanced classes: macro recall equals accuracy; FNR complements recall.
  std::mt19937_64 rng(11);
  double worst_acc = 0, worst_fnr = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const int k = 2 + trial % 5, per = 1 + trial % 9;
    std::vector<int> t, pr;
    for (int cls = 0; cls < k; ++cls)
      for (int i = 0; i < per; ++i) {
        t.push_back(cls);
        pr.push_back(static_cast<int>(rng() % static_cast<unsigned>(k)));
      }
    std::vector<std::vector<double>> pp;
    for (int p : pr) {
      std::vector<double> row(static_cast<std::size_t>(k), 0.0);
      row[static_cast<std::size_t>(p)] = 1.0;
      pp.push_back(row);
    }
    const auto bal = confusion_matrix(pp, t, k);
    const auto bm = macro_prf(bal);
    long long hits = 0;
    for (std::size_t i = 0; i < t.size(); ++i) hits += t[i] == pr[i];
    worst_acc = std::max(worst_acc, std::abs(bm.recall - static_cast<double>(hits) / static_cast<double>(t.size())));
    for (int pos = 0; pos < k; ++pos)
      worst_fnr = std::max(worst_fnr, std::abs(false_negative_rate(bal, pos) + bm.per_class[static_cast<std::size_t>(pos)].recall - 1.0));
  }
  // The identities are exact in real arithmetic; allow only double rounding.
  c.expect(worst_acc <= 1e-12, "balanced macro-R == accuracy");
  c.expect(worst_fnr <= 1e-12, "FNR == 1 - recall(positive)");
  c.expect(false_negative_rate(cm, 0) == 0.5, "hand FNR");
  const std::string detail = fmt("P %.4f R %.4f F1 %.4f", m.precision, m.recall, m.f1) +
                             fmt("; |macroR-acc| <= %.1e, |FNR+R-1| <= %.1e over 500 balanced matrices", worst_acc,
                                 worst_fnr);
  return {c.ok(), c.ok() ? detail : c.failures() + " | " + detail};
}

// ---------------------------------------------------------------------------
// Desk-scale run shared by criteria 5, 6 and 8.

struct DeskRun {
  RunConfig config;
  std::optional<Pipeline> pipeline;
  double data_seconds = 0;
  double gan_seconds = 0;
  std::string error;
};

fs::path artifact_root() {
  if (const char* env = std::getenv("GEMIX_ACCEPTANCE_DIR"); env && *env) return env;
  return fs::current_path() / "acceptance-run";
}

Outcome conditional_fidelity(DeskRun& run) {
  Checks c;
  auto& pipe = *run.pipeline;
  const auto& pools = pipe.pools();
  const int k = run.config.data.classes;

  progress("training the oracle classifier on the real train split");
  auto oracle_cfg = run.config.classifier_config();
  oracle_cfg.seed = run.config.seed + 1000;
  const auto oracle = train_classifier(pools.train, pools.val, oracle_cfg).model;

  std::vector<ImageTensor> test_images;
  std::vector<int> test_labels;
  for (const auto& s : pools.test) {
    test_images.push_back(s.image);
    test_labels.push_back(s.label.argmax());
  }
  const auto test_cm = confusion_matrix(oracle.predict(test_images), test_labels, k);
  long long hits = 0;
  for (int i = 0; i < k; ++i) hits += test_cm.counts[i][i];
  const double oracle_acc = static_cast<double>(hits) / static_cast<double>(test_cm.total());
  c.expect(oracle_acc >= 0.98, "oracle accuracy below 0.98");

  const auto ckpt = GanCheckpoint::load(pipe.layout().gan_checkpoint());
  Rng z_rng = Rng::derive(run.config.seed, stream::evaluation_draws);
  std::vector<double> per_class;
  for (int cls = 0; cls < k; ++cls) {
    std::vector<ImageTensor> gen;
    for (int i = 0; i < 500; ++i)
      gen.push_back(ckpt.generate(sample_latent(ckpt.config().latent_dim, z_rng), SoftLabel::one_hot(cls, k)));
    const auto probs = oracle.predict(gen);
    int correct = 0;
    for (const auto& p : probs) correct += decide(p) == cls;
    per_class.push_back(correct / 500.0);
    c.expect(per_class.back() >= 0.80, "class " + std::to_string(cls) + " fidelity below 0.80");
  }
  c.expect(run.gan_seconds <= 7200, "cGAN schedule exceeded 2 h CPU");
  std::ostringstream detail;
  detail << fmt("oracle test acc %.4f; fidelity per class", oracle_acc);
  for (double f : per_class) detail << fmt(" %.3f", f);
  detail << fmt(" (500 draws each); cGAN %d steps in %.0f s", run.config.gan.steps, run.gan_seconds);
  return {c.ok(), c.ok() ? detail.str() : c.failures() + " | " + detail.str()};
}

bool table_matches_schema(const std::string& table, std::size_t expected_rows, std::string& why) {
  std::istringstream in(table);
  std::string header;
  std::getline(in, header);
  std::istringstream hs(header);
  std::vector<std::string> cols;
  for (std::string w; hs >> w;) cols.push_back(w);
  if (cols != std::vector<std::string>{"Model", "Setup", "P", "R", "F1"}) {
    why = "header '" + header + "'";
    return false;
  }
  std::size_t rows = 0;
  std::vector<std::string> order;
  for (std::string line; std::getline(in, line);) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string model, setup, p, r, f, extra;
    ls >> model >> setup >> p >> r >> f;
    if (f.empty() || (ls >> extra)) {
      why = "row '" + line + "'";
      return false;
    }
    for (const auto* v : {&p, &r, &f}) {
      if (v->size() != 5 || (*v)[1] != '.') {
        why = "value '" + *v + "' is not three-decimal";
        return false;
      }
    }
    order.push_back(setup);
    ++rows;
  }
  std::vector<std::string> canonical;
  for (auto tag : kAllSetups) canonical.emplace_back(to_string(tag));
  if (rows != expected_rows || order != canonical) {
    why = "rows out of canonical setup order";
    return false;
  }
  return true;
}

Outcome regime_suite(DeskRun& run) {
  Checks c;
  auto& pipe = *run.pipeline;
  const auto t0 = Clock::now();
  for (auto kind : {AugmentKind::mixup, AugmentKind::mmixup, AugmentKind::gemix}) {
    progress("augment " + std::string(to_string(kind)));
    const auto aug = load_dataset(pipe.augment(kind));
    c.expect(aug.size() == static_cast<std::size_t>(run.config.mixers.count),
             std::string(to_string(kind)) + " size");
  }
  c.expect(pipe.pools().train.size() == 2400, "real train split is not 2400");

  std::map<std::string, MetricsReport> reports;
  for (auto tag : kAllSetups) {
    progress("train-clf + eval " + std::string(to_string(tag)));
    pipe.train_clf(tag);
    const auto r = read_report(pipe.eval(tag));
    const bool valid = r.setup == to_string(tag) && r.confusion.total() == static_cast<long long>(pipe.pools().test.size()) &&
                       r.macro_f1 >= 0 && r.macro_f1 <= 1 && r.fn_rate >= 0 && r.fn_rate <= 1;
    c.expect(valid, std::string(to_string(tag)) + " report invalid");
    reports[r.setup] = r;
  }
  const auto table = pipe.report();
  std::string why;
  c.expect(table_matches_schema(table, 8, why), "table schema: " + why);
  const double real_f1 = reports.count("Real") ? reports["Real"].macro_f1 : 0.0;
  c.expect(real_f1 >= 0.90, "Real macro-F1 below 0.90");
  const double elapsed = seconds_since(t0);
  c.expect(elapsed <= 1800, "suite exceeded 30 min");

  progress("comparison table:\n" + table);
  std::ostringstream detail;
  detail << "8/8 setups reported; Real macro-F1 " << fmt("%.3f", real_f1) << "; F1 by setup:";
  for (auto tag : kAllSetups) {
    const auto it = reports.find(std::string(to_string(tag)));
    if (it != reports.end()) detail << " " << it->first << "=" << fmt("%.3f", it->second.macro_f1);
  }
  detail << fmt("; %.0f s after checkpoint", elapsed);
  return {c.ok(), c.ok() ? detail.str() : c.failures() + " | " + detail.str()};
}

Outcome persistence(DeskRun* run, const fs::path& scratch) {
  Checks c;
  std::ostringstream detail;

  // Dataset: soft-labelled samples with arbitrary float pixels.
  std::mt19937_64 rng(5);
  std::vector<LabeledSample> samples;
  for (int i = 0; i < 200; ++i)
    samples.push_back({testing::random_image(32, 32, 1, rng), SoftLabel{testing::random_simplex(3, rng)},
                       i % 3 == 0 ? Provenance::gemix : Provenance::mixup});
  save_dataset(samples, scratch / "dataset");
  const auto back = load_dataset(scratch / "dataset");
  bool images_exact = back.size() == samples.size();
  double label_err = 0;
  for (std::size_t i = 0; images_exact && i < samples.size(); ++i) {
    images_exact = std::memcmp(back[i].image.values.data(), samples[i].image.values.data(),
                               samples[i].image.size() * sizeof(float)) == 0 &&
                   back[i].provenance == samples[i].provenance;
    for (std::size_t j = 0; j < 3; ++j)
      label_err = std::max(label_err, std::abs(back[i].label.weights[j] - samples[i].label.weights[j]));
  }
  c.expect(images_exact, "dataset images not bit-exact");
  c.expect(label_err <= 1e-6, "dataset labels");
  detail << fmt("dataset 200 samples bit-exact, label err %.1e", label_err);

  // Checkpoint: the trained desk generator when available, else a fresh one.
  GanCheckpoint ckpt = run && fs::exists(run->pipeline->layout().gan_checkpoint())
                           ? GanCheckpoint::load(run->pipeline->layout().gan_checkpoint())
                           : GanCheckpoint(GanConfig{});
  ckpt.save(scratch / "ckpt.gmx");
  const auto reloaded = GanCheckpoint::load(scratch / "ckpt.gmx");
  Rng z_rng(77);
  bool gen_exact = reloaded.step() == ckpt.step() && reloaded.rng_state() == ckpt.rng_state();
  for (int i = 0; i < 50; ++i) {
    const auto z = sample_latent(ckpt.config().latent_dim, z_rng);
    const SoftLabel ell{testing::random_simplex(ckpt.config().classes, rng)};
    const auto a = ckpt.generate(z, ell), b = reloaded.generate(z, ell);
    gen_exact = gen_exact && std::memcmp(a.values.data(), b.values.data(), a.size() * sizeof(float)) == 0;
  }
  c.expect(gen_exact, "generator outputs differ after reload");
  detail << "; checkpoint (step " << ckpt.step() << ") 50 generations bit-exact";

  // Reports: the desk reports when present, else the hand case.
  std::vector<MetricsReport> reports;
  if (run && fs::is_directory(run->pipeline->layout().reports()))
    for (auto tag : kAllSetups)
      if (fs::exists(run->pipeline->layout().report_file(tag)))
        reports.push_back(read_report(run->pipeline->layout().report_file(tag)));
  if (reports.empty())
    reports.push_back(make_report("Real", "small-cnn", ConfusionMatrix{{{1, 1, 0}, {0, 2, 0}, {1, 0, 1}}}, 0));
  double metric_err = 0;
  bool confusion_equal = true;
  for (const auto& r : reports) {
    write_report(r, scratch / "report.json");
    const auto rb = read_report(scratch / "report.json");
    metric_err = std::max({metric_err, std::abs(rb.macro_p - r.macro_p), std::abs(rb.macro_r - r.macro_r),
                           std::abs(rb.macro_f1 - r.macro_f1), std::abs(rb.fn_rate - r.fn_rate)});
    for (std::size_t j = 0; j < r.per_class.size(); ++j)
      metric_err = std::max({metric_err, std::abs(rb.per_class[j].precision - r.per_class[j].precision),
                             std::abs(rb.per_class[j].recall - r.per_class[j].recall),
                             std::abs(rb.per_class[j].f1 - r.per_class[j].f1)});
    confusion_equal = confusion_equal && rb.confusion == r.confusion && rb.setup == r.setup;
  }
  c.expect(metric_err <= 1e-6 && confusion_equal, "report round-trip");
  detail << "; " << reports.size() << fmt(" report(s) metric err %.1e", metric_err);
  return {c.ok(), c.ok() ? detail.str() : c.failures() + " | " + detail.str()};
}

RunConfig determinism_config(const fs::path& out) {
  auto c = RunConfig::desk();
  c.output_dir = out.string();
  c.seed = 4242;
  c.threads = 1;
  c.data.per_class = 90;
  c.data.gan_per_class = 30;
  c.data.clf_per_class = 30;
  c.data.test_per_class = 30;
  c.gan.steps = 60;
  c.mixers.count = 90;
  c.classifier.epochs = 2;
  return c;
}

Outcome determinism(const fs::path& scratch) {
  Checks c;
  for (const char* name : {"first", "second"}) {
    progress(std::string("determinism run ") + name);
    Pipeline p(determinism_config(scratch / name));
    p.gen_data();
    p.train_gan();
    for (auto kind : {AugmentKind::mixup, AugmentKind::mmixup, AugmentKind::gemix}) p.augment(kind);
    for (auto tag : {SetupTag::real, SetupTag::real_mixup, SetupTag::real_gemix, SetupTag::real_mmixup_gemix}) {
      p.train_clf(tag);
      p.eval(tag);
    }
    p.report();
  }
  auto compare = [&](const std::string& rel, const char* what) {
    const auto a = testing::snapshot_tree(scratch / "first" / rel);
    const auto b = testing::snapshot_tree(scratch / "second" / rel);
    c.expect(!a.empty() && a == b, std::string(what) + " differ");
    return a.size();
  };
  const auto n_aug = compare("aug", "augmented datasets");
  compare("gan", "GAN checkpoint / loss log");
  compare("models", "classifier models / epoch logs");
  const auto n_rep = compare("reports", "reports");
  compare("data", "generated data");

  // Re-running one command over existing outputs rewrites identical bytes.
  const auto before = testing::snapshot_tree(scratch / "first" / "aug");
  Pipeline again(determinism_config(scratch / "first"));
  for (auto kind : {AugmentKind::mixup, AugmentKind::mmixup, AugmentKind::gemix}) again.augment(kind);
  c.expect(testing::snapshot_tree(scratch / "first" / "aug") == before, "re-run augment not idempotent");

  std::ostringstream detail;
  detail << "two full runs (seed 4242, 1 thread): " << n_aug << " augmented files, GAN log, models, " << n_rep
         << " report files byte-identical; re-run idempotent";
  return {c.ok(), c.ok() ? detail.str() : c.failures() + " | " + detail.str()};
}

}  // namespace

int main() {
  std::map<int, Outcome> results;
  const std::map<int, std::string> titles{{1, "sampler statistics"},
                                          {2, "mixer oracles"},
                                          {3, "soft cross-entropy"},
                                          {4, "metrics oracle"},
                                          {5, "conditional fidelity (desk scale)"},
                                          {6, "end-to-end regime suite"},
                                          {7, "determinism"},
                                          {8, "persistence round-trips"}};
  auto report_line = [&](int id) {
    const auto& o = results[id];
    std::printf("%s criterion %d: %s [%.1f s] %s\n", o.pass ? "PASS" : "FAIL", id, titles.at(id).c_str(), o.seconds,
                o.detail.c_str());
    std::fflush(stdout);
  };
  auto limit = [&](int id, double max_seconds) {
    auto& o = results[id];
    if (o.seconds > max_seconds) {
      o.pass = false;
      o.detail += fmt(" | runtime %.1f s exceeds %.0f s", o.seconds, max_seconds);
    }
  };

  results[1] = timed(sampler_statistics);
  limit(1, 10);
  results[2] = timed(mixer_oracles);
  limit(2, 10);
  results[3] = timed(soft_cross_entropy_checks);
  limit(3, 5);
  results[4] = timed(metrics_oracle);

  const fs::path root = artifact_root();
  std::error_code ec;
  fs::remove_all(root, ec);
  fs::create_directories(root);

  results[7] = timed([&] { return determinism(root / "determinism"); });

  DeskRun desk;
  desk.config = RunConfig::desk();
  desk.config.output_dir = (root / "desk").string();
  try {
    desk.pipeline.emplace(desk.config, [](std::string_view l) { progress(std::string(l)); });
    auto t0 = Clock::now();
    desk.pipeline->gen_data();
    desk.data_seconds = seconds_since(t0);
    t0 = Clock::now();
    desk.pipeline->train_gan();
    desk.gan_seconds = seconds_since(t0);
  } catch (const std::exception& e) {
    desk.error = e.what();
  }
  const bool desk_ok = desk.error.empty();
  results[5] = desk_ok ? timed([&] { return conditional_fidelity(desk); })
                       : Outcome{false, "desk run failed: " + desk.error, 0};
  results[5].seconds += desk.gan_seconds + desk.data_seconds;
  results[6] = desk_ok ? timed([&] { return regime_suite(desk); }) : Outcome{false, "desk run failed: " + desk.error, 0};
  fs::create_directories(root / "persistence");
  results[8] = timed([&] { return persistence(desk_ok ? &desk : nullptr, root / "persistence"); });

  int passed = 0;
  std::printf("\n");
  for (int id = 1; id <= 8; ++id) {
    report_line(id);
    passed += results[id].pass;
  }
  std::printf("%d/8 acceptance criteria passed\n", passed);
  return passed == 8 ? 0 : 1;
}
