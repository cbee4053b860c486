#include "core/evaluation.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <map>
#include <sstream>

#include "core/classifier.hpp"
#include "core/errors.hpp"

namespace gemix {
namespace fs = std::filesystem;
using nlohmann::json;

long long ConfusionMatrix::total() const noexcept {
  long long t = 0;
  for (const auto& row : counts)
    for (auto v : row) t += v;
  return t;
}

long long ConfusionMatrix::row_sum(int t) const {
  long long s = 0;
  for (auto v : counts.at(static_cast<std::size_t>(t))) s += v;
  return s;
}

long long ConfusionMatrix::column_sum(int p) const {
  long long s = 0;
  for (const auto& row : counts) s += row.at(static_cast<std::size_t>(p));
  return s;
}

int decide(std::span<const double> probs) {
  require(!probs.empty(), "empty probability vector");
  int best = 0;
  for (std::size_t j = 1; j < probs.size(); ++j)
    if (probs[j] > probs[static_cast<std::size_t>(best)]) best = static_cast<int>(j);
  return best;
}

ConfusionMatrix confusion_matrix(const std::vector<std::vector<double>>& pred_probs,
                                 const std::vector<int>& true_labels, int classes) {
  require(classes >= 1, "confusion_matrix: classes must be >= 1");
  require(pred_probs.size() == true_labels.size(),
          "confusion_matrix: " + std::to_string(pred_probs.size()) + " predictions for " +
              std::to_string(true_labels.size()) + " labels");
  ConfusionMatrix cm;
  cm.counts.assign(static_cast<std::size_t>(classes),
                   std::vector<long long>(static_cast<std::size_t>(classes), 0));
  for (std::size_t i = 0; i < pred_probs.size(); ++i) {
    const int t = true_labels[i];
    require(t >= 0 && t < classes, "confusion_matrix: true label out of range");
    require(static_cast<int>(pred_probs[i].size()) == classes,
            "confusion_matrix: prediction length disagrees with class count");
    ++cm.counts[static_cast<std::size_t>(t)][static_cast<std::size_t>(decide(pred_probs[i]))];
  }
  return cm;
}

MacroMetrics macro_prf(const ConfusionMatrix& cm) {
  const int k = cm.classes();
  require(k >= 1, "macro_prf: empty confusion matrix");
  if (cm.total() == 0) fail(ErrorCode::invalid_argument, "macro_prf: confusion matrix has no samples");
  MacroMetrics m;
  for (int c = 0; c < k; ++c) {
    const auto tp = static_cast<double>(cm.counts[static_cast<std::size_t>(c)][static_cast<std::size_t>(c)]);
    const auto predicted = static_cast<double>(cm.column_sum(c));
    const auto actual = static_cast<double>(cm.row_sum(c));
    ClassMetrics cls;
    cls.precision = predicted > 0 ? tp / predicted : 0.0;
    cls.recall = actual > 0 ? tp / actual : 0.0;
    const double denom = cls.precision + cls.recall;
    cls.f1 = denom > 0 ? 2.0 * cls.precision * cls.recall / denom : 0.0;
    m.precision += cls.precision;
    m.recall += cls.recall;
    m.per_class.push_back(cls);
  }
  m.precision /= k;
  m.recall /= k;
  // Macro F1 is the harmonic mean of macro precision and macro recall.
  const double denom = m.precision + m.recall;
  m.f1 = denom > 0 ? 2.0 * m.precision * m.recall / denom : 0.0;
  return m;
}

double false_negative_rate(const ConfusionMatrix& cm, int positive) {
  require(positive >= 0 && positive < cm.classes(), "false_negative_rate: positive class out of range");
  const long long row = cm.row_sum(positive);
  if (row == 0)
    fail(ErrorCode::invalid_argument,
         "false_negative_rate: positive class " + std::to_string(positive) + " has no samples");
  const long long tp = cm.counts[static_cast<std::size_t>(positive)][static_cast<std::size_t>(positive)];
  return static_cast<double>(row - tp) / static_cast<double>(row);
}

MetricsReport make_report(std::string setup, std::string backbone, const ConfusionMatrix& cm,
                          int positive_class) {
  const auto m = macro_prf(cm);
  MetricsReport r;
  r.setup = std::move(setup);
  r.backbone = std::move(backbone);
  r.macro_p = m.precision;
  r.macro_r = m.recall;
  r.macro_f1 = m.f1;
  r.per_class = m.per_class;
  r.confusion = cm;
  r.positive_class = positive_class;
  r.fn_rate = false_negative_rate(cm, positive_class);
  return r;
}

void write_report(const MetricsReport& r, const fs::path& path) {
  json per_class = json::array();
  for (const auto& c : r.per_class)
    per_class.push_back({{"precision", c.precision}, {"recall", c.recall}, {"f1", c.f1}});
  const json j = {{"setup", r.setup},
                  {"backbone", r.backbone},
                  {"macro_p", r.macro_p},
                  {"macro_r", r.macro_r},
                  {"macro_f1", r.macro_f1},
                  {"per_class", per_class},
                  {"confusion", r.confusion.counts},
                  {"fn_rate", r.fn_rate},
                  {"positive_class", r.positive_class}};
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::io, "cannot write report " + path.string());
  out << j.dump(2) << '\n';
  if (!out) fail(ErrorCode::io, "short write to " + path.string());
}

MetricsReport read_report(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::missing_artifact, "cannot open report " + path.string());
  MetricsReport r;
  try {
    const json j = json::parse(in);
    r.setup = j.at("setup").get<std::string>();
    r.backbone = j.at("backbone").get<std::string>();
    r.macro_p = j.at("macro_p").get<double>();
    r.macro_r = j.at("macro_r").get<double>();
    r.macro_f1 = j.at("macro_f1").get<double>();
    for (const auto& c : j.at("per_class"))
      r.per_class.push_back({c.at("precision").get<double>(), c.at("recall").get<double>(),
                             c.at("f1").get<double>()});
    r.confusion.counts = j.at("confusion").get<std::vector<std::vector<long long>>>();
    r.fn_rate = j.at("fn_rate").get<double>();
    r.positive_class = j.at("positive_class").get<int>();
  } catch (const json::exception& e) {
    fail(ErrorCode::format, "report schema error in " + path.string() + ": " + e.what());
  }
  const int k = r.confusion.classes();
  bool square = k >= 1 && static_cast<int>(r.per_class.size()) == k;
  for (const auto& row : r.confusion.counts) square = square && static_cast<int>(row.size()) == k;
  if (!square)
    fail(ErrorCode::format, "report schema error in " + path.string() +
                                ": confusion matrix and per-class metrics disagree in size");
  return r;
}

namespace {
std::string fixed3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

int setup_rank(const std::string& name) {
  int rank = 0;
  for (auto tag : kAllSetups) {
    if (to_string(tag) == name) return rank;
    ++rank;
  }
  return rank;
}
}  // namespace

std::string render_table_row(const MetricsReport& r) {
  return r.setup + " " + fixed3(r.macro_p) + " " + fixed3(r.macro_r) + " " + fixed3(r.macro_f1);
}

std::string render_table(const std::vector<MetricsReport>& reports) {
  std::vector<const MetricsReport*> sorted;
  for (const auto& r : reports) sorted.push_back(&r);
  std::stable_sort(sorted.begin(), sorted.end(), [](const auto* a, const auto* b) {
    if (a->backbone != b->backbone) return a->backbone < b->backbone;
    const int ra = setup_rank(a->setup), rb = setup_rank(b->setup);
    if (ra != rb) return ra < rb;
    return a->setup < b->setup;
  });
  std::size_t model_w = 5, setup_w = 5;
  for (const auto* r : sorted) {
    model_w = std::max(model_w, r->backbone.size());
    setup_w = std::max(setup_w, r->setup.size());
  }
  auto pad = [](std::string s, std::size_t w) {
    s.resize(std::max(w, s.size()), ' ');
    return s;
  };
  std::ostringstream out;
  out << pad("Model", model_w) << "  " << pad("Setup", setup_w) << "  P      R      F1\n";
  for (const auto* r : sorted)
    out << pad(r->backbone, model_w) << "  " << pad(r->setup, setup_w) << "  " << fixed3(r->macro_p)
        << "  " << fixed3(r->macro_r) << "  " << fixed3(r->macro_f1) << '\n';
  return out.str();
}

}  // namespace gemix
