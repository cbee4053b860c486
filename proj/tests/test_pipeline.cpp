#include <doctest.h>

#include <fstream>

#include "core/dataset_store.hpp"
#include "core/errors.hpp"
#include "core/evaluation.hpp"
#include "core/pipeline.hpp"
#include "support.hpp"

using namespace gemix;
namespace fs = std::filesystem;

namespace {

RunConfig tiny_run(const fs::path& out) {
  auto c = RunConfig::desk();
  c.output_dir = out.string();
  c.seed = 11;
  c.data.image_size = 16;
  c.data.per_class = 30;
  c.data.gan_per_class = 10;
  c.data.clf_per_class = 10;
  c.data.test_per_class = 10;
  c.gan.steps = 4;
  c.gan.batch_size = 8;
  c.gan.base_width = 8;
  c.classifier.epochs = 1;
  c.classifier.batch_size = 16;
  c.classifier.base_width = 8;
  c.mixers.count = 30;
  c.features_per_setting = 5;
  return c;
}

}  // namespace

TEST_CASE("pools are balanced and disjoint") {
  testing::TempDir dir("pools");
  Pipeline p(tiny_run(dir.path()));
  p.gen_data();
  const auto& pools = p.pools();
  CHECK(class_histogram(pools.gan, 3) == std::vector<std::size_t>{10, 10, 10});
  CHECK(class_histogram(pools.test, 3) == std::vector<std::size_t>{10, 10, 10});
  CHECK(class_histogram(pools.train, 3) == std::vector<std::size_t>{8, 8, 8});
  CHECK(class_histogram(pools.val, 3) == std::vector<std::size_t>{2, 2, 2});
  CHECK(pools.class_names.size() == 3);

  // Distinct generated images in this set never collide, so pixel buffers identify them.
  std::vector<const ImageTensor*> all;
  for (const auto* pool : {&pools.gan, &pools.train, &pools.val, &pools.test})
    for (const auto& s : *pool) all.push_back(&s.image);
  for (std::size_t i = 0; i < all.size(); ++i)
    for (std::size_t j = i + 1; j < all.size(); ++j) CHECK_FALSE(*all[i] == *all[j]);
}

TEST_CASE("stages produce the fixed layout and name missing prerequisites") {
  testing::TempDir dir("stages");
  std::vector<std::string> lines;
  Pipeline p(tiny_run(dir.path()), [&](std::string_view l) { lines.emplace_back(l); });
  const auto& layout = p.layout();

  try {
    p.augment(AugmentKind::gemix);
    FAIL("gemix without checkpoint");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::missing_artifact);
    CHECK(std::string(e.what()).find("train-gan") != std::string::npos);
  }

  p.gen_data();
  CHECK(fs::is_directory(layout.data() / "real"));
  CHECK_THROWS_AS(p.train_clf(SetupTag::real_gemix), Error);

  p.train_gan();
  CHECK(fs::exists(layout.gan_checkpoint()));
  CHECK(read_gan_log(layout.gan_log()).size() == 4);
  for (auto kind : {AugmentKind::mixup, AugmentKind::mmixup, AugmentKind::gemix}) {
    const auto out = p.augment(kind);
    CHECK(out == layout.augment_dir(kind));
    const auto aug = load_dataset(out);
    CHECK(aug.size() == 30);
    for (const auto& s : aug) CHECK(s.label.on_simplex(1e-6));
  }

  p.train_clf(SetupTag::real_gemix);
  CHECK(fs::exists(layout.model_file(SetupTag::real_gemix)));
  CHECK(fs::exists(layout.epoch_log(SetupTag::real_gemix)));
  const auto report_path = p.eval(SetupTag::real_gemix);
  const auto report = read_report(report_path);
  CHECK(report.setup == "Real+GeMix");
  CHECK(report.backbone == "small-cnn");
  CHECK(report.confusion.total() == 30);

  CHECK_THROWS_AS(p.eval(SetupTag::mixup), Error);
  const auto table = p.report();
  CHECK(table.find("Real+GeMix") != std::string::npos);
  CHECK(fs::exists(layout.table_file()));

  const auto features = p.export_features(SetupTag::real_gemix);
  std::ifstream in(features);
  std::string line;
  int rows = -1;
  while (std::getline(in, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 5 * 4);
  CHECK_FALSE(lines.empty());
}

TEST_CASE("external datasets cannot be regenerated") {
  testing::TempDir dir("external");
  auto c = tiny_run(dir.path());
  c.data.source = (dir / "elsewhere").string();
  Pipeline p(c);
  CHECK_THROWS_AS(p.gen_data(), Error);
}

TEST_CASE("invalid configs are rejected before any work") {
  testing::TempDir dir("invalid");
  auto c = tiny_run(dir / "out");
  c.mixers.a_eq = 0.5;
  CHECK_THROWS_AS(Pipeline{c}, Error);
  CHECK_FALSE(fs::exists(dir / "out"));
}
