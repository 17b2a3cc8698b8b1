#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <string>
#include <vector>

#include "srkocl/data.hpp"

using namespace srkocl;
namespace fs = std::filesystem;

namespace {

// Every example carries a unique id in its first pixel.
Dataset labelled_dataset(std::size_t classes, std::size_t per_class) {
  Dataset ds;
  ds.input_shape = {1, 1, 2};
  ds.num_classes = classes;
  for (std::size_t c = 0; c < classes; ++c) {
    for (std::size_t i = 0; i < per_class; ++i) {
      ds.examples.push_back({{static_cast<float>(ds.examples.size()), static_cast<float>(c)}, c});
    }
  }
  return ds;
}

class TempDir : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("srkocl_data_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path write(const std::string& name, const std::string& bytes) {
    const auto p = dir_ / name;
    std::ofstream(p, std::ios::binary) << bytes;
    return p;
  }

  fs::path dir_;
};

std::string u32(std::uint32_t v) {
  std::string s(4, '\0');
  for (int i = 0; i < 4; ++i) s[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  return s;
}

std::string raw_header(std::uint32_t count, std::uint32_t h, std::uint32_t w, std::uint32_t c, std::uint32_t classes) {
  return "SRKD" + u32(count) + u32(h) + u32(w) + u32(c) + u32(classes);
}

}  // namespace

TEST(Split, TenClassesFiveTasks) {
  const auto bench = split_benchmark(labelled_dataset(10, 10), 5, 2, 3);
  ASSERT_EQ(bench.num_tasks(), 5u);
  std::set<std::size_t> seen;
  for (const auto& t : bench.tasks) {
    ASSERT_EQ(t.class_ids.size(), 2u);
    for (auto c : t.class_ids) EXPECT_TRUE(seen.insert(c).second);
    EXPECT_EQ(t.train.size(), 16u);
    EXPECT_EQ(t.test.size(), 4u);
    std::set<float> train_ids;
    for (const auto& ex : t.train) {
      train_ids.insert(ex.pixels[0]);
      EXPECT_EQ(static_cast<std::size_t>(ex.pixels[1]), t.class_ids[ex.label]);
    }
    for (const auto& ex : t.test) EXPECT_EQ(train_ids.count(ex.pixels[0]), 0u);
  }
  EXPECT_EQ(seen.size(), 10u);
}

TEST(Split, HundredClassesTwentyTasks) {
  const auto bench = split_benchmark(labelled_dataset(100, 5), 20, 5, 8);
  ASSERT_EQ(bench.num_tasks(), 20u);
  std::set<std::size_t> seen;
  for (const auto& t : bench.tasks) {
    EXPECT_EQ(t.class_ids.size(), 5u);
    seen.insert(t.class_ids.begin(), t.class_ids.end());
  }
  EXPECT_EQ(seen.size(), 100u);
}

TEST(Split, SeedDeterminism) {
  const auto ds = labelled_dataset(10, 10);
  const auto a = split_benchmark(ds, 5, 2, 4);
  const auto b = split_benchmark(ds, 5, 2, 4);
  const auto c = split_benchmark(ds, 5, 2, 5);
  bool differs = false;
  for (std::size_t t = 0; t < 5; ++t) {
    EXPECT_EQ(a.tasks[t].class_ids, b.tasks[t].class_ids);
    for (std::size_t i = 0; i < a.tasks[t].train.size(); ++i) {
      EXPECT_EQ(a.tasks[t].train[i].pixels, b.tasks[t].train[i].pixels);
    }
    differs |= a.tasks[t].class_ids != c.tasks[t].class_ids;
  }
  EXPECT_TRUE(differs);
}

TEST(Split, AscendingOrder) {
  const auto bench = split_benchmark(labelled_dataset(6, 5), 3, 2, 1, ClassOrder::ascending);
  EXPECT_EQ(bench.tasks[2].class_ids, (std::vector<std::size_t>{4, 5}));
}

TEST(Split, TooFewClasses) { EXPECT_THROW(split_benchmark(labelled_dataset(4, 5), 3, 2, 0), ValueError); }

TEST(Synthetic, CountsAndShapes) {
  SyntheticSpec s;
  s.num_tasks = 5;
  s.classes_per_task = 2;
  s.samples_per_class = 100;
  const auto bench = synthetic_suite(s);
  std::size_t train = 0;
  for (const auto& t : bench.tasks) {
    train += t.train.size();
    EXPECT_EQ(t.test.size(), 50u);
    for (const auto& ex : t.train) EXPECT_EQ(ex.pixels.size(), 8u * 8u * 3u);
  }
  EXPECT_EQ(train, 1000u);
  EXPECT_EQ(bench.input_shape, (Shape{8, 8, 3}));
}

TEST(Synthetic, SeedDeterminism) {
  SyntheticSpec s;
  s.samples_per_class = 20;
  const auto a = synthetic_suite(s);
  const auto b = synthetic_suite(s);
  s.seed = 1;
  const auto c = synthetic_suite(s);
  EXPECT_EQ(a.tasks[3].train[7].pixels, b.tasks[3].train[7].pixels);
  EXPECT_NE(a.tasks[3].train[7].pixels, c.tasks[3].train[7].pixels);
}

TEST(Synthetic, ZeroNoiseIsSeparableByNearestMean) {
  SyntheticSpec s;
  s.noise = 0.0;
  s.samples_per_class = 20;
  const auto bench = synthetic_suite(s);
  for (const auto& t : bench.tasks) {
    std::vector<std::vector<double>> means(t.num_classes(), std::vector<double>(numel(bench.input_shape), 0.0));
    std::vector<double> counts(t.num_classes(), 0.0);
    for (const auto& ex : t.train) {
      for (std::size_t i = 0; i < ex.pixels.size(); ++i) means[ex.label][i] += ex.pixels[i];
      counts[ex.label] += 1;
    }
    std::size_t correct = 0;
    for (const auto& ex : t.test) {
      std::size_t best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < means.size(); ++c) {
        double d = 0;
        for (std::size_t i = 0; i < ex.pixels.size(); ++i) {
          const double diff = ex.pixels[i] - means[c][i] / counts[c];
          d += diff * diff;
        }
        if (d < best_d) best_d = d, best = c;
      }
      correct += best == ex.label;
    }
    EXPECT_EQ(correct, t.test.size());
  }
}

TEST(Stream, SinglePassInBatches) {
  SyntheticSpec s;
  s.num_tasks = 1;
  s.samples_per_class = 13;
  const auto bench = synthetic_suite(s);
  TaskStream stream(bench.tasks[0], 10);
  EXPECT_EQ(stream.num_batches(), 3u);
  std::vector<std::size_t> sizes;
  while (!stream.done()) sizes.push_back(stream.next().size());
  EXPECT_EQ(sizes, (std::vector<std::size_t>{10, 10, 6}));
}

TEST_F(TempDir, CsvTwoRows) {
  const auto p = write("a.csv", "label,p0,p1,p2\n1,0,128,255\n0,255,0,0\n");
  const auto ds = load_dataset(p, DatasetFormat::csv_labeled);
  ASSERT_EQ(ds.examples.size(), 2u);
  EXPECT_EQ(ds.num_classes, 2u);
  EXPECT_EQ(ds.input_shape, (Shape{1, 1, 3}));
  EXPECT_EQ(ds.examples[0].label, 1u);
  EXPECT_FLOAT_EQ(ds.examples[0].pixels[1], 128.0f / 255.0f);
}

TEST_F(TempDir, CsvUnitRangeKept) {
  const auto p = write("u.csv", "label,p0,p1\n0,0.25,1\n");
  const auto ds = load_dataset(p, DatasetFormat::csv_labeled);
  EXPECT_EQ(ds.examples[0].pixels, (std::vector<float>{0.25f, 1.0f}));
}

TEST_F(TempDir, CsvErrors) {
  EXPECT_THROW(load_dataset(write("h.csv", "klass,p0\n0,1\n"), DatasetFormat::csv_labeled), FormatError);
  EXPECT_THROW(load_dataset(write("c.csv", "label,p0,p1\n0,1\n"), DatasetFormat::csv_labeled), FormatError);
  EXPECT_THROW(load_dataset(write("l.csv", "label,p0\n-1,3\n"), DatasetFormat::csv_labeled), FormatError);
  EXPECT_THROW(load_dataset(write("v.csv", "label,p0\n0,300\n"), DatasetFormat::csv_labeled), FormatError);
  LoadOptions opt;
  opt.num_classes = 2;
  EXPECT_THROW(load_dataset(write("r.csv", "label,p0\n2,3\n"), DatasetFormat::csv_labeled, opt), LabelRangeError);
  EXPECT_THROW(load_dataset(dir_ / "missing.csv", DatasetFormat::csv_labeled), FormatError);
}

TEST_F(TempDir, CsvInputShape) {
  LoadOptions opt;
  opt.input_shape = Shape{2, 1, 2};
  const auto ds = load_dataset(write("s.csv", "label,a,b,c,d\n0,1,2,3,4\n"), DatasetFormat::csv_labeled, opt);
  EXPECT_EQ(ds.input_shape, (Shape{2, 1, 2}));
  opt.input_shape = Shape{3, 1, 1};
  EXPECT_THROW(load_dataset(write("t.csv", "label,a,b\n0,1,2\n"), DatasetFormat::csv_labeled, opt), FormatError);
}

TEST_F(TempDir, RawEmptyIsValid) {
  const auto ds = load_dataset(write("e.bin", raw_header(0, 2, 2, 1, 0)), DatasetFormat::raw_u8_images);
  EXPECT_TRUE(ds.examples.empty());
  EXPECT_EQ(ds.input_shape, (Shape{2, 2, 1}));
}

TEST_F(TempDir, RawTruncatedPayload) {
  const std::string bytes = raw_header(2, 2, 2, 1, 3) + u32(1) + std::string(4, '\x10') + u32(2) + std::string(3, 'a');
  EXPECT_THROW(load_dataset(write("t.bin", bytes), DatasetFormat::raw_u8_images), TruncatedError);
  EXPECT_THROW(load_dataset(write("h.bin", "SRKD" + u32(1)), DatasetFormat::raw_u8_images), TruncatedError);
}

TEST_F(TempDir, RawRejectsBadRecords) {
  EXPECT_THROW(load_dataset(write("m.bin", "XXXX" + u32(0) + u32(1) + u32(1) + u32(1) + u32(1)),
                            DatasetFormat::raw_u8_images),
               FormatError);
  const std::string label = raw_header(1, 1, 1, 1, 2) + u32(5) + "a";
  EXPECT_THROW(load_dataset(write("l.bin", label), DatasetFormat::raw_u8_images), LabelRangeError);
  const std::string trailing = raw_header(1, 1, 1, 1, 2) + u32(1) + "a" + "zz";
  EXPECT_THROW(load_dataset(write("z.bin", trailing), DatasetFormat::raw_u8_images), FormatError);
}

TEST_F(TempDir, RawRoundTrip) {
  Dataset ds;
  ds.input_shape = {2, 1, 2};
  ds.num_classes = 3;
  ds.examples = {{{0.0f, 1.0f, 0.2f, 0.6f}, 2}, {{1.0f, 1.0f, 0.0f, 0.0f}, 0}};
  const auto p = dir_ / "rt.bin";
  save_raw_u8_images(p, ds);
  const auto back = load_dataset(p, DatasetFormat::raw_u8_images);
  ASSERT_EQ(back.examples.size(), 2u);
  EXPECT_EQ(back.examples[0].label, 2u);
  EXPECT_FLOAT_EQ(back.examples[0].pixels[2], 51.0f / 255.0f);
  EXPECT_EQ(back.num_classes, 3u);
}

TEST(Formats, Names) {
  EXPECT_EQ(parse_dataset_format("csv_labeled"), DatasetFormat::csv_labeled);
  EXPECT_EQ(parse_dataset_format("raw_u8_images"), DatasetFormat::raw_u8_images);
  EXPECT_THROW(parse_dataset_format("png"), ValueError);
}
