#include <algorithm>
#include <filesystem>
#include <map>
#include <set>

#include <gtest/gtest.h>

#include "augsearch/imgdata/class_map.hpp"
#include "augsearch/imgdata/dataset_dir.hpp"
#include "augsearch/imgdata/patching.hpp"
#include "augsearch/imgdata/png_io.hpp"
#include "augsearch/imgdata/splits.hpp"
#include "augsearch/imgdata/synthetic.hpp"
#include "test_util.hpp"

namespace augsearch::imgdata {
namespace {

ClassMask random_mask(Rng& rng, int h, int w, int classes) {
  ClassMask m(h, w);
  for (auto& l : m.labels) l = static_cast<std::uint8_t>(rng.below(classes));
  return m;
}

RgbImage random_image(Rng& rng, int h, int w) {
  RgbImage img(h, w);
  for (auto& p : img.pixels) p = static_cast<std::uint8_t>(rng.below(256));
  return img;
}

TEST(CollapseClasses, TumourGroupMapsToOne) {
  const auto map = ClassMap::default_map();
  for (int raw : {1, 19, 20}) {
    ClassMask m(4, 4, static_cast<std::uint8_t>(raw));
    const auto out = collapse_classes(m, map);
    EXPECT_TRUE(std::all_of(out.labels.begin(), out.labels.end(), [](auto l) { return l == 1; })) << raw;
  }
}

TEST(CollapseClasses, IdentityMapLeavesMaskUnchanged) {
  Rng rng(3);
  const auto mask = random_mask(rng, 9, 7, 6);
  EXPECT_EQ(collapse_classes(mask, ClassMap::identity()), mask);
}

TEST(CollapseClasses, MatchesPerPixelLookup) {
  Rng rng(11);
  const auto map = ClassMap::default_map();
  const auto mask = random_mask(rng, 16, 16, 22);
  const auto out = collapse_classes(mask, map);
  for (int r = 0; r < 16; ++r) {
    for (int c = 0; c < 16; ++c) EXPECT_EQ(out.at(r, c), map.raw_to_grouped.at(mask.at(r, c)));
  }
}

TEST(CollapseClasses, IdempotentUnderGroupedIdentity) {
  Rng rng(5);
  const auto once = collapse_classes(random_mask(rng, 12, 12, 22), ClassMap::default_map());
  EXPECT_EQ(collapse_classes(once, ClassMap::identity()), once);
}

TEST(CollapseClasses, UnmappedIdNamesIdAndPixel) {
  ClassMask m(2, 3, 0);
  m.at(1, 2) = 40;
  try {
    collapse_classes(m, ClassMap::default_map());
    FAIL();
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("raw id 40"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("pixel index 5"), std::string::npos);
  }
}

TEST(ClassMapFile, ShippedDefaultMatchesBuiltIn) {
  const auto loaded = load_class_map(std::string(AUGSEARCH_DATA_DIR) + "/class_map_default.json");
  const auto builtin = ClassMap::default_map();
  EXPECT_EQ(loaded.raw_to_grouped, builtin.raw_to_grouped);
  EXPECT_EQ(loaded.class_names, builtin.class_names);
}

TEST(ClassMapFile, RejectsOutOfRangeGroup) {
  auto j = to_json(ClassMap::default_map());
  j["raw_to_grouped"]["3"] = 6;
  EXPECT_THROW(class_map_from_json(j), std::invalid_argument);
}

std::vector<PixelOrigin> origins(const std::vector<PatchPair>& patches) {
  std::vector<PixelOrigin> out;
  for (const auto& p : patches) out.push_back(p.origin);
  return out;
}

TEST(ExtractPatches, ExactFit) {
  const auto patches = extract_patches(RgbImage(800, 800), ClassMask(800, 800), 800, 800);
  ASSERT_EQ(patches.size(), 1u);
  EXPECT_EQ(patches[0].origin, (PixelOrigin{0, 0}));
}

TEST(ExtractPatches, Tiling) {
  const auto patches = extract_patches(RgbImage(800, 1600), ClassMask(800, 1600), 800, 800);
  EXPECT_EQ(origins(patches), (std::vector<PixelOrigin>{{0, 0}, {0, 800}}));
}

TEST(ExtractPatches, ClampedOffsetsMatchEnumeration) {
  // Hand enumeration: offsets 0, 600 -> 600 clamped to 1000 - 800 = 200.
  const auto patches = extract_patches(RgbImage(1000, 1000), ClassMask(1000, 1000), 800, 600);
  EXPECT_EQ(origins(patches), (std::vector<PixelOrigin>{{0, 0}, {0, 200}, {200, 0}, {200, 200}}));
}

TEST(ExtractPatches, PatchContentCopiedFromSource) {
  Rng rng(1);
  const auto img = random_image(rng, 37, 41);
  const auto mask = random_mask(rng, 37, 41, 6);
  for (const auto& p : extract_patches(img, mask, 16, 7)) {
    for (int r = 0; r < 16; ++r) {
      for (int c = 0; c < 16; ++c) {
        ASSERT_EQ(p.mask.at(r, c), mask.at(p.origin.row + r, p.origin.col + c));
        for (int ch = 0; ch < 3; ++ch) ASSERT_EQ(p.image.at(r, c, ch), img.at(p.origin.row + r, p.origin.col + c, ch));
      }
    }
  }
}

TEST(ExtractPatches, CoverageAndContainmentProperty) {
  Rng rng(21);
  for (int trial = 0; trial < 200; ++trial) {
    const int h = static_cast<int>(rng.uniform_int(8, 90));
    const int w = static_cast<int>(rng.uniform_int(8, 90));
    const int size = static_cast<int>(rng.uniform_int(1, std::min(h, w)));
    const int stride = static_cast<int>(rng.uniform_int(1, size));
    const auto patches = extract_patches(RgbImage(h, w), ClassMask(h, w), size, stride);
    std::vector<int> covered(static_cast<std::size_t>(h) * w, 0);
    for (const auto& p : patches) {
      ASSERT_GE(p.origin.row, 0);
      ASSERT_GE(p.origin.col, 0);
      ASSERT_LE(p.origin.row + size, h);
      ASSERT_LE(p.origin.col + size, w);
      ASSERT_EQ(p.image.height, size);
      ASSERT_EQ(p.mask.width, size);
      for (int r = 0; r < size; ++r) {
        for (int c = 0; c < size; ++c) covered[static_cast<std::size_t>(p.origin.row + r) * w + p.origin.col + c] = 1;
      }
    }
    ASSERT_TRUE(std::all_of(covered.begin(), covered.end(), [](int v) { return v == 1; }))
        << h << "x" << w << " size " << size << " stride " << stride;
  }
}

TEST(ExtractPatches, Errors) {
  EXPECT_THROW(extract_patches(RgbImage(100, 100), ClassMask(100, 100), 800, 400), std::invalid_argument);
  EXPECT_THROW(extract_patches(RgbImage(100, 100), ClassMask(100, 100), 50, 0), std::invalid_argument);
  EXPECT_THROW(extract_patches(RgbImage(100, 100), ClassMask(100, 100), 50, 51), std::invalid_argument);
  EXPECT_THROW(extract_patches(RgbImage(100, 100), ClassMask(50, 100), 50, 50), std::invalid_argument);
}

PatchPair tagged(const std::string& lab, int id) {
  PatchPair p{RgbImage(2, 2), ClassMask(2, 2), "s" + std::to_string(id), lab, {0, 0}};
  return p;
}

TEST(SplitByLab, TestLabGoesToTest) {
  std::vector<PatchPair> patches;
  for (int i = 0; i < 5; ++i) patches.push_back(tagged("E2", i));
  const auto split = split_by_lab(patches, SplitSpec::lab_default());
  EXPECT_TRUE(split.train.empty());
  EXPECT_TRUE(split.val.empty());
  EXPECT_EQ(split.test.size(), 5u);
}

TEST(SplitByLab, EmptyInput) {
  const auto split = split_by_lab({}, SplitSpec::lab_default());
  EXPECT_TRUE(split.train.empty() && split.val.empty() && split.test.empty());
}

TEST(SplitByLab, MixedLabsMatchMembershipOracle) {
  const std::vector<std::string> labs{"OL", "D8", "E2", "A2", "EW", "GM", "BH"};
  Rng rng(8);
  std::vector<PatchPair> patches;
  for (int i = 0; i < 120; ++i) patches.push_back(tagged(labs[rng.below(labs.size())], i));
  const auto spec = SplitSpec::lab_default();
  const auto split = split_by_lab(patches, spec);

  std::map<std::string, std::string> expected;
  for (const auto& p : patches) {
    expected[p.source_slide] = spec.train_labs.count(p.lab_code) ? "train" : spec.val_labs.count(p.lab_code) ? "val" : "test";
  }
  std::multiset<std::string> seen;
  for (const auto& [set, name] : {std::pair{&split.train, "train"}, {&split.val, "val"}, {&split.test, "test"}}) {
    for (const auto& p : *set) {
      EXPECT_EQ(expected.at(p.source_slide), name);
      seen.insert(p.source_slide);
    }
  }
  // Reconstruction: the three outputs are a permutation of the input.
  std::multiset<std::string> input;
  for (const auto& p : patches) input.insert(p.source_slide);
  EXPECT_EQ(seen, input);
}

TEST(SplitByLab, UnassignedLabsListed) {
  try {
    split_by_lab({tagged("ZZ", 0), tagged("OL", 1), tagged("QQ", 2)}, SplitSpec::lab_default());
    FAIL();
  } catch (const std::invalid_argument& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("QQ"), std::string::npos);
    EXPECT_NE(msg.find("ZZ"), std::string::npos);
  }
}

TEST(SplitByLab, OverlappingSpecRejected) {
  SplitSpec spec{{"A"}, {"A"}, {"B"}};
  EXPECT_THROW(split_by_lab({}, spec), std::invalid_argument);
}

TEST(PixelDistribution, SingleClass) {
  std::vector<ClassMask> masks{ClassMask(5, 5, 1)};
  EXPECT_EQ(pixel_class_distribution(masks, 6), (std::vector<double>{0, 1, 0, 0, 0, 0}));
}

TEST(PixelDistribution, TwoHalves) {
  std::vector<ClassMask> masks{ClassMask(4, 4, 0), ClassMask(4, 4, 1)};
  EXPECT_EQ(pixel_class_distribution(masks, 6), (std::vector<double>{0.5, 0.5, 0, 0, 0, 0}));
}

TEST(PixelDistribution, MatchesHistogramOracle) {
  Rng rng(4);
  std::vector<ClassMask> masks;
  for (int i = 0; i < 7; ++i) masks.push_back(random_mask(rng, 5 + i, 9, 6));
  std::vector<double> hist(6, 0.0);
  double total = 0;
  for (const auto& m : masks) {
    for (int r = 0; r < m.height; ++r) {
      for (int c = 0; c < m.width; ++c) {
        hist[m.at(r, c)] += 1;
        total += 1;
      }
    }
  }
  const auto dist = pixel_class_distribution(masks, 6);
  double sum = 0;
  for (int c = 0; c < 6; ++c) {
    EXPECT_NEAR(dist[c], hist[c] / total, 1e-12);
    sum += dist[c];
  }
  EXPECT_NEAR(sum, 1.0, 1e-9);
}

TEST(PixelDistribution, Errors) {
  EXPECT_THROW(pixel_class_distribution(std::vector<ClassMask>{}, 6), std::invalid_argument);
  EXPECT_THROW(pixel_class_distribution(std::vector<ClassMask>{ClassMask(2, 2, 7)}, 6), std::invalid_argument);
}

TEST(Synthetic, DeterministicPerSeed) {
  SyntheticConfig cfg;
  cfg.num_images = 6;
  cfg.image_size = 48;
  cfg.seed = 77;
  const auto a = generate_synthetic_dataset(cfg);
  const auto b = generate_synthetic_dataset(cfg);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].image, b[i].image);
    EXPECT_EQ(a[i].mask, b[i].mask);
    EXPECT_EQ(a[i].source_slide, b[i].source_slide);
  }
}

TEST(Synthetic, DifferentSeedsDiffer) {
  SyntheticConfig cfg;
  cfg.num_images = 2;
  cfg.image_size = 32;
  std::set<std::vector<std::uint8_t>> distinct;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    cfg.seed = seed;
    distinct.insert(generate_synthetic_dataset(cfg)[0].image.pixels);
  }
  EXPECT_EQ(distinct.size(), 10u);
}

TEST(Synthetic, NoiselessBlobsAreConstantColour) {
  SyntheticConfig cfg;
  cfg.num_images = 4;
  cfg.image_size = 40;
  cfg.noise_std = 0.0;
  for (const auto& p : generate_synthetic_dataset(cfg)) {
    for (int r = 0; r < p.mask.height; ++r) {
      for (int c = 0; c < p.mask.width; ++c) {
        const auto color = synthetic_class_color(p.mask.at(r, c));
        for (int ch = 0; ch < 3; ++ch) ASSERT_EQ(p.image.at(r, c, ch), color[ch]);
      }
    }
  }
}

TEST(Synthetic, EveryForegroundClassPresentAndFractionsMatchRecount) {
  SyntheticConfig cfg;
  cfg.num_images = 3;
  cfg.image_size = 32;
  cfg.blobs_min = 0;
  cfg.blobs_max = 1;
  cfg.seed = 5;
  const auto data = generate_synthetic_dataset(cfg);
  std::vector<ClassMask> masks;
  for (const auto& p : data) masks.push_back(p.mask);
  const auto dist = pixel_class_distribution(masks, cfg.num_classes);
  std::vector<double> recount(cfg.num_classes, 0.0);
  for (const auto& m : masks) {
    for (auto l : m.labels) recount[l] += 1.0 / (static_cast<double>(m.labels.size()) * masks.size());
  }
  for (int c = 0; c < cfg.num_classes; ++c) {
    EXPECT_NEAR(dist[c], recount[c], 1e-12);
    if (c > 0) EXPECT_GT(dist[c], 0.0) << "class " << c;
  }
}

TEST(Synthetic, ConfigValidation) {
  SyntheticConfig cfg;
  cfg.image_size = 16;
  EXPECT_THROW(generate_synthetic_dataset(cfg), std::invalid_argument);
  cfg.image_size = 32;
  cfg.num_classes = 1;
  EXPECT_THROW(generate_synthetic_dataset(cfg), std::invalid_argument);
}

TEST(PngIo, RoundTripSyntheticPair) {
  test::TempDir dir;
  SyntheticConfig cfg;
  cfg.num_images = 1;
  cfg.image_size = 33;
  const auto pair = generate_synthetic_dataset(cfg)[0];
  const auto paths = save_pair(pair, dir.path().string());
  const auto back = load_pair(paths.image, paths.mask);
  EXPECT_EQ(back.image, pair.image);
  EXPECT_EQ(back.mask, pair.mask);
}

TEST(PngIo, GrayscaleMaskLabelsPreserved) {
  test::TempDir dir;
  ClassMask mask(7, 11);
  for (std::size_t i = 0; i < mask.labels.size(); ++i) mask.labels[i] = static_cast<std::uint8_t>(i % 6);
  const auto path = (dir.path() / "m.png").string();
  save_png_mask(mask, path);
  const auto back = load_png_mask(path);
  ASSERT_EQ(back.labels.size(), mask.labels.size());
  EXPECT_TRUE(std::equal(back.labels.begin(), back.labels.end(), mask.labels.begin()));
}

TEST(PngIo, DimensionMismatchRejected) {
  test::TempDir dir;
  save_png_rgb(RgbImage(80, 80), (dir.path() / "a_img.png").string());
  save_png_mask(ClassMask(40, 40), (dir.path() / "a_mask.png").string());
  EXPECT_THROW(load_pair((dir.path() / "a_img.png").string(), (dir.path() / "a_mask.png").string()),
               std::invalid_argument);
}

TEST(PngIo, UndecodableRejected) {
  test::TempDir dir;
  const auto path = dir.path() / "junk.png";
  std::ofstream(path) << "not a png";
  EXPECT_THROW(load_png_rgb(path.string()), std::runtime_error);
  EXPECT_THROW(load_png_rgb((dir.path() / "missing.png").string()), std::runtime_error);
}

TEST(PngIo, ColourMaskRejected) {
  test::TempDir dir;
  const auto path = (dir.path() / "rgb.png").string();
  save_png_rgb(RgbImage(4, 4, 3), path);
  EXPECT_THROW(load_png_mask(path), std::runtime_error);
}

TEST(FoldPlan, Singletons) {
  const auto plan = make_fold_plan(10, 10, 1);
  ASSERT_EQ(plan.size(), 10u);
  for (const auto& f : plan) EXPECT_EQ(f.size(), 1u);
}

TEST(FoldPlan, RemainderFolds) {
  // 103 = 10 * 10 + 3: three folds of 11, seven of 10.
  const auto plan = make_fold_plan(103, 10, 9);
  int elevens = 0;
  std::size_t total = 0;
  for (const auto& f : plan) {
    EXPECT_TRUE(f.size() == 10 || f.size() == 11);
    elevens += f.size() == 11;
    total += f.size();
  }
  EXPECT_EQ(elevens, 3);
  EXPECT_EQ(total, 103u);
}

TEST(FoldPlan, PartitionLawProperty) {
  Rng rng(99);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t k = 2 + rng.below(12);
    const std::size_t n = k + rng.below(200);
    const auto plan = make_fold_plan(n, k, rng.next());
    std::vector<int> hits(n, 0);
    std::size_t lo = n, hi = 0;
    for (const auto& f : plan) {
      lo = std::min(lo, f.size());
      hi = std::max(hi, f.size());
      for (auto i : f) ++hits.at(i);
    }
    ASSERT_LE(hi - lo, 1u);
    ASSERT_TRUE(std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; }));
  }
}

TEST(FoldPlan, DeterministicAndComplement) {
  EXPECT_EQ(make_fold_plan(50, 5, 3), make_fold_plan(50, 5, 3));
  EXPECT_NE(make_fold_plan(50, 5, 3), make_fold_plan(50, 5, 4));
  const auto plan = make_fold_plan(23, 4, 0);
  for (std::size_t f = 0; f < plan.size(); ++f) {
    const auto rest = fold_complement(plan, f);
    EXPECT_EQ(rest.size() + plan[f].size(), 23u);
    for (auto i : plan[f]) EXPECT_FALSE(std::binary_search(rest.begin(), rest.end(), i));
  }
}

TEST(FoldPlan, TooManyFolds) {
  EXPECT_THROW(make_fold_plan(3, 4, 0), std::invalid_argument);
  EXPECT_THROW(make_fold_plan(3, 1, 0), std::invalid_argument);
}

TEST(PatchDirectory, PrepareCollapsesPatchesAndSplits) {
  test::TempDir slides, patches;
  std::vector<PatchPair> input;
  for (const auto& [name, lab] : {std::pair{"slideA", "D8"}, {"slideB", "OL"}, {"slideC", "E2"}}) {
    PatchPair p{RgbImage(20, 30, 50), ClassMask(20, 30, 19), name, lab, {0, 0}};
    p.mask.at(0, 0) = 2;
    input.push_back(p);
  }
  write_slide_directory(input, slides.path());
  const auto before = test::snapshot_directory(slides.path());

  PrepareOptions opts;
  opts.patch_size = 16;
  opts.stride = 8;
  const auto summary = prepare_patch_directory(slides.path(), patches.path(), opts);
  // rows {0, 4}, cols {0, 8, 14}: six patches per slide
  EXPECT_EQ(summary.train, 6u);
  EXPECT_EQ(summary.val, 6u);
  EXPECT_EQ(summary.test, 6u);
  EXPECT_TRUE(std::filesystem::exists(patches.path() / "slideA_r4_c14_img.png"));
  EXPECT_EQ(test::snapshot_directory(slides.path()), before);

  const auto split = read_patch_directory(patches.path());
  ASSERT_EQ(split.train.size(), 6u);
  EXPECT_EQ(split.train[0].mask.at(0, 0), 2);
  EXPECT_EQ(split.train[0].mask.at(5, 5), 1);  // raw 19 (angioinvasion) -> tumour
}

}  // namespace
}  // namespace augsearch::imgdata
