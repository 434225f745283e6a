#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "doctest.h"
#include "spml/dataset.hpp"
#include "spml/errors.hpp"
#include "spml/io.hpp"

using namespace spml;
namespace fs = std::filesystem;

namespace {

constexpr auto P = Obs::Pos;
constexpr auto U = Obs::Unobserved;
constexpr auto N = Obs::Neg;

FullLabels one_row(std::initializer_list<std::uint8_t> y) {
  return FullLabels(1, y.size(), std::vector<std::uint8_t>(y));
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("save and load round trip") {
  TempDir tmp("spml_dataset_rt");
  auto bundle = synthesize_dataset(4, 3, 2, 1.2, 7);
  save_dataset(bundle, tmp.path / "x.bin", tmp.path / "y.csv");
  const auto back = load_dataset(tmp.path / "x.bin", tmp.path / "y.csv");
  CHECK(back.n_examples() == 4);
  CHECK(back.n_classes() == 2);
  CHECK(back.features == bundle.features);
  CHECK(*back.full_labels == *bundle.full_labels);
  CHECK(back.observed_labels == observe_all(*bundle.full_labels));

  // Corrupted labels come back as observed labels without full labels.
  bundle.observed_labels = corrupt_single_positive(*bundle.full_labels, 1);
  bundle.full_labels.reset();
  save_dataset(bundle, tmp.path / "x2.bin", tmp.path / "z.csv");
  const auto observed = load_dataset(tmp.path / "x2.bin", tmp.path / "z.csv");
  CHECK_FALSE(observed.full_labels.has_value());
  CHECK(observed.observed_labels == bundle.observed_labels);
}

TEST_CASE("load errors") {
  TempDir tmp("spml_dataset_err");
  const auto bundle = synthesize_dataset(4, 3, 2, 1.2, 7);
  save_dataset(bundle, tmp.path / "x.bin", tmp.path / "y.csv");
  io::write_text(tmp.path / "five.csv", "1,0\n0,1\n1,1\n1,0\n0,1\n");
  CHECK_THROWS_AS(load_dataset(tmp.path / "x.bin", tmp.path / "five.csv"), DataError);
  io::write_text(tmp.path / "bad.csv", "1,0\n0,2\n1,1\n1,0\n");
  CHECK_THROWS_AS(load_dataset(tmp.path / "x.bin", tmp.path / "bad.csv"), DataError);
  io::write_text(tmp.path / "ragged.csv", "1,0\n0\n1,1\n1,0\n");
  CHECK_THROWS_AS(load_dataset(tmp.path / "x.bin", tmp.path / "ragged.csv"), DataError);
  CHECK_THROWS_AS(load_dataset(tmp.path / "missing.bin", tmp.path / "y.csv"), DataError);

  io::write_text(tmp.path / "x.bin.json", R"({"n": 4, "d": 3, "dtype": "f64", "order": "row-major"})");
  CHECK_THROWS_AS(load_dataset(tmp.path / "x.bin", tmp.path / "y.csv"), DataError);
  io::write_text(tmp.path / "x.bin.json", R"({"n": 4, "d": 5, "dtype": "f32", "order": "row-major"})");
  CHECK_THROWS_AS(load_dataset(tmp.path / "x.bin", tmp.path / "y.csv"), DataError);
  io::write_text(tmp.path / "x.bin.json", "{not json");
  CHECK_THROWS_AS(load_dataset(tmp.path / "x.bin", tmp.path / "y.csv"), DataError);

  FeatureMatrix nan_features(4, 3, 0.0f);
  nan_features(2, 1) = std::nanf("");
  io::write_binary_matrix(tmp.path / "nan.bin", nan_features);
  CHECK_THROWS_AS(load_dataset(tmp.path / "nan.bin", tmp.path / "y.csv"), DataError);
}

TEST_CASE("feature file layout") {
  TempDir tmp("spml_dataset_layout");
  FeatureMatrix x(2, 2, {1.0f, -2.5f, 3.0f, 0.25f});
  io::write_binary_matrix(tmp.path / "x.bin", x);
  CHECK(fs::file_size(tmp.path / "x.bin") == 16);
  std::ifstream in(tmp.path / "x.bin", std::ios::binary);
  float raw[4];
  in.read(reinterpret_cast<char*>(raw), sizeof raw);
  CHECK(raw[1] == -2.5f);
  CHECK(raw[2] == 3.0f);
  const auto side = io::read_text(tmp.path / "x.bin.json");
  CHECK(side.find("\"f32\"") != std::string::npos);
  CHECK(side.find("row-major") != std::string::npos);
}

TEST_CASE("synthetic benchmark data") {
  const auto a = synthesize_dataset(2000, 32, 10, 2.0, 0);
  const auto counts = row_positive_counts(*a.full_labels);
  double mean = 0.0;
  for (double c : counts) {
    CHECK(c >= 1.0);
    mean += c;
  }
  mean /= double(counts.size());
  CHECK(mean >= 1.8);
  CHECK(mean <= 2.2);
  const auto b = synthesize_dataset(2000, 32, 10, 2.0, 0);
  CHECK(*a.full_labels == *b.full_labels);
  CHECK(a.features == b.features);
  CHECK_FALSE(*synthesize_dataset(2000, 32, 10, 2.0, 1).full_labels == *a.full_labels);

  for (double k : {1.2, 3.5, 6.0}) {
    const auto c = synthesize_dataset(1000, 16, 10, k, 3);
    double m = 0.0;
    for (double v : row_positive_counts(*c.full_labels)) m += v;
    m /= 1000.0;
    CHECK(std::abs(m - k) <= 0.1 * k);
  }

  CHECK_THROWS_AS(synthesize_dataset(100, 4, 10, 10.0, 0), ConfigError);
  CHECK_THROWS_AS(synthesize_dataset(100, 4, 10, 0.0, 0), ConfigError);
  CHECK_THROWS_AS(synthesize_dataset(0, 4, 10, 2.0, 0), ConfigError);
}

TEST_CASE("single-positive corruption") {
  SUBCASE("examples") {
    int first = 0;
    for (Seed s = 0; s < 200; ++s) {
      const auto z = corrupt_single_positive(one_row({1, 0, 1}), s);
      CHECK(z(0, 1) == U);
      CHECK(((z(0, 0) == P) ^ (z(0, 2) == P)));
      first += z(0, 0) == P;
    }
    CHECK(first > 0);
    CHECK(first < 200);
    const auto forced = corrupt_single_positive(one_row({0, 1, 0}), 5);
    CHECK(forced == ObservedLabels(1, 3, {U, P, U}));
    CHECK_THROWS_AS(corrupt_single_positive(one_row({0, 0, 0}), 0), DataError);
  }
  SUBCASE("uniform over the row's positives") {
    const auto y = one_row({1, 1, 0, 1, 0});
    std::vector<int> hits(5, 0);
    const int trials = 10000;
    for (int s = 0; s < trials; ++s) {
      const auto z = corrupt_single_positive(y, static_cast<Seed>(s));
      for (std::size_t i = 0; i < 5; ++i) hits[i] += z(0, i) == P;
    }
    const double se = std::sqrt((1.0 / 3) * (2.0 / 3) / trials);
    for (std::size_t i : {0, 1, 3}) CHECK(std::abs(hits[i] / double(trials) - 1.0 / 3) < 5 * se);
    CHECK(hits[2] == 0);
    CHECK(hits[4] == 0);
  }
  SUBCASE("cardinality and consistency") {
    const auto data = synthesize_dataset(500, 8, 8, 3.0, 4);
    const auto z = corrupt_single_positive(*data.full_labels, 9);
    CHECK_NOTHROW(check_consistent(z, *data.full_labels));
    for (std::size_t r = 0; r < z.rows(); ++r) {
      auto row = z.row(r);
      CHECK(std::count(row.begin(), row.end(), P) == 1);
      CHECK(std::count(row.begin(), row.end(), N) == 0);
    }
    CHECK(corrupt_single_positive(*data.full_labels, 9) == z);
  }
}

TEST_CASE("partial corruption") {
  const auto all_neg = corrupt_partial(one_row({1, 0, 1}), PartialMode::OnePosAllNeg, 3);
  CHECK(all_neg(0, 1) == N);
  CHECK(((all_neg(0, 0) == P && all_neg(0, 2) == U) || (all_neg(0, 0) == U && all_neg(0, 2) == P)));
  CHECK(corrupt_partial(one_row({1, 0}), PartialMode::OnePosOneNeg, 1) == ObservedLabels(1, 2, {P, N}));
  CHECK_THROWS_AS(corrupt_partial(one_row({1, 1}), PartialMode::OnePosOneNeg, 1), DataError);
  CHECK_THROWS_AS(corrupt_partial(one_row({0, 0}), PartialMode::OnePosAllNeg, 1), DataError);

  const auto data = synthesize_dataset(300, 8, 8, 2.0, 4);
  for (auto mode : {PartialMode::OnePosOneNeg, PartialMode::OnePosAllNeg}) {
    const auto z = corrupt_partial(*data.full_labels, mode, 2);
    CHECK_NOTHROW(check_consistent(z, *data.full_labels));
    for (std::size_t r = 0; r < z.rows(); ++r) {
      auto row = z.row(r);
      CHECK(std::count(row.begin(), row.end(), P) == 1);
      const auto negs = std::count(row.begin(), row.end(), N);
      if (mode == PartialMode::OnePosOneNeg) CHECK(negs == 1);
    }
  }
  CHECK_THROWS_AS(check_consistent(ObservedLabels(1, 2, {P, U}), one_row({0, 1})), DataError);
  CHECK_THROWS_AS(check_consistent(ObservedLabels(1, 2, {N, P}), one_row({1, 1})), DataError);
}

TEST_CASE("train/validation split") {
  auto data = synthesize_dataset(100, 4, 4, 1.5, 2);
  data.observed_labels = corrupt_single_positive(*data.full_labels, 3);
  // Tag each row by its first feature so we can trace indices.
  for (std::size_t r = 0; r < 100; ++r) data.features(r, 0) = static_cast<float>(r);
  const auto [train, val] = split_train_val(data, 0.2, 8);
  CHECK(train.n_examples() == 80);
  CHECK(val.n_examples() == 20);
  CHECK(val.split_tag == SplitTag::Val);
  REQUIRE(val.full_labels.has_value());
  CHECK(val.observed_labels == observe_all(*val.full_labels));
  std::set<int> ids;
  for (std::size_t r = 0; r < 80; ++r) {
    const int id = static_cast<int>(train.features(r, 0));
    ids.insert(id);
    CHECK(train.observed_labels.row(r)[0] == data.observed_labels.row(id)[0]);
  }
  for (std::size_t r = 0; r < 20; ++r) ids.insert(static_cast<int>(val.features(r, 0)));
  CHECK(ids.size() == 100);

  const auto again = split_train_val(data, 0.2, 8);
  CHECK(again.first.features == train.features);
  CHECK_THROWS_AS(split_train_val(synthesize_dataset(2, 2, 2, 1.2, 0), 0.999, 0), ConfigError);
  CHECK_THROWS_AS(split_train_val(data, 0.0, 0), ConfigError);
}

TEST_CASE("random partition") {
  const auto [a, b] = random_partition(10, 3, 4);
  CHECK(a.size() == 7);
  CHECK(b.size() == 3);
  std::set<std::size_t> all(a.begin(), a.end());
  all.insert(b.begin(), b.end());
  CHECK(all.size() == 10);
  CHECK(std::is_sorted(a.begin(), a.end()));
  CHECK_THROWS_AS(random_partition(3, 4, 0), ConfigError);
}
