#include "helpers.hpp"
#include "rmesn/dataset.hpp"
#include "rmesn/error.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

using namespace rmesn;
namespace fs = std::filesystem;

namespace {

Dataset parse(const std::string& text) {
  std::istringstream in(text);
  return read_dataset(in);
}

std::size_t parse_error_line(const std::string& text) {
  try {
    parse(text);
  } catch (const ParseError& e) {
    return e.line();
  }
  return 0;
}

fs::path temp_file(const std::string& name, const std::string& body) {
  const fs::path p = fs::temp_directory_path() / ("rmesn_test_" + name);
  std::ofstream(p) << body;
  return p;
}

const std::string kDataDir = RMESN_TEST_DATA_DIR;

}  // namespace

TEST_CASE("read_dataset: minimal file") {
  const Dataset ds = parse("# comment\n2 1 2 3\n0 2\n1.5\n-2\n1 3\n0\n1\n2\n");
  CHECK(ds.size() == 2);
  CHECK(ds.feature_dim == 1);
  CHECK(ds.num_classes == 2);
  CHECK(ds.t_max() == 3);
  CHECK(ds.labels == std::vector<int>{0, 1});
  CHECK(ds.samples[0].length == 2);
  CHECK(ds.samples[0].values(1, 0) == -2.0);
  CHECK(ds.samples[1].values(2, 0) == 2.0);
}

TEST_CASE("read_dataset: optional true length and NA cells") {
  const Dataset ds = parse("1 2 1 3\n0 3 2\n1 NA\n2 3\n0 0\n");
  CHECK(ds.samples[0].rows() == 3);
  CHECK(ds.samples[0].length == 2);
  CHECK(ds.samples[0].is_missing(0, 1));
  CHECK_FALSE(ds.samples[0].is_missing(0, 0));
  CHECK(ds.samples[0].values(0, 1) == 0.0);
}

TEST_CASE("read_dataset: errors carry the line number") {
  CHECK(parse_error_line("") == 0);
  CHECK(parse_error_line("2 1 2\n") == 1);
  CHECK(parse_error_line("1 1 2 2\n0 2\n1\nx\n") == 4);
  CHECK(parse_error_line("1 1 2 2\n5 2\n1\n2\n") == 2);
  CHECK(parse_error_line("1 2 2 1\n0 1\n1\n") == 3);
  CHECK(parse_error_line("2 1 2 1\n0 1\n1\n") >= 3);
  CHECK(parse_error_line("1 1 2 1\n0 1\n1\n0 1\n") == 4);
  CHECK(parse_error_line("1 1 2 5\n0 1\n1\n") == 1);
  CHECK_THROWS_AS(parse(""), ParseError);
  CHECK_THROWS_AS(load_dataset("/nonexistent/file.txt"), InvalidInput);
}

TEST_CASE("load_dataset: Japanese Vowels splits") {
  const Dataset train = load_dataset(kDataDir + "/japanese_vowels_train.txt");
  CHECK(train.size() == 270);
  CHECK(train.feature_dim == 12);
  CHECK(train.num_classes == 9);
  std::size_t shortest = 1000;
  for (const auto& s : train.samples) shortest = std::min(shortest, s.length);
  CHECK(shortest >= 7);
  CHECK(train.t_max() <= 29);
  for (int c = 0; c < 9; ++c) CHECK(std::count(train.labels.begin(), train.labels.end(), c) == 30);
  const Dataset test = load_dataset(kDataDir + "/japanese_vowels_test.txt");
  CHECK(test.size() == 370);
  CHECK(test.feature_dim == 12);
}

TEST_CASE("save_dataset: round trip is bit-identical") {
  Dataset ds = generate_synthetic({3, 4, 9, 2, 0.37, 5});
  ds.samples[1].length = 6;
  ds.class_names = {"a", "b", "c"};
  const fs::path p = fs::temp_directory_path() / "rmesn_test_roundtrip.txt";
  save_dataset(ds, p);
  const Dataset back = load_dataset(p);
  CHECK(back == ds);
  fs::remove(p);
}

TEST_CASE("zscore: training statistics give zero mean and unit variance") {
  const Dataset ds = generate_synthetic({2, 5, 30, 3, 0.5, 1});
  const ZScoreStats stats = zscore_fit(ds);
  const Dataset z = zscore_apply(ds, stats);
  const ZScoreStats again = zscore_fit(z);
  CHECK(again.mean.cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((again.std.array() - 1.0).abs().maxCoeff() <= 1e-12);
  const Dataset back = zscore_invert(z, stats);
  for (std::size_t i = 0; i < ds.size(); ++i)
    CHECK(testing::max_abs_diff(back.samples[i].values, ds.samples[i].values) <= 1e-10);
}

TEST_CASE("zscore: constant variables, padding and missing cells") {
  Matrix a(3, 2);
  a << 1, 5, 2, 5, 3, 5;
  Dataset ds = testing::make_dataset({a}, {0}, 1);
  const ZScoreStats s = zscore_fit(ds);
  CHECK(s.std(1) == 1.0);
  CHECK(zscore_apply(ds, s).samples[0].values.col(1).cwiseAbs().maxCoeff() == 0.0);
  // Population std of {1, 2, 3}.
  CHECK(s.std(0) == doctest::Approx(std::sqrt(2.0 / 3.0)).epsilon(1e-14));
  Matrix two(2, 1);
  two << 0, 2;
  const Dataset pair = testing::make_dataset({two}, {0}, 1);
  const Matrix normalized = zscore_apply(pair, zscore_fit(pair)).samples[0].values;
  CHECK(normalized(0, 0) == -1.0);
  CHECK(normalized(1, 0) == 1.0);

  ds.samples[0].length = 2;
  ds.samples[0].values(2, 0) = 1000.0;
  const ZScoreStats padded = zscore_fit(ds);
  CHECK(padded.mean(0) == doctest::Approx(1.5));
  CHECK(zscore_apply(ds, padded).samples[0].values(2, 0) == 1000.0);

  const Dataset na = parse("1 1 1 3\n0 3\n1\nNA\n3\n");
  const ZScoreStats m = zscore_fit(na);
  CHECK(m.mean(0) == doctest::Approx(2.0));
  CHECK(zscore_apply(na, m).samples[0].values(1, 0) == 0.0);
  CHECK_THROWS_AS(zscore_apply(testing::make_dataset({Matrix::Zero(2, 3)}, {0}, 1), s), InvalidArgument);
}

TEST_CASE("zero_pad: extends with zeros and keeps lengths") {
  const Dataset ds = testing::make_dataset({testing::random_eigen(2, 2, 1), testing::random_eigen(5, 2, 2)}, {0, 1}, 2);
  const Dataset p = zero_pad(ds);
  CHECK(p.samples[0].rows() == 5);
  CHECK(p.samples[0].length == 2);
  CHECK(p.samples[0].values.bottomRows(3).cwiseAbs().maxCoeff() == 0.0);
  CHECK(p.samples[0].values.topRows(2) == ds.samples[0].values);
  CHECK(p.samples[1] == ds.samples[1]);
}

TEST_CASE("split: sizes, disjointness and determinism") {
  const auto [train, test] = split_indices(10, 0.7, 3);
  CHECK(train.size() == 7);
  CHECK(test.size() == 3);
  std::set<std::size_t> all(train.begin(), train.end());
  all.insert(test.begin(), test.end());
  CHECK(all.size() == 10);
  CHECK(split_indices(10, 0.7, 3) == split_indices(10, 0.7, 3));
  CHECK_THROWS_AS(split_indices(10, 1.0, 3), InvalidArgument);
  const Dataset ds = generate_synthetic({2, 5, 4, 1, 0.1, 0});
  const auto [a, b] = split(ds, 0.7, 3);
  CHECK(a.size() == 7);
  CHECK(b.size() == 3);
}

TEST_CASE("kfold_indices: partition properties") {
  for (std::size_t k : {2u, 3u, 5u, 7u}) {
    const auto folds = kfold_indices(23, k, 9);
    CHECK(folds.size() == k);
    std::set<std::size_t> seen;
    std::size_t lo = 100, hi = 0;
    for (const auto& f : folds) {
      lo = std::min(lo, f.size());
      hi = std::max(hi, f.size());
      seen.insert(f.begin(), f.end());
    }
    CHECK(seen.size() == 23);
    CHECK(hi - lo <= 1);
  }
  const auto singles = kfold_indices(4, 4, 1);
  for (const auto& f : singles) CHECK(f.size() == 1);
  CHECK(kfold_indices(20, 5, 2) == kfold_indices(20, 5, 2));
  CHECK_FALSE(kfold_indices(20, 5, 2) == kfold_indices(20, 5, 3));
  CHECK_THROWS_AS(kfold_indices(3, 4, 0), InvalidArgument);
}

TEST_CASE("generate_synthetic: determinism and noiseless periodicity") {
  const SyntheticSpec spec{3, 4, 60, 2, 0.0, 7};
  CHECK(generate_synthetic(spec) == generate_synthetic(spec));
  SyntheticSpec other = spec;
  other.seed = 8;
  CHECK_FALSE(generate_synthetic(spec) == generate_synthetic(other));
  const Dataset ds = generate_synthetic(spec);
  CHECK(ds.size() == 12);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto c = static_cast<std::size_t>(ds.labels[i]);
    // Frequency 0.05 (c + 1) gives a period of 20 / (c + 1) steps; 20 steps always fit whole periods.
    const Matrix& v = ds.samples[i].values;
    CHECK(testing::max_abs_diff(v.topRows(40), v.bottomRows(40)) <= 1e-9);
    CHECK(v.cwiseAbs().maxCoeff() <= 1.0);
    (void)c;
  }
  CHECK_THROWS_AS(generate_synthetic({0, 4, 60, 2, 0.0, 7}), InvalidArgument);
}

TEST_CASE("import_ts: labels, unequal lengths and missing values") {
  const fs::path p = temp_file("a.ts",
                               "# comment\n@problemName demo\n@timeStamps false\n@univariate false\n"
                               "@classLabel true up down\n@data\n"
                               "1,2,3:4,5,6:down\n"
                               "7,8:9,?:up\n");
  const Dataset ds = import_ts(p);
  CHECK(ds.size() == 2);
  CHECK(ds.feature_dim == 2);
  CHECK(ds.num_classes == 2);
  CHECK(ds.class_names == std::vector<std::string>{"up", "down"});
  CHECK(ds.labels == std::vector<int>{1, 0});
  CHECK(ds.samples[0].length == 3);
  CHECK(ds.samples[0].values(2, 1) == 6.0);
  CHECK(ds.samples[1].length == 2);
  CHECK(ds.samples[1].is_missing(1, 1));
  fs::remove(p);

  const fs::path bad = temp_file("b.ts", "@timeStamps true\n@classLabel true a\n@data\n1:a\n");
  CHECK_THROWS_AS(import_ts(bad), Error);
  fs::remove(bad);
}

TEST_CASE("import_delimited: layouts and label columns") {
  const fs::path p = temp_file("c.csv", "1,10,2,20,1\n3,30,4,40,2\n5,50,6,60,1\n");
  DelimitedOptions time_major{2, DelimitedOptions::Layout::TimeMajor, DelimitedOptions::LabelColumn::Last};
  const Dataset t = import_delimited(p, time_major);
  CHECK(t.size() == 3);
  CHECK(t.feature_dim == 2);
  CHECK(t.samples[0].length == 2);
  CHECK(t.samples[0].values(1, 1) == 20.0);
  CHECK(t.labels == std::vector<int>{0, 1, 0});

  DelimitedOptions dim_major{2, DelimitedOptions::Layout::DimMajor, DelimitedOptions::LabelColumn::Last};
  const Dataset d = import_delimited(p, dim_major);
  CHECK(d.samples[0].values(0, 1) == 2.0);
  CHECK(d.samples[0].values(1, 0) == 10.0);
  fs::remove(p);

  const fs::path q = temp_file("d.tsv", "b\t1\t2\na\t3\t4\n");
  const Dataset f = import_delimited(q, {1, DelimitedOptions::Layout::DimMajor, DelimitedOptions::LabelColumn::First});
  CHECK(f.class_names == std::vector<std::string>{"a", "b"});
  CHECK(f.labels == std::vector<int>{1, 0});
  fs::remove(q);
}

TEST_CASE("index_labels: numeric and lexicographic ordering") {
  const auto [num, num_names] = index_labels({"10", "2", "2", "1"});
  CHECK(num == std::vector<int>{2, 1, 1, 0});
  CHECK(num_names == std::vector<std::string>{"1", "2", "10"});
  const auto [lex, lex_names] = index_labels({"b", "a", "c"});
  CHECK(lex == std::vector<int>{1, 0, 2});
  CHECK(index_labels_with({"2.0", "1"}, {"1", "2"}) == std::vector<int>{1, 0});
  CHECK_THROWS_AS(index_labels_with({"3"}, {"1", "2"}), InvalidLabel);
}
