#include <cmath>

#include "doctest.h"
#include "sketchnd/dataset.hpp"
#include "sketchnd/error.hpp"
#include "support.hpp"

using namespace sketchnd;

TEST_CASE("default dataset is 500 uniform points in 7 dimensions over [-10, 10]") {
  Rng rng(0);
  const Dataset d = create_default_dataset(rng);
  REQUIRE(d.num_points() == 500);
  REQUIRE(d.num_dims() == 7);
  CHECK(d.points().minCoeff() >= -10.0);
  CHECK(d.points().maxCoeff() <= 10.0);
  for (std::size_t k = 0; k < 7; ++k) {
    CHECK(d.dim(k).name == "x" + std::to_string(k + 1));
    CHECK(d.dim(k).min == -10.0);
    CHECK(d.dim(k).max == 10.0);
    const auto col = d.points().col(static_cast<Eigen::Index>(k));
    std::vector<double> v(col.data(), col.data() + 0);
    for (Eigen::Index r = 0; r < col.size(); ++r) v.push_back(col(r));
    CHECK(testing::chi_square_uniform(v, -10.0, 10.0, 10) < testing::kChiSquare99Df9);
  }
  for (int l : d.labels()) CHECK(l == 0);
}

TEST_CASE("export then import reproduces points and labels bit for bit") {
  Rng rng(4);
  Dataset d = create_default_dataset(rng, 50, 3);
  PointTable extra = PointTable::Constant(5, 3, 1.0 / 3.0);
  d = append_points(d, 2, extra);
  const std::string text = export_dataset(d);
  const Dataset back = import_dataset(text);
  CHECK(back.points() == d.points());
  CHECK(back.labels() == d.labels());
  CHECK(export_dataset(back) == text);
  CHECK(text.substr(0, text.find('\n')) == "x1 x2 x3 cluster");
}

TEST_CASE("csv export uses commas") {
  Rng rng(1);
  const Dataset d = create_default_dataset(rng, 3, 2);
  const std::string csv = export_dataset_csv(d);
  CHECK(csv.substr(0, csv.find('\n')) == "x1,x2,cluster");
  CHECK(csv.find(' ') == std::string::npos);
}

TEST_CASE("format_real round-trips arbitrary doubles") {
  Rng rng(8);
  for (int i = 0; i < 10000; ++i) {
    const double v = (rng.uniform() - 0.5) * std::pow(10.0, rng.uniform(-30.0, 30.0));
    CHECK(std::stod(format_real(v)) == v);
  }
  CHECK(format_real(0.1) == "0.1");
  CHECK(format_real(-2.0) == "-2");
}

TEST_CASE("import accepts headerless numeric text and sets axes from the data") {
  const Dataset d = import_dataset("1 2\n3 5\n-1 4\n");
  REQUIRE(d.num_dims() == 2);
  CHECK(d.dim(0).name == "x1");
  CHECK(d.dim(0).min == -1.0);
  CHECK(d.dim(0).max == 3.0);
  CHECK(d.dim(1).min == 2.0);
  CHECK(d.dim(1).max == 5.0);
  CHECK(d.num_points() == 3);
}

TEST_CASE("import widens constant columns") {
  const Dataset d = import_dataset("a b\n1 2\n1 3\n");
  CHECK(d.dim(0).min == 0.5);
  CHECK(d.dim(0).max == 1.5);
}

TEST_CASE("import reports the failing line") {
  try {
    import_dataset("a b\n1 2\n3\n");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
  }
  CHECK_THROWS_AS(import_dataset("a b\n1 x\n"), ParseError);
  CHECK_THROWS_AS(import_dataset(""), ParseError);
  CHECK_THROWS_AS(import_dataset("a cluster\n1 99\n"), ParseError);
}

TEST_CASE("reorder moves one column and keeps the rest in order") {
  Rng rng(2);
  const Dataset d = create_default_dataset(rng, 20, 5);
  const Dataset r = reorder_dimension(d, 1, 3);
  const auto perm = reorder_permutation(5, 1, 3);
  CHECK(perm == std::vector<std::size_t>{0, 3, 1, 2, 4});
  for (std::size_t old = 0; old < 5; ++old) {
    CHECK(r.dim(perm[old]).name == d.dim(old).name);
    CHECK(r.points().col(static_cast<Eigen::Index>(perm[old])) == d.points().col(static_cast<Eigen::Index>(old)));
  }
  CHECK(reorder_dimension(r, 3, 1) == d);
  CHECK_THROWS_AS(reorder_dimension(d, 0, 5), ValidationError);
}

TEST_CASE("set_dimension_range changes only the axis") {
  Rng rng(2);
  const Dataset d = create_default_dataset(rng, 20, 3);
  const Dataset r = set_dimension_range(d, 1, 5.0, -5.0);
  CHECK(r.points() == d.points());
  CHECK(r.dim(1).min == 5.0);
  CHECK(r.dim(1).max == -5.0);
  CHECK(r.dim(1).lo() == -5.0);
  CHECK_THROWS_AS(set_dimension_range(d, 1, 2.0, 2.0), ValidationError);
  CHECK_THROWS_AS(set_dimension_range(d, 3, 0.0, 1.0), ValidationError);
}

TEST_CASE("replace_cluster leaves other clusters untouched") {
  Rng rng(6);
  Dataset d = create_default_dataset(rng, 10, 2);
  d = append_points(d, 1, PointTable::Constant(4, 2, 0.5));
  d = append_points(d, 2, PointTable::Constant(3, 2, -0.5));
  const Dataset r = replace_cluster(d, 1, PointTable::Constant(6, 2, 9.0));
  CHECK(r.num_points() == 19);
  const auto before0 = d.rows_of_cluster(0);
  const auto after0 = r.rows_of_cluster(0);
  REQUIRE(before0.size() == after0.size());
  for (std::size_t i = 0; i < before0.size(); ++i)
    CHECK(r.points().row(static_cast<Eigen::Index>(after0[i])) == d.points().row(static_cast<Eigen::Index>(before0[i])));
  CHECK(r.rows_of_cluster(1).size() == 6);
  CHECK(r.rows_of_cluster(2).size() == 3);
}

TEST_CASE("remove_rows drops exactly the listed rows") {
  Rng rng(6);
  const Dataset d = create_default_dataset(rng, 10, 2);
  const std::vector<std::size_t> drop{0, 4, 9};
  const Dataset r = remove_rows(d, drop);
  CHECK(r.num_points() == 7);
  CHECK(r.points().row(0) == d.points().row(1));
  CHECK(r.points().row(3) == d.points().row(5));
}

TEST_CASE("dataset constructor validates its pieces") {
  auto dims = make_dimensions(2, 0.0, 1.0);
  CHECK_THROWS_AS(Dataset(dims, PointTable::Zero(2, 3), {0, 0}), ValidationError);
  CHECK_THROWS_AS(Dataset(dims, PointTable::Zero(2, 2), {0}), ValidationError);
  CHECK_THROWS_AS(Dataset(dims, PointTable::Zero(1, 2), {10}), ValidationError);
  dims[1].name = "x1";
  CHECK_THROWS_AS(Dataset(dims, PointTable::Zero(1, 2), {0}), ValidationError);
  CHECK(cluster_color(0) != cluster_color(1));
}
