#include "sbary_io.hpp"
#include "support/fixtures.hpp"

#include <gtest/gtest.h>

#include <filesystem>

using namespace sbary;
using fixtures::vec;

TEST(Io, PolytopeRoundTrip) {
  const auto P = fixtures::unit_square();
  const auto j = io::polytope_to_json(P);
  const auto Q = io::polytope_from_json(io::json::parse(j.dump()));
  ASSERT_EQ(Q.size(), P.size());
  ASSERT_EQ(Q.facets().size(), P.facets().size());
  for (std::size_t k = 0; k < P.size(); ++k) EXPECT_EQ(Q.vertices()[k], P.vertices()[k]);
  const Vector x = vec({0.3, 0.6});
  EXPECT_EQ(solve_weights(P, x).weights, solve_weights(Q, x).weights);
}

TEST(Io, DoublesRoundTripExactly) {
  const double v = 0.1 + 0.2;
  const io::json j = {{"v", v}};
  EXPECT_EQ(io::json::parse(j.dump())["v"].get<double>(), v);
}

TEST(Io, SchemaErrorsNameTheField) {
  auto expect_msg = [](const std::string& text, const std::string& needle) {
    try {
      io::polytope_from_json(io::parse_json(text, "p.json"), "p.json");
      FAIL() << "no error for " << text;
    } catch (const io::InputError& e) {
      EXPECT_NE(std::string(e.what()).find(needle), std::string::npos) << e.what();
    }
  };
  expect_msg(R"({"name": "a"})", "vertices");
  expect_msg(R"({"vertices": [[0, 0], [1, "x"]]})", "vertices[1][1]");
  expect_msg(R"({"vertices": [[0, 0], [1]]})", "vertices[1]");
  expect_msg(R"({"vertices": [[0], [1]], "facets": [{"normal": [1]}]})", "facets[0].offset");
  expect_msg(R"({"vertices": [[0], [1]], "facets": [{"normal": [1], "offset": 0.5}]})", "p.json");
  expect_msg(R"({"vertices": [[0], [1]],)", "malformed");
}

TEST(Io, CsvHeaderCommentsAndShape) {
  const auto t = io::parse_csv("# comment\nx,y\n1,2\n\n3, 4\n");
  EXPECT_EQ(t.header.size(), 2u);
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_EQ(t.rows[1][1], 4.0);
  EXPECT_THROW(io::parse_csv("1,2\n3\n"), io::InputError);
  EXPECT_THROW(io::parse_csv("1,2\n3,abc\n"), io::InputError);
  EXPECT_THROW(io::parse_csv("x,y\n"), io::InputError);
}

TEST(Io, GridShapeInference) {
  std::vector<Vector> ys;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 4; ++j) ys.push_back(vec({double(i), double(j)}));
  EXPECT_EQ(io::infer_grid_shape(ys, "f"), (std::vector<int>{3, 4}));
  std::vector<Vector> line = {vec({0}), vec({1}), vec({2})};
  EXPECT_EQ(io::infer_grid_shape(line, "f"), (std::vector<int>{3}));
}

TEST(Io, ModelSources) {
  EXPECT_EQ(io::resolve_model("dd2").polytope.size(), 4u);
  EXPECT_EQ(io::resolve_model("dd3").polytope.size(), 9u);
  EXPECT_THROW(io::resolve_model("dd4"), io::InputError);
  const auto j = io::json::parse(R"({"vertex_matrices": [[[1, 0], [0, 0]], [[0, 0], [0, 1]]]})");
  const auto m = io::model_from_json(j);
  EXPECT_EQ(m.polytope.dim(), 1);
  const auto bad = io::json::parse(R"({"vertex_matrices": [[[1, 0], [0, -1]], [[0, 0], [0, 1]]]})");
  EXPECT_THROW(io::model_from_json(bad), io::InputError);
}

TEST(Io, AtomicWriteReplacesFile) {
  const auto dir = std::filesystem::temp_directory_path() / "sbary_io_test";
  std::filesystem::create_directories(dir);
  const auto path = (dir / "out.json").string();
  io::write_json_atomic(path, {{"a", 1}});
  io::write_json_atomic(path, {{"a", 2}});
  EXPECT_EQ(io::json::parse(io::read_file(path))["a"], 2);
  int files = 0;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    (void)e;
    ++files;
  }
  EXPECT_EQ(files, 1);  // no temporary left behind
  std::filesystem::remove_all(dir);
}
