#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "adiabat/io.hpp"
#include "fixtures.hpp"

using namespace adiabat;
using namespace fixtures;

TEST(TripleJson, RoundTripAllKinds) {
  std::mt19937_64 rng(2);
  std::vector<ProblemTriple> triples{
      scalar_triple(0.5),
      ProblemTriple::make(scalar(2.0), vec1(0.3), random_affine_h(2, rng, 0.1)),
      ProblemTriple::make(scalar(2.0), vec1(0.3), std::make_shared<SaturatedH>(random_symmetric(2, rng), random_symmetric(2, rng), 0.7))};
  for (const auto& tr : triples) {
    const nlohmann::json j = triple_to_json(tr);
    const ProblemTriple back = triple_from_json(nlohmann::json::parse(j.dump()));
    EXPECT_EQ(back.h().kind(), tr.h().kind());
    EXPECT_EQ(back.A(), tr.A());
    EXPECT_EQ(back.b(), tr.b());
    const Vec y = random_vec(2, rng, 0.4);
    EXPECT_LT((remainder(back, 0.1, y) - remainder(tr, 0.1, y)).norm(), 1e-15);
  }
}

TEST(TripleJson, Errors) {
  EXPECT_THROW(triple_from_json(nlohmann::json::parse(R"({"A": [[2]]})")), InvalidInput);
  EXPECT_THROW(triple_from_json(nlohmann::json::parse(R"({"A": [[2]], "b": [1.5]})")), InvalidInput);
  EXPECT_THROW(triple_from_json(nlohmann::json::parse(R"({"A": [[2]], "b": [0.1], "h": {"kind": "cubic"}})")), InvalidInput);
  EXPECT_THROW(triple_from_json(nlohmann::json::parse(R"({"A": [[2, 1], [3]], "b": [0.1, 0]})")), InvalidInput);
  EXPECT_THROW(load_triple("/nonexistent/triple.json"), InvalidInput);
}

TEST(PathCsv, HeaderAndRows) {
  GridPath p(Grid(1.0, 3), 3);
  p.values << 1, 2, 3, 4, 5, 6, 7, 8, 9;
  std::ostringstream os;
  write_path_csv(os, p);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  EXPECT_EQ(line, "t,x1,x2,z");
  std::getline(is, line);
  EXPECT_EQ(line, "-1,1,4,7");
}
