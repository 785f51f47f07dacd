#include "adiabat/io.hpp"

#include <fstream>
#include <iomanip>

namespace adiabat {

Mat matrix_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.empty()) throw InvalidInput("matrix: expected a nonempty array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = static_cast<Eigen::Index>(j[0].size());
  Mat M(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) throw InvalidInput("matrix: ragged rows");
    for (Eigen::Index c = 0; c < cols; ++c) M(r, c) = row[static_cast<std::size_t>(c)].get<double>();
  }
  return M;
}

nlohmann::json matrix_to_json(const Mat& M) {
  nlohmann::json j = nlohmann::json::array();
  for (Eigen::Index r = 0; r < M.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < M.cols(); ++c) row.push_back(M(r, c));
    j.push_back(row);
  }
  return j;
}

namespace {

Vec vector_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw InvalidInput("vector: expected an array");
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  return v;
}

HPtr h_from_json(const nlohmann::json& j, int n) {
  const std::string kind = j.value("kind", "zero");
  if (kind == "zero") return std::make_shared<ZeroH>(n);
  if (kind == "affine") {
    Mat S0 = j.contains("S0") ? matrix_from_json(j["S0"]) : Mat(Mat::Zero(n, n));
    Mat Sz = j.contains("Sz") ? matrix_from_json(j["Sz"]) : Mat(Mat::Zero(n, n));
    std::vector<Mat> Sx;
    if (j.contains("Sx"))
      for (const auto& s : j["Sx"]) Sx.push_back(matrix_from_json(s));
    else
      Sx.assign(static_cast<std::size_t>(n - 1), Mat::Zero(n, n));
    return std::make_shared<AffineH>(S0, Sx, Sz);
  }
  if (kind == "saturated")
    return std::make_shared<SaturatedH>(matrix_from_json(j.at("S0")), matrix_from_json(j.at("S1")), j.value("a", 1.0));
  throw InvalidInput("h: unknown kind '" + kind + "'");
}

}  // namespace

ProblemTriple triple_from_json(const nlohmann::json& j) {
  try {
    const Mat A = matrix_from_json(j.at("A"));
    const Vec b = vector_from_json(j.at("b"));
    const double c = j.value("c_scale", 1.0);
    const int n = static_cast<int>(b.size()) + 1;
    HPtr h = j.contains("h") ? h_from_json(j["h"], n) : nullptr;
    return ProblemTriple::make(A, b, h, c);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("triple json: ") + e.what());
  }
}

nlohmann::json triple_to_json(const ProblemTriple& tr) {
  nlohmann::json j;
  j["A"] = matrix_to_json(tr.A());
  j["b"] = std::vector<double>(tr.b().data(), tr.b().data() + tr.b().size());
  j["c_scale"] = tr.c_scale();
  nlohmann::json h;
  h["kind"] = tr.h().kind();
  if (auto* a = dynamic_cast<const AffineH*>(&tr.h())) {
    h["S0"] = matrix_to_json(a->S0());
    h["Sz"] = matrix_to_json(a->Sz());
    h["Sx"] = nlohmann::json::array();
    for (const auto& S : a->Sx()) h["Sx"].push_back(matrix_to_json(S));
  } else if (auto* s = dynamic_cast<const SaturatedH*>(&tr.h())) {
    h["S0"] = matrix_to_json(s->S0());
    h["S1"] = matrix_to_json(s->S1());
    h["a"] = s->a();
  } else if (!tr.h_is_zero()) {
    throw InvalidInput("triple_to_json: custom h cannot be serialized");
  }
  j["h"] = h;
  return j;
}

ProblemTriple load_triple(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open triple file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput("triple file " + path + ": " + e.what());
  }
  return triple_from_json(j);
}

void write_path_csv(std::ostream& os, const GridPath& p) {
  os << "t";
  for (int r = 0; r + 1 < p.n(); ++r) os << ",x" << r + 1;
  os << ",z\n";
  os << std::setprecision(17);
  for (int i = 0; i < p.count(); ++i) {
    os << p.time(i);
    for (int r = 0; r < p.n(); ++r) os << ',' << p.values(r, i);
    os << '\n';
  }
}

nlohmann::json solution_summary(const Solution& s) {
  nlohmann::json j;
  j["eps"] = s.eps;
  j["iterations"] = s.iterations;
  j["residuals"] = s.residuals;
  j["step_norms"] = s.step_norms;
  j["slice_certificate"] = s.slice_certificate;
  j["slice_relative"] = s.slice_relative;
  j["grid"] = {{"T", s.gamma.grid.T}, {"m", s.gamma.grid.m}};
  return j;
}

}  // namespace adiabat
