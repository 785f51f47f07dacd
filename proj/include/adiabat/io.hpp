#pragma once

#include <nlohmann/json.hpp>
#include <ostream>
#include <string>

#include "adiabat/solver.hpp"

namespace adiabat {

// {"A": [[..], ..] row-major, "b": [..], "c_scale": 1, "h": {"kind": "zero" | "affine" | "saturated", ...}}
//   affine:    {"S0": [[..]], "Sx": [[[..]], ...], "Sz": [[..]]}
//   saturated: {"S0": [[..]], "S1": [[..]], "a": number}
ProblemTriple triple_from_json(const nlohmann::json& j);
nlohmann::json triple_to_json(const ProblemTriple& tr);
ProblemTriple load_triple(const std::string& path);

Mat matrix_from_json(const nlohmann::json& j);
nlohmann::json matrix_to_json(const Mat& M);

// Columns: t, x1..x{n-1}, z
void write_path_csv(std::ostream& os, const GridPath& p);
nlohmann::json solution_summary(const Solution& s);

}  // namespace adiabat
