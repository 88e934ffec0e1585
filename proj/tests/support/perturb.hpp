#pragma once

// Single-digit corruptions of a saved run record, used to exercise record
// self-verification.

#include <cmath>
#include <cstdlib>
#include <string>
#include <vector>

#include <json.hpp>

namespace qindex::testing {

struct Perturbation {
  std::string where;  // JSON pointer of the corrupted value
  std::string original;
  std::string replaced;
  std::string text;  // the whole corrupted document
};

// Every number under the record's "rows", "summary" and "threshold" sections
// gets each digit of its stored text whose place value is at least
// `min_place` bumped by one (9 wraps to 0), one digit at a time. Digits finer
// than the integrity tolerance are skipped: those are not resolvable by
// design.
inline std::vector<Perturbation> digit_perturbations(const nlohmann::json& record,
                                                     double min_place = 1e-8) {
  std::vector<Perturbation> out;
  const nlohmann::json flat = record.flatten();
  for (const auto& [pointer, leaf] : flat.items()) {
    if (!leaf.is_number_float()) continue;
    if (pointer.rfind("/rows/", 0) != 0 && pointer.rfind("/summary/", 0) != 0 &&
        pointer.rfind("/threshold/", 0) != 0) {
      continue;
    }
    const std::string value = leaf.dump();
    const size_t e = value.find_first_of("eE");
    const std::string mantissa = value.substr(0, e);
    const int exponent = e == std::string::npos ? 0 : std::atoi(value.c_str() + e + 1);
    const size_t dot = mantissa.find('.');
    const size_t int_end = dot == std::string::npos ? mantissa.size() : dot;
    for (size_t i = 0; i < mantissa.size(); ++i) {
      const char ch = mantissa[i];
      if (ch < '0' || ch > '9') continue;
      const int place = i < int_end ? static_cast<int>(int_end - i - 1)
                                    : -static_cast<int>(i - int_end);
      if (std::pow(10.0, place + exponent) < min_place) continue;
      Perturbation p;
      p.where = pointer;
      p.original = value;
      p.replaced = value;
      p.replaced[i] = ch == '9' ? '0' : static_cast<char>(ch + 1);
      nlohmann::json corrupted = record;
      corrupted[nlohmann::json::json_pointer(pointer)] = std::stod(p.replaced);
      p.text = corrupted.dump(2);
      out.push_back(std::move(p));
    }
  }
  return out;
}

}  // namespace qindex::testing
