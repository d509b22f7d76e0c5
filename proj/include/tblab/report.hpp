#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace tblab {

// Outcome of an inequality or identity verifier.  `pass` is set iff `bound` is.
// A check whose hypotheses fail is marked not applicable instead of failed.
struct CheckReport {
  std::string name;
  double observed = 0.0;
  std::optional<double> bound;
  std::optional<bool> pass;
  std::int64_t samples = 0;
  std::uint64_t seed = 0;
  bool applicable = true;
  std::string note;

  void set_bound(double b, double tol = 0.0) {
    bound = b;
    pass = observed <= b + tol;
  }
  // Inapplicable checks are not failures.
  bool ok() const { return !applicable || pass.value_or(true); }
};

nlohmann::json to_json(const CheckReport& r);
std::string csv_header();
std::string to_csv_row(const CheckReport& r);

CheckReport not_applicable(std::string name, std::string why);

}  // namespace tblab
