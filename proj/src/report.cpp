#include "tblab/report.hpp"

#include <sstream>

namespace tblab {

nlohmann::json to_json(const CheckReport& r) {
  nlohmann::json j;
  j["name"] = r.name;
  j["observed"] = r.observed;
  j["bound"] = r.bound ? nlohmann::json(*r.bound) : nlohmann::json(nullptr);
  j["pass"] = r.pass ? nlohmann::json(*r.pass) : nlohmann::json(nullptr);
  j["samples"] = r.samples;
  j["seed"] = r.seed;
  j["applicable"] = r.applicable;
  if (!r.note.empty()) j["note"] = r.note;
  return j;
}

std::string csv_header() { return "name,observed,bound,pass,samples,seed,applicable"; }

std::string to_csv_row(const CheckReport& r) {
  std::ostringstream os;
  os.precision(17);
  os << r.name << ',' << r.observed << ',';
  if (r.bound) os << *r.bound;
  os << ',';
  if (r.pass) os << (*r.pass ? "true" : "false");
  os << ',' << r.samples << ',' << r.seed << ',' << (r.applicable ? "true" : "false");
  return os.str();
}

CheckReport not_applicable(std::string name, std::string why) {
  CheckReport r;
  r.name = std::move(name);
  r.applicable = false;
  r.note = std::move(why);
  return r;
}

}  // namespace tblab
