#include "augkd/metrics.hpp"

#include <stdexcept>

#include "json.hpp"

namespace augkd::metrics {

std::string to_json_line(const Record& r) {
  nlohmann::json j;
  j["run"] = r.run_id;
  j["scope"] = r.scope;
  j["step"] = r.step;
  j["epoch"] = r.epoch;
  for (const auto& [k, v] : r.values) j[k] = v;
  return j.dump();
}

Writer::Writer(const std::string& path) : path_(path), out_(path, std::ios::app) {
  if (!out_) throw std::runtime_error("metrics: cannot open " + path);
}

void Writer::write(const Record& r) {
  if (r.step < last_step_)
    throw std::logic_error("metrics: step index must be monotone (got " +
                           std::to_string(r.step) + " after " + std::to_string(last_step_) + ")");
  last_step_ = r.step;
  out_ << to_json_line(r) << "\n";
}

void Writer::flush() { out_.flush(); }

}  // namespace augkd::metrics
