#pragma once

#include <fstream>
#include <map>
#include <string>

namespace augkd::metrics {

/// One scalar record in the append-only JSON-lines metrics stream.
struct Record {
  std::string run_id;
  std::string scope;  // "step" | "epoch" | "final"
  int64_t step = 0;
  int epoch = -1;
  std::map<std::string, double> values;
};

std::string to_json_line(const Record& r);

/// Appends records to a file, enforcing a monotone step index per run.
class Writer {
 public:
  Writer() = default;
  explicit Writer(const std::string& path);

  void write(const Record& r);
  void flush();
  const std::string& path() const { return path_; }

 private:
  std::string path_;
  std::ofstream out_;
  int64_t last_step_ = -1;
};

}  // namespace augkd::metrics
