#pragma once

#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "fiberlab/grid.hpp"

namespace fiberlab {

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// CSV writer with deterministic formatting: '.' decimal separator, LF line
// endings, shortest-round-trip doubles.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header);
  void cell(const std::string& v);
  void cell(double v);
  void cell(long v);
  void end_row();
  void close();

 private:
  void sep();
  std::ofstream out_;
  std::string path_;
  std::size_t columns_;
  std::size_t in_row_ = 0;
};

// key = value manifest, also loadable as a config file section
void write_manifest(const std::string& path, const std::string& section,
                    const std::vector<std::pair<std::string, std::string>>& entries);

// flat binary field snapshot: magic, dims, box, time, row-major doubles with
// the angle index fastest (little-endian)
void write_field(const std::string& path, const PhaseField& f);
PhaseField read_field(const std::string& path);

std::string read_text_file(const std::string& path);

}  // namespace fiberlab
