#include "fiberlab/io.hpp"

#include <cstdio>
#include <cstring>
#include <sstream>

#include "fiberlab/util.hpp"

namespace fiberlab {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

CsvWriter::CsvWriter(const std::string& path, const std::vector<std::string>& header)
    : out_(path, std::ios::binary), path_(path), columns_(header.size()) {
  if (!out_) throw IoError("cannot open output file: " + path);
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) out_ << ',';
    out_ << header[i];
  }
  out_ << '\n';
}

void CsvWriter::sep() {
  if (in_row_) out_ << ',';
  ++in_row_;
}

void CsvWriter::cell(const std::string& v) {
  sep();
  out_ << v;
}

void CsvWriter::cell(double v) {
  sep();
  out_ << format_double(v);
}

void CsvWriter::cell(long v) {
  sep();
  out_ << v;
}

void CsvWriter::end_row() {
  if (in_row_ != columns_) throw IoError("csv row width mismatch in " + path_);
  out_ << '\n';
  in_row_ = 0;
}

void CsvWriter::close() {
  out_.flush();
  if (!out_) throw IoError("failed while writing " + path_);
  out_.close();
}

void write_manifest(const std::string& path, const std::string& section,
                    const std::vector<std::pair<std::string, std::string>>& entries) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open manifest file: " + path);
  out << "# reproducibility manifest; rerun with --config on this file\n";
  out << '[' << section << "]\n";
  for (const auto& [k, v] : entries) out << k << " = " << v << '\n';
  if (!out) throw IoError("failed while writing manifest: " + path);
}

void write_field(const std::string& path, const PhaseField& f) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open field file: " + path);
  const char magic[4] = {'F', 'P', 'F', '1'};
  out.write(magic, 4);
  std::int32_t dims[3] = {f.grid.nx, f.grid.ny, f.grid.nalpha};
  out.write(reinterpret_cast<const char*>(dims), sizeof dims);
  out.write(reinterpret_cast<const char*>(&f.grid.box), sizeof f.grid.box);
  out.write(reinterpret_cast<const char*>(&f.time), sizeof f.time);
  out.write(reinterpret_cast<const char*>(f.v.data()),
            static_cast<std::streamsize>(f.v.size() * sizeof(double)));
  if (!out) throw IoError("failed while writing field: " + path);
}

PhaseField read_field(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open field file: " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "FPF1", 4) != 0) throw IoError("not a field file: " + path);
  std::int32_t dims[3];
  in.read(reinterpret_cast<char*>(dims), sizeof dims);
  GridSpec grid;
  grid.nx = dims[0];
  grid.ny = dims[1];
  grid.nalpha = dims[2];
  in.read(reinterpret_cast<char*>(&grid.box), sizeof grid.box);
  PhaseField f(grid);
  in.read(reinterpret_cast<char*>(&f.time), sizeof f.time);
  in.read(reinterpret_cast<char*>(f.v.data()),
          static_cast<std::streamsize>(f.v.size() * sizeof(double)));
  if (!in) throw IoError("truncated field file: " + path);
  return f;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace fiberlab
