#include "tdcgl/snapshot_io.hpp"

#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <iterator>
#include <mutex>
#include <sstream>

#include "tdcgl/errors.hpp"

namespace tdcgl {

namespace {

constexpr char kMagic[8] = {'T', 'D', 'C', 'G', 'L', '1', '\0', '\0'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<std::uint8_t>(v >> (8 * b)));
}

void put_f64(std::vector<std::uint8_t>& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<std::uint8_t>(bits >> (8 * b)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  std::uint32_t v = 0;
  for (int b = 0; b < 4; ++b) v |= static_cast<std::uint32_t>(p[b]) << (8 * b);
  return v;
}

double get_f64(const std::uint8_t* p) {
  std::uint64_t v = 0;
  for (int b = 0; b < 8; ++b) v |= static_cast<std::uint64_t>(p[b]) << (8 * b);
  return std::bit_cast<double>(v);
}

std::mutex& audit_mutex() {
  static std::mutex m;
  return m;
}

std::vector<std::string>& audit_paths() {
  static std::vector<std::string> v;
  return v;
}

std::vector<std::uint8_t> read_all(const std::string& path) {
  ReadAudit::record(path);
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path);
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_all(const std::string& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("write failed for " + path);
}

}  // namespace

const char* to_string(SnapshotKind k) {
  switch (k) {
    case SnapshotKind::intensity:
      return "intensity";
    case SnapshotKind::phase:
      return "phase";
    case SnapshotKind::complex:
      return "complex";
  }
  return "unknown";
}

GridSpec Snapshot::grid() const {
  GridSpec g;
  g.nx = static_cast<int>(nx);
  g.ny = static_cast<int>(ny);
  g.h = h;
  return g;
}

ScalarField2D Snapshot::field() const {
  if (kind == SnapshotKind::complex) throw FormatError("snapshot holds a complex field");
  return ScalarField2D(grid(), payload);
}

ComplexField2D Snapshot::complex_field() const {
  if (kind != SnapshotKind::complex) throw FormatError("snapshot does not hold a complex field");
  const GridSpec g = grid();
  ComplexField2D f(g);
  for (std::size_t k = 0; k < g.size(); ++k) {
    f.re[k] = payload[2 * k];
    f.im[k] = payload[2 * k + 1];
  }
  return f;
}

std::vector<std::uint8_t> encode_snapshot(const Snapshot& s) {
  const std::size_t per = s.kind == SnapshotKind::complex ? 2 : 1;
  if (s.payload.size() != static_cast<std::size_t>(s.nx) * s.ny * per) throw FormatError("snapshot payload size mismatch");
  std::vector<std::uint8_t> out(kMagic, kMagic + 8);
  out.reserve(kSnapshotHeaderBytes + 8 * s.payload.size());
  put_u32(out, s.nx);
  put_u32(out, s.ny);
  put_f64(out, s.h);
  put_f64(out, s.z);
  out.push_back(static_cast<std::uint8_t>(s.kind));
  for (double v : s.payload) put_f64(out, v);
  return out;
}

Snapshot decode_snapshot(const std::vector<std::uint8_t>& bytes, const std::string& name) {
  if (bytes.size() < kSnapshotHeaderBytes) throw FormatError(name + ": truncated header");
  if (std::memcmp(bytes.data(), kMagic, 8) != 0) throw FormatError(name + ": bad magic");
  Snapshot s;
  const std::uint8_t* p = bytes.data() + 8;
  s.nx = get_u32(p);
  s.ny = get_u32(p + 4);
  s.h = get_f64(p + 8);
  s.z = get_f64(p + 16);
  const std::uint8_t kind = p[24];
  if (kind > 2) throw FormatError(name + ": unknown kind " + std::to_string(kind));
  s.kind = static_cast<SnapshotKind>(kind);
  try {
    s.grid().validate();
  } catch (const std::invalid_argument& e) {
    throw FormatError(name + ": " + e.what());
  }
  const std::size_t per = s.kind == SnapshotKind::complex ? 2 : 1;
  const std::size_t count = static_cast<std::size_t>(s.nx) * s.ny * per;
  if (bytes.size() != kSnapshotHeaderBytes + 8 * count) throw FormatError(name + ": payload length does not match header");
  s.payload.resize(count);
  for (std::size_t k = 0; k < count; ++k) s.payload[k] = get_f64(bytes.data() + kSnapshotHeaderBytes + 8 * k);
  return s;
}

void write_snapshot(const std::string& path, const ScalarField2D& f, double z, SnapshotKind kind) {
  if (kind == SnapshotKind::complex) throw std::invalid_argument("use the complex overload for complex snapshots");
  Snapshot s;
  s.nx = static_cast<std::uint32_t>(f.spec().nx);
  s.ny = static_cast<std::uint32_t>(f.spec().ny);
  s.h = f.spec().h;
  s.z = z;
  s.kind = kind;
  s.payload = f.values();
  write_all(path, encode_snapshot(s));
}

void write_snapshot(const std::string& path, const ComplexField2D& f, double z) {
  Snapshot s;
  s.nx = static_cast<std::uint32_t>(f.spec().nx);
  s.ny = static_cast<std::uint32_t>(f.spec().ny);
  s.h = f.spec().h;
  s.z = z;
  s.kind = SnapshotKind::complex;
  s.payload.reserve(2 * f.re.size());
  for (std::size_t k = 0; k < f.re.size(); ++k) {
    s.payload.push_back(f.re[k]);
    s.payload.push_back(f.im[k]);
  }
  write_all(path, encode_snapshot(s));
}

Snapshot read_snapshot(const std::string& path) { return decode_snapshot(read_all(path), path); }

void ReadAudit::record(const std::string& path) {
  std::lock_guard<std::mutex> lock(audit_mutex());
  audit_paths().push_back(path);
}

std::vector<std::string> ReadAudit::paths() {
  std::lock_guard<std::mutex> lock(audit_mutex());
  return audit_paths();
}

void ReadAudit::clear() {
  std::lock_guard<std::mutex> lock(audit_mutex());
  audit_paths().clear();
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void write_table_csv(const std::string& path, const std::string& x_name, const std::string& y_name,
                     const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size()) throw std::invalid_argument("table columns differ in length");
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path);
  out << x_name << ',' << y_name << '\n';
  for (std::size_t k = 0; k < xs.size(); ++k) out << format_double(xs[k]) << ',' << format_double(ys[k]) << '\n';
  if (!out) throw FormatError("write failed for " + path);
}

NonlinearFn read_table_csv(const std::string& path) {
  const std::vector<std::uint8_t> bytes = read_all(path);
  std::istringstream in(std::string(bytes.begin(), bytes.end()));
  std::string line;
  std::vector<double> xs, ys;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (lineno == 1) continue;  // header
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw FormatError(path + ":" + std::to_string(lineno) + ": expected two columns");
    double x = 0, y = 0;
    const char* b = line.data();
    const auto r1 = std::from_chars(b, b + comma, x);
    const auto r2 = std::from_chars(b + comma + 1, b + line.size(), y);
    if (r1.ec != std::errc() || r1.ptr != b + comma || r2.ec != std::errc() || r2.ptr != b + line.size())
      throw FormatError(path + ":" + std::to_string(lineno) + ": malformed number");
    xs.push_back(x);
    ys.push_back(y);
  }
  try {
    return NonlinearFn::tabulated(std::move(xs), std::move(ys));
  } catch (const std::invalid_argument& e) {
    throw FormatError(path + ": " + e.what());
  }
}

}  // namespace tdcgl
