#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tdcgl/field_grid.hpp"
#include "tdcgl/nonlinear_fn.hpp"

namespace tdcgl {

enum class SnapshotKind : std::uint8_t { intensity = 0, phase = 1, complex = 2 };

const char* to_string(SnapshotKind k);

/// Header: "TDCGL1\0\0", u32 nx, u32 ny, f64 h, f64 z, u8 kind, all little-endian,
/// followed by nx*ny f64 values (interleaved re, im for complex).
struct Snapshot {
  std::uint32_t nx = 0;
  std::uint32_t ny = 0;
  double h = 0.0;
  double z = 0.0;
  SnapshotKind kind = SnapshotKind::intensity;
  std::vector<double> payload;

  GridSpec grid() const;
  ScalarField2D field() const;
  ComplexField2D complex_field() const;
};

inline constexpr std::size_t kSnapshotHeaderBytes = 33;

std::vector<std::uint8_t> encode_snapshot(const Snapshot& s);
Snapshot decode_snapshot(const std::vector<std::uint8_t>& bytes, const std::string& name = "snapshot");

void write_snapshot(const std::string& path, const ScalarField2D& f, double z, SnapshotKind kind);
void write_snapshot(const std::string& path, const ComplexField2D& f, double z);
/// Throws FormatError on IO failure or malformed content.
Snapshot read_snapshot(const std::string& path);

/// Every path opened for reading through this module, in order. Used to audit
/// which inputs a command touched.
class ReadAudit {
 public:
  static void record(const std::string& path);
  static std::vector<std::string> paths();
  static void clear();
};

/// Two-column CSV with a header line.
void write_table_csv(const std::string& path, const std::string& x_name, const std::string& y_name,
                     const std::vector<double>& xs, const std::vector<double>& ys);
NonlinearFn read_table_csv(const std::string& path);

/// Formats a double so that parsing it returns the same bits.
std::string format_double(double v);

}  // namespace tdcgl
