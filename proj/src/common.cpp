#include "embedprobe/common.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace embedprobe {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::TooShort: return "TooShort";
    case ErrorCode::ConstantSignal: return "ConstantSignal";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::GapError: return "GapError";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::FormatError: return "FormatError";
    case ErrorCode::MetadataMismatch: return "MetadataMismatch";
    case ErrorCode::ZeroVariance: return "ZeroVariance";
    case ErrorCode::ZeroNorm: return "ZeroNorm";
    case ErrorCode::DegenerateInput: return "DegenerateInput";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::SingleClass: return "SingleClass";
    case ErrorCode::NonConvergence: return "NonConvergence";
    case ErrorCode::TooFewSamples: return "TooFewSamples";
    case ErrorCode::ZeroMagnitude: return "ZeroMagnitude";
    case ErrorCode::ProvenanceMismatch: return "ProvenanceMismatch";
    case ErrorCode::UnknownPanel: return "UnknownPanel";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

std::string hex_digest(std::string_view text) {
  // Two independent FNV-1a lanes give a 128-bit identifier; this is a
  // content fingerprint, not a cryptographic hash.
  const std::uint64_t a = fnv1a(text);
  const std::uint64_t b = splitmix64(fnv1a(text, 0x84222325CBF29CE4ULL));
  char buffer[33];
  std::snprintf(buffer, sizeof buffer, "%016llx%016llx", static_cast<unsigned long long>(a),
                static_cast<unsigned long long>(b));
  return buffer;
}

std::string format_double(double value) {
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "%.17g", value);
  return buffer;
}

void write_file_atomic(const std::string& path, std::string_view contents) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  fs::path temp = target;
  temp += ".tmp";
  {
    std::ofstream out(temp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot open " + temp.string() + " for writing");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw Error(ErrorCode::IoError, "short write to " + temp.string());
  }
  fs::rename(temp, target);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace embedprobe
