#pragma once

#include <complex>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "msfem/types.hpp"

namespace msfem {

class CorruptArchive : public Error {
 public:
  using Error::Error;
};

/// Binary container: "MSFEMBIN", u32 version, u64 header length, JSON header
/// (parameters plus the section table), raw little-endian section payloads in
/// table order, u32 CRC-32 of everything before it.
struct Archive {
  nlohmann::json header = nlohmann::json::object();
  std::map<std::string, std::vector<double>> f64;
  std::map<std::string, std::vector<std::complex<double>>> c128;
  std::map<std::string, std::vector<std::int64_t>> i64;
};

inline constexpr std::uint32_t kArchiveVersion = 1;

std::vector<char> encode_archive(const Archive& archive);
Archive decode_archive(const std::vector<char>& bytes);

/// Writes through a temporary file and renames, so readers never see a
/// partial archive.
void write_archive(const std::filesystem::path& path, const Archive& archive);
/// Throws CorruptArchive on a bad magic, version, layout or checksum.
Archive read_archive(const std::filesystem::path& path);

void put_sparse(Archive& archive, const std::string& name, const BasisMatrix& matrix);
BasisMatrix get_sparse(const Archive& archive, const std::string& name);

void put_vector(Archive& archive, const std::string& name, const Eigen::VectorXcd& v);
Eigen::VectorXcd get_vector(const Archive& archive, const std::string& name);

}  // namespace msfem
