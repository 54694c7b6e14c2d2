#include "msfem/container.hpp"

#include <cstring>
#include <fstream>
#include <iterator>

#include <zlib.h>

namespace msfem {
namespace {

constexpr char kMagic[8] = {'M', 'S', 'F', 'E', 'M', 'B', 'I', 'N'};

template <typename T>
void append_pod(std::vector<char>& out, const T& value) {
  const char* p = reinterpret_cast<const char*>(&value);
  out.insert(out.end(), p, p + sizeof(T));
}

template <typename T>
void append_array(std::vector<char>& out, const std::vector<T>& values) {
  const char* p = reinterpret_cast<const char*>(values.data());
  out.insert(out.end(), p, p + values.size() * sizeof(T));
}

class Cursor {
 public:
  Cursor(const std::vector<char>& bytes, std::size_t end) : bytes_(bytes), end_(end) {}

  template <typename T>
  T pod() {
    T value;
    take(&value, sizeof(T));
    return value;
  }

  template <typename T>
  std::vector<T> array(std::size_t count) {
    if (count > (end_ - pos_) / sizeof(T)) throw CorruptArchive("archive: section exceeds payload");
    std::vector<T> values(count);
    take(values.data(), count * sizeof(T));
    return values;
  }

  std::string string(std::size_t length) {
    if (length > end_ - pos_) throw CorruptArchive("archive: header exceeds payload");
    std::string s(bytes_.data() + pos_, length);
    pos_ += length;
    return s;
  }

  std::size_t position() const { return pos_; }

 private:
  void take(void* dst, std::size_t size) {
    if (size > end_ - pos_) throw CorruptArchive("archive: truncated");
    std::memcpy(dst, bytes_.data() + pos_, size);
    pos_ += size;
  }

  const std::vector<char>& bytes_;
  std::size_t end_;
  std::size_t pos_ = 0;
};

std::uint32_t checksum(const char* data, std::size_t size) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed large buffers in chunks.
  while (size > 0) {
    const uInt chunk = static_cast<uInt>(std::min<std::size_t>(size, 1u << 30));
    crc = crc32(crc, reinterpret_cast<const Bytef*>(data), chunk);
    data += chunk;
    size -= chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

}  // namespace

std::vector<char> encode_archive(const Archive& archive) {
  nlohmann::json header = archive.header;
  nlohmann::json table = nlohmann::json::array();
  for (const auto& [name, v] : archive.f64) table.push_back({{"name", name}, {"type", "f64"}, {"count", v.size()}});
  for (const auto& [name, v] : archive.c128) table.push_back({{"name", name}, {"type", "c128"}, {"count", v.size()}});
  for (const auto& [name, v] : archive.i64) table.push_back({{"name", name}, {"type", "i64"}, {"count", v.size()}});
  header["sections"] = table;
  const std::string text = header.dump();

  std::vector<char> out(kMagic, kMagic + sizeof(kMagic));
  append_pod(out, kArchiveVersion);
  append_pod(out, static_cast<std::uint64_t>(text.size()));
  out.insert(out.end(), text.begin(), text.end());
  for (const auto& [name, v] : archive.f64) append_array(out, v);
  for (const auto& [name, v] : archive.c128) append_array(out, v);
  for (const auto& [name, v] : archive.i64) append_array(out, v);
  append_pod(out, checksum(out.data(), out.size()));
  return out;
}

Archive decode_archive(const std::vector<char>& bytes) {
  if (bytes.size() < sizeof(kMagic) + 16) throw CorruptArchive("archive: too short");
  const std::size_t body = bytes.size() - sizeof(std::uint32_t);
  std::uint32_t stored;
  std::memcpy(&stored, bytes.data() + body, sizeof(stored));
  if (stored != checksum(bytes.data(), body)) throw CorruptArchive("archive: checksum mismatch");
  if (std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) throw CorruptArchive("archive: bad magic");

  Cursor cur(bytes, body);
  cur.string(sizeof(kMagic));
  if (cur.pod<std::uint32_t>() != kArchiveVersion) throw CorruptArchive("archive: unsupported version");
  const auto header_len = cur.pod<std::uint64_t>();
  Archive archive;
  try {
    archive.header = nlohmann::json::parse(cur.string(header_len));
  } catch (const nlohmann::json::exception& e) {
    throw CorruptArchive(std::string("archive: bad header: ") + e.what());
  }
  if (!archive.header.contains("sections")) throw CorruptArchive("archive: missing section table");
  for (const auto& entry : archive.header["sections"]) {
    const auto name = entry.at("name").get<std::string>();
    const auto type = entry.at("type").get<std::string>();
    const auto count = entry.at("count").get<std::size_t>();
    if (type == "f64") {
      archive.f64[name] = cur.array<double>(count);
    } else if (type == "c128") {
      archive.c128[name] = cur.array<std::complex<double>>(count);
    } else if (type == "i64") {
      archive.i64[name] = cur.array<std::int64_t>(count);
    } else {
      throw CorruptArchive("archive: unknown section type " + type);
    }
  }
  if (cur.position() != body) throw CorruptArchive("archive: trailing bytes");
  archive.header.erase("sections");
  return archive;
}

void write_archive(const std::filesystem::path& path, const Archive& archive) {
  const auto bytes = encode_archive(archive);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + tmp.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Archive read_archive(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_archive(bytes);
}

void put_sparse(Archive& archive, const std::string& name, const BasisMatrix& matrix) {
  BasisMatrix m = matrix;
  m.makeCompressed();
  archive.i64[name + ".shape"] = {m.rows(), m.cols()};
  archive.i64[name + ".outer"].assign(m.outerIndexPtr(), m.outerIndexPtr() + m.outerSize() + 1);
  archive.i64[name + ".inner"].assign(m.innerIndexPtr(), m.innerIndexPtr() + m.nonZeros());
  archive.f64[name + ".values"].assign(m.valuePtr(), m.valuePtr() + m.nonZeros());
}

BasisMatrix get_sparse(const Archive& archive, const std::string& name) {
  try {
    const auto& shape = archive.i64.at(name + ".shape");
    const auto& outer = archive.i64.at(name + ".outer");
    const auto& inner = archive.i64.at(name + ".inner");
    const auto& values = archive.f64.at(name + ".values");
    if (shape.size() != 2 || static_cast<std::int64_t>(outer.size()) != shape[1] + 1 ||
        inner.size() != values.size() || outer.back() != static_cast<std::int64_t>(values.size())) {
      throw CorruptArchive("archive: inconsistent sparse section " + name);
    }
    BasisMatrix m(shape[0], shape[1]);
    m.resizeNonZeros(static_cast<Eigen::Index>(values.size()));
    for (std::size_t i = 0; i < outer.size(); ++i) m.outerIndexPtr()[i] = static_cast<int>(outer[i]);
    for (std::size_t i = 0; i < inner.size(); ++i) {
      if (inner[i] < 0 || inner[i] >= shape[0]) throw CorruptArchive("archive: row index out of range in " + name);
      m.innerIndexPtr()[i] = static_cast<int>(inner[i]);
      m.valuePtr()[i] = values[i];
    }
    return m;
  } catch (const std::out_of_range&) {
    throw CorruptArchive("archive: missing sparse section " + name);
  }
}

void put_vector(Archive& archive, const std::string& name, const Eigen::VectorXcd& v) {
  archive.c128[name].assign(v.data(), v.data() + v.size());
}

Eigen::VectorXcd get_vector(const Archive& archive, const std::string& name) {
  const auto it = archive.c128.find(name);
  if (it == archive.c128.end()) throw CorruptArchive("archive: missing vector " + name);
  return Eigen::Map<const Eigen::VectorXcd>(it->second.data(), static_cast<Eigen::Index>(it->second.size()));
}

}  // namespace msfem
