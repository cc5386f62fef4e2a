// SPDX-License-Identifier: Apache-2.0
#include "stssl/model/checkpoint.hpp"

#include "stssl/model/backbone.hpp"

#include <zlib.h>

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

static_assert(std::endian::native == std::endian::little, "container I/O assumes a little-endian host");

namespace stssl::model {

namespace {

constexpr std::array<char, 8> kMagic{'S', 'T', 'S', 'S', 'L', 'C', 'K', '1'};

template <typename T>
void put(std::string& out, T value) {
  char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  out.append(bytes, sizeof(T));
}

template <typename T>
T get(const std::string& in, std::size_t& pos) {
  if (pos + sizeof(T) > in.size()) throw Error("container: truncated file");
  T value;
  std::memcpy(&value, in.data() + pos, sizeof(T));
  pos += sizeof(T);
  return value;
}

std::uint32_t crc_of(const char* data, std::size_t n) {
  uLong crc = crc32(0L, Z_NULL, 0);
  while (n > 0) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(n, 1u << 30));
    crc = crc32(crc, reinterpret_cast<const Bytef*>(data), chunk);
    data += chunk;
    n -= chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

}  // namespace

std::size_t Container::find(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return i;
  }
  return names.size();
}

void write_container(const std::filesystem::path& path, const Container& container) {
  if (container.names.size() != container.tensors.size()) throw Error("container: names and tensors differ");
  nlohmann::json table = nlohmann::json::array();
  std::uint64_t offset = 0;
  for (std::size_t i = 0; i < container.names.size(); ++i) {
    const Mat& t = container.tensors[i];
    const std::uint64_t nbytes = static_cast<std::uint64_t>(t.size()) * sizeof(Real);
    table.push_back({{"name", container.names[i]},
                     {"dtype", "float64"},
                     {"shape", {t.rows(), t.cols()}},
                     {"offset", offset},
                     {"nbytes", nbytes}});
    offset += nbytes;
  }
  const std::string header = nlohmann::json{{"metadata", container.metadata}, {"tensors", table}}.dump();

  std::string blob;
  blob.reserve(8 + 4 + 8 + header.size() + offset + 4);
  blob.append(kMagic.data(), kMagic.size());
  put<std::uint32_t>(blob, kContainerVersion);
  put<std::uint64_t>(blob, header.size());
  blob += header;
  for (const Mat& t : container.tensors) {
    blob.append(reinterpret_cast<const char*>(t.data()), static_cast<std::size_t>(t.size()) * sizeof(Real));
  }
  put<std::uint32_t>(blob, crc_of(blob.data(), blob.size()));

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
    out.flush();
    if (!out) {
      out.close();
      std::filesystem::remove(tmp);
      throw Error("write failed for " + path.string());
    }
  }
  std::filesystem::rename(tmp, path);
}

Container read_container(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  const std::string blob = ss.str();

  if (blob.size() < kMagic.size() + 4 + 8 + 4 || std::memcmp(blob.data(), kMagic.data(), kMagic.size()) != 0) {
    throw Error(path.string() + ": not a checkpoint (bad magic)");
  }
  std::size_t pos = kMagic.size();
  const auto version = get<std::uint32_t>(blob, pos);
  if (version != kContainerVersion) {
    throw Error(path.string() + ": unsupported checkpoint version " + std::to_string(version));
  }
  std::size_t tail = blob.size() - 4;
  const auto stored_crc = get<std::uint32_t>(blob, tail);
  if (stored_crc != crc_of(blob.data(), blob.size() - 4)) throw Error(path.string() + ": checksum mismatch");

  const auto header_len = get<std::uint64_t>(blob, pos);
  if (pos + header_len > blob.size() - 4) throw Error(path.string() + ": truncated header");
  const auto header = nlohmann::json::parse(blob.substr(pos, header_len));
  pos += header_len;
  const std::size_t payload = pos;
  const std::size_t payload_end = blob.size() - 4;

  Container c;
  c.metadata = header.at("metadata");
  for (const auto& e : header.at("tensors")) {
    if (e.at("dtype").get<std::string>() != "float64") throw Error(path.string() + ": unsupported dtype");
    const auto rows = e.at("shape").at(0).get<Eigen::Index>();
    const auto cols = e.at("shape").at(1).get<Eigen::Index>();
    const auto offset = e.at("offset").get<std::uint64_t>();
    const auto nbytes = e.at("nbytes").get<std::uint64_t>();
    if (nbytes != static_cast<std::uint64_t>(rows * cols) * sizeof(Real) || payload + offset + nbytes > payload_end) {
      throw Error(path.string() + ": corrupt tensor table");
    }
    Mat t(rows, cols);
    if (nbytes) std::memcpy(t.data(), blob.data() + payload + offset, nbytes);
    c.names.push_back(e.at("name").get<std::string>());
    c.tensors.push_back(std::move(t));
  }
  return c;
}

void add_snapshot(Container& container, const std::string& prefix, const ParamSnapshot& params) {
  for (std::size_t i = 0; i < params.size(); ++i) container.add(prefix + params.name(i), params[i]);
}

ParamSnapshot take_snapshot(const Container& container, const std::string& prefix,
                            const std::vector<std::pair<std::string, std::pair<int, int>>>& layout) {
  ParamSnapshot p;
  for (const auto& [name, shape] : layout) {
    const std::size_t i = container.find(prefix + name);
    if (i == container.names.size()) throw Error("checkpoint is missing tensor '" + prefix + name + "'");
    const Mat& t = container.tensors[i];
    if (t.rows() != shape.first || t.cols() != shape.second) {
      throw Error("checkpoint tensor '" + prefix + name + "' has the wrong shape");
    }
    p.add(name, t);
  }
  return p;
}

void save_model_checkpoint(const std::filesystem::path& path, const ModelCheckpoint& checkpoint) {
  Container c;
  c.metadata = {{"kind", "model"},
                {"config", to_json(checkpoint.config)},
                {"step", checkpoint.step},
                {"role", checkpoint.role},
                {"extra", checkpoint.extra}};
  add_snapshot(c, "", checkpoint.params);
  write_container(path, c);
}

ModelCheckpoint load_model_checkpoint(const std::filesystem::path& path) {
  const Container c = read_container(path);
  ModelCheckpoint m;
  const auto& meta = c.metadata;
  if (meta.value("kind", "") == "model") {
    m.config = backbone_from_json(meta.at("config"));
    m.step = meta.at("step").get<std::int64_t>();
    m.role = meta.at("role").get<std::string>();
    m.extra = meta.value("extra", nlohmann::json::object());
    m.params = take_snapshot(c, "", Backbone(m.config).layout());
    return m;
  }
  throw Error(path.string() + ": not a model checkpoint");
}

}  // namespace stssl::model
