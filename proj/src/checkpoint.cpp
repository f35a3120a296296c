#include "dds/checkpoint.hpp"

#include <json.hpp>

#include <cstring>
#include <fstream>

namespace dds {

namespace {

constexpr char kMagic[8] = {'D', 'D', 'S', 'C', 'K', 'P', 'T', '1'};

nlohmann::json meta_to_json(const CheckpointMeta& m) {
  nlohmann::json j;
  j["profile"] = m.net.profile;
  j["blocks_n"] = m.net.blocks_n;
  j["da_kernel_size"] = m.net.da_kernel_size;
  j["enable_da"] = m.net.enable_da;
  j["enable_mci"] = m.net.enable_mci;
  j["da_on_normalized"] = m.net.da_on_normalized;
  j["norm_mean"] = m.net.norm_mean;
  j["norm_std"] = m.net.norm_std;
  j["head_channels"] = m.net.head_channels;
  j["iteration"] = m.iteration;
  j["seed"] = m.seed;
  j["width"] = m.width;
  j["height"] = m.height;
  return j;
}

CheckpointMeta meta_from_json(const nlohmann::json& j) {
  CheckpointMeta m;
  m.net.profile = j.at("profile").get<std::string>();
  m.net.blocks_n = j.at("blocks_n").get<int>();
  m.net.da_kernel_size = j.at("da_kernel_size").get<int>();
  m.net.enable_da = j.at("enable_da").get<bool>();
  m.net.enable_mci = j.at("enable_mci").get<bool>();
  m.net.da_on_normalized = j.at("da_on_normalized").get<bool>();
  m.net.norm_mean = j.at("norm_mean").get<std::array<double, 3>>();
  m.net.norm_std = j.at("norm_std").get<std::array<double, 3>>();
  m.net.head_channels = j.at("head_channels").get<int>();
  m.iteration = j.at("iteration").get<int>();
  m.seed = j.at("seed").get<std::uint64_t>();
  m.width = j.at("width").get<int>();
  m.height = j.at("height").get<int>();
  return m;
}

void write_u64(std::ostream& os, std::uint64_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint64_t read_u64(std::istream& is) {
  std::uint64_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const DdsNet& net,
                     const CheckpointMeta& meta) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw DataError("save_checkpoint: cannot open " + path.string());

  os.write(kMagic, sizeof(kMagic));
  const std::string meta_str = meta_to_json(meta).dump();
  write_u64(os, meta_str.size());
  os.write(meta_str.data(), static_cast<std::streamsize>(meta_str.size()));

  write_u64(os, net.params().size());
  for (const ParamRef& p : net.params()) {
    write_u64(os, p.name.size());
    os.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
    write_u64(os, static_cast<std::uint64_t>(p.value->ndim()));
    for (int d = 0; d < p.value->ndim(); ++d) write_u64(os, static_cast<std::uint64_t>(p.value->dim(d)));
    os.write(reinterpret_cast<const char*>(p.value->data()),
             static_cast<std::streamsize>(p.value->size() * sizeof(double)));
  }
  if (!os) throw DataError("save_checkpoint: write failed for " + path.string());
}

namespace {

CheckpointMeta read_header(std::istream& is, const std::filesystem::path& path) {
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw DataError("checkpoint: bad magic in " + path.string());
  const std::uint64_t len = read_u64(is);
  std::string meta_str(len, '\0');
  is.read(meta_str.data(), static_cast<std::streamsize>(len));
  if (!is) throw DataError("checkpoint: truncated metadata in " + path.string());
  try {
    return meta_from_json(nlohmann::json::parse(meta_str));
  } catch (const nlohmann::json::exception& e) {
    throw DataError("checkpoint: malformed metadata: " + std::string(e.what()));
  }
}

}  // namespace

CheckpointMeta peek_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("checkpoint: cannot open " + path.string());
  return read_header(is, path);
}

std::pair<std::unique_ptr<DdsNet>, CheckpointMeta> load_checkpoint(
    const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("checkpoint: cannot open " + path.string());
  CheckpointMeta meta = read_header(is, path);

  auto net = std::make_unique<DdsNet>(meta.net);
  const std::uint64_t count = read_u64(is);
  if (count != net->params().size())
    throw DataError("checkpoint: tensor count does not match the architecture");

  for (ParamRef& p : net->params()) {
    const std::uint64_t name_len = read_u64(is);
    std::string name(name_len, '\0');
    is.read(name.data(), static_cast<std::streamsize>(name_len));
    if (name != p.name) throw DataError("checkpoint: unexpected tensor " + name);
    const std::uint64_t ndim = read_u64(is);
    if (ndim != static_cast<std::uint64_t>(p.value->ndim()))
      throw DataError("checkpoint: rank mismatch for " + name);
    for (int d = 0; d < p.value->ndim(); ++d)
      if (read_u64(is) != static_cast<std::uint64_t>(p.value->dim(d)))
        throw DataError("checkpoint: shape mismatch for " + name);
    is.read(reinterpret_cast<char*>(p.value->data()),
            static_cast<std::streamsize>(p.value->size() * sizeof(double)));
  }
  if (!is) throw DataError("checkpoint: truncated tensor data in " + path.string());
  return {std::move(net), meta};
}

}  // namespace dds
