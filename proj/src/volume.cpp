#include "contraseg/volume.hpp"

#include <nlohmann/json.hpp>

#include <bit>
#include <cstring>
#include <fstream>

static_assert(std::endian::native == std::endian::little,
              "raw array I/O assumes a little-endian host");

namespace contraseg::data {

using nlohmann::json;

void Volume::validate() const {
  check(depth >= 1 && height >= 1 && width >= 1, "volume: degenerate shape");
  check(voxels.size() == voxel_count(), "volume: voxel buffer size mismatch");
  if (has_labels()) {
    check(labels.size() == voxel_count(),
          "volume: label shape differs from voxels");
    for (auto lab : labels)
      check(lab >= 0, "volume: negative label value");
  }
}

namespace {

template <typename T>
void write_raw(const std::filesystem::path& path, const std::vector<T>& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for write: " + path.string());
  out.write(reinterpret_cast<const char*>(data.data()),
            static_cast<std::streamsize>(data.size() * sizeof(T)));
  if (!out) throw std::runtime_error("short write: " + path.string());
}

template <typename T>
std::vector<T> read_raw(const std::filesystem::path& path, std::size_t count) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for read: " + path.string());
  std::vector<T> data(count);
  in.read(reinterpret_cast<char*>(data.data()),
          static_cast<std::streamsize>(count * sizeof(T)));
  if (static_cast<std::size_t>(in.gcount()) != count * sizeof(T))
    throw std::runtime_error("short read: " + path.string());
  return data;
}

}  // namespace

void write_volume_dir(const Volume& v, const std::filesystem::path& dir) {
  v.validate();
  std::filesystem::create_directories(dir);
  json meta;
  meta["format"] = "contraseg-volume";
  meta["version"] = 1;
  meta["id"] = v.id;
  meta["shape"] = {v.depth, v.height, v.width};
  meta["dtype"] = "float32";
  meta["has_labels"] = v.has_labels();
  if (v.has_labels()) meta["label_dtype"] = "int32";
  std::ofstream meta_out(dir / "meta.json");
  meta_out << meta.dump(2) << "\n";
  write_raw(dir / "image.raw", v.voxels);
  if (v.has_labels()) write_raw(dir / "labels.raw", v.labels);
}

Volume read_volume_dir(const std::filesystem::path& dir) {
  std::ifstream meta_in(dir / "meta.json");
  if (!meta_in)
    throw std::runtime_error("missing meta.json in " + dir.string());
  json meta = json::parse(meta_in);
  if (meta.value("format", "") != "contraseg-volume")
    throw std::runtime_error("not a volume directory: " + dir.string());
  if (meta.value("dtype", "") != "float32")
    throw std::runtime_error("unsupported image dtype in " + dir.string());

  Volume v;
  v.id = meta.at("id").get<std::string>();
  auto shape = meta.at("shape");
  v.depth = shape.at(0).get<int>();
  v.height = shape.at(1).get<int>();
  v.width = shape.at(2).get<int>();
  v.voxels = read_raw<float>(dir / "image.raw", v.voxel_count());
  if (meta.value("has_labels", false)) {
    if (meta.value("label_dtype", "") != "int32")
      throw std::runtime_error("unsupported label dtype in " + dir.string());
    v.labels = read_raw<std::int32_t>(dir / "labels.raw", v.voxel_count());
  }
  v.validate();
  return v;
}

void write_corpus(const std::vector<Volume>& corpus,
                  const std::filesystem::path& root) {
  std::filesystem::create_directories(root);
  json manifest;
  manifest["format"] = "contraseg-corpus";
  manifest["version"] = 1;
  json entries = json::array();
  for (const auto& v : corpus) {
    write_volume_dir(v, root / v.id);
    entries.push_back(v.id);
  }
  manifest["volumes"] = entries;
  std::ofstream out(root / "manifest.json");
  out << manifest.dump(2) << "\n";
}

std::vector<Volume> read_corpus(const std::filesystem::path& root) {
  std::ifstream in(root / "manifest.json");
  if (!in)
    throw std::runtime_error("missing manifest.json in " + root.string());
  json manifest = json::parse(in);
  std::vector<Volume> corpus;
  for (const auto& id : manifest.at("volumes"))
    corpus.push_back(read_volume_dir(root / id.get<std::string>()));
  return corpus;
}

}  // namespace contraseg::data
