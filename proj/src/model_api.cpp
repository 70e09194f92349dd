#include "pte/model_api.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "base64.hpp"
#include "pte/error.hpp"

namespace pte {

void BackendSuite::validate() const {
  std::string missing;
  const auto check = [&](bool present, const char* name) {
    if (!present) missing += missing.empty() ? name : std::string(", ") + name;
  };
  check(random_api != nullptr, "random_api");
  check(variation_api != nullptr, "variation_api");
  check(text_to_image != nullptr, "text_to_image");
  check(encode_image != nullptr, "encode_image");
  check(caption != nullptr, "caption");
  if (!missing.empty()) throw ConfigError("backend suite is missing: " + missing);
}

std::shared_ptr<PrivateDataset> load_ptev1_dataset(const std::filesystem::path& path) {
  const auto rows = read_ptev1(path);
  std::vector<Image> images;
  images.reserve(static_cast<std::size_t>(rows.rows()));
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    Image img;
    img.pixels = rows.row(i).transpose();
    img.mime = "application/x-pte-vector";
    images.push_back(std::move(img));
  }
  if (images.empty()) throw InputError("private dataset " + path.string() + " is empty");
  return std::make_shared<InMemoryPrivateDataset>(std::move(images));
}

std::shared_ptr<PrivateDataset> load_image_directory(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw InputError("private image directory not found: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    auto ext = e.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
    if (ext == ".png" || ext == ".jpg" || ext == ".jpeg" || ext == ".webp") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw InputError("no images in " + dir.string());

  std::vector<Image> images;
  for (const auto& f : files) {
    std::ifstream in(f, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    Image img;
    img.encoded = detail::base64_encode(ss.str());
    auto ext = f.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
    img.mime = ext == ".png" ? "image/png" : ext == ".webp" ? "image/webp" : "image/jpeg";
    images.push_back(std::move(img));
  }
  return std::make_shared<InMemoryPrivateDataset>(std::move(images));
}

}  // namespace pte
