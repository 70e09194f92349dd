#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "pte/embedding.hpp"
#include "pte/rng.hpp"

namespace pte {

/// A rendered image. Mock backends fill `pixels`; remote backends carry the
/// base64 payload returned by (or sent to) the image endpoints.
struct Image {
  Eigen::VectorXd pixels;
  std::string encoded;
  std::string mime = "image/png";
};

/// Unconditional caption generator.
class RandomApi {
 public:
  virtual ~RandomApi() = default;
  virtual std::vector<std::string> random(std::size_t n, Rng& rng) = 0;
};

/// Caption mutator. Output is parent-major: result[i * per_parent + r] is
/// the r-th child of parents[i].
class VariationApi {
 public:
  virtual ~VariationApi() = default;
  virtual std::vector<std::string> vary(std::span<const std::string> parents,
                                        std::size_t per_parent, Rng& rng) = 0;
};

class TextToImage {
 public:
  virtual ~TextToImage() = default;
  virtual std::vector<Image> render(std::span<const std::string> texts) = 0;
};

/// Maps images to fixed-dimension feature rows (one row per image).
class ImageEncoder {
 public:
  virtual ~ImageEncoder() = default;
  virtual RowMatrix<double> encode(std::span<const Image> images) = 0;
};

class Captioner {
 public:
  virtual ~Captioner() = default;
  virtual std::vector<std::string> caption(std::span<const Image> images) = 0;
};

/// The five model contracts one run needs.
struct BackendSuite {
  std::shared_ptr<RandomApi> random_api;
  std::shared_ptr<VariationApi> variation_api;
  std::shared_ptr<TextToImage> text_to_image;
  std::shared_ptr<ImageEncoder> encode_image;
  std::shared_ptr<Captioner> caption;

  /// Throws ConfigError naming every missing contract.
  void validate() const;
};

/// Which stage is reading the private images.
enum class PrivateReader { captioner, image_encoder };

inline std::string_view to_string(PrivateReader r) {
  return r == PrivateReader::captioner ? "captioner" : "image_encoder";
}

/// Handle to the private image dataset. Implementations may audit reads.
class PrivateDataset {
 public:
  virtual ~PrivateDataset() = default;
  virtual std::size_t size() const = 0;
  virtual std::vector<Image> read_images(PrivateReader reader) const = 0;
};

class InMemoryPrivateDataset : public PrivateDataset {
 public:
  explicit InMemoryPrivateDataset(std::vector<Image> images) : images_(std::move(images)) {}
  std::size_t size() const override { return images_.size(); }
  std::vector<Image> read_images(PrivateReader) const override { return images_; }

 private:
  std::vector<Image> images_;
};

/// Private dataset stored as PTEV1 rows (each row one image raster).
std::shared_ptr<PrivateDataset> load_ptev1_dataset(const std::filesystem::path& path);

/// Private dataset stored as a directory of image files, read as base64.
std::shared_ptr<PrivateDataset> load_image_directory(const std::filesystem::path& dir);

}  // namespace pte
