#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "pte/model_api.hpp"

namespace pte {

struct MixtureComponent {
  Eigen::VectorXd mean;
  double stddev = 0.1;
  double weight = 1.0;
};

/// Parameters of the vector world: captions encode a latent vector, images
/// are a fixed orthogonal transform of it, and the encoder is the identity.
struct MockWorldConfig {
  int latent_dim = 8;
  double variation_scale = 0.1;
  std::uint64_t render_matrix_seed = 1;
  std::vector<MixtureComponent> private_mixture;

  /// Throws ConfigError listing every problem.
  void validate() const;
};

/// "v:x1,x2,...,xm" using shortest round-trip decimal for every component.
std::string serialize_latent(const Eigen::Ref<const Eigen::VectorXd>& theta);

/// Strict inverse of serialize_latent. `expected_dim` < 0 accepts any length.
Eigen::VectorXd parse_latent(std::string_view text, Eigen::Index expected_dim = -1);

struct MixtureSample {
  RowMatrix<double> latents;
  std::vector<int> component;
};

class MockWorld final : public RandomApi,
                        public VariationApi,
                        public TextToImage,
                        public ImageEncoder,
                        public Captioner {
 public:
  explicit MockWorld(MockWorldConfig config);

  const MockWorldConfig& config() const { return config_; }
  const Eigen::MatrixXd& render_matrix() const { return render_; }

  std::vector<std::string> random(std::size_t n, Rng& rng) override;
  std::vector<std::string> vary(std::span<const std::string> parents, std::size_t per_parent,
                                Rng& rng) override;
  std::vector<Image> render(std::span<const std::string> texts) override;
  RowMatrix<double> encode(std::span<const Image> images) override;
  std::vector<std::string> caption(std::span<const Image> images) override;

  /// Latents drawn from the configured private mixture.
  MixtureSample sample_private(std::size_t n, Rng& rng) const;
  /// One image per latent row.
  std::vector<Image> render_latents(const RowMatrix<double>& latents) const;

  static BackendSuite suite(const std::shared_ptr<MockWorld>& world);

 private:
  MockWorldConfig config_;
  Eigen::MatrixXd render_;
  Eigen::MatrixXd unrender_;
};

}  // namespace pte
