#include "pte/mock_world.hpp"

#include <charconv>
#include <cmath>
#include <random>
#include <sstream>

#include "pte/error.hpp"

namespace pte {

void MockWorldConfig::validate() const {
  std::vector<std::string> problems;
  if (latent_dim < 1) problems.push_back("mock.latent_dim must be >= 1");
  if (!(variation_scale > 0.0) || !std::isfinite(variation_scale))
    problems.push_back("mock.variation_scale must be > 0");
  if (!private_mixture.empty()) {
    double total = 0.0;
    for (std::size_t i = 0; i < private_mixture.size(); ++i) {
      const auto& c = private_mixture[i];
      const std::string at = "mock.private_mixture[" + std::to_string(i) + "]";
      if (c.mean.size() != latent_dim)
        problems.push_back(at + ".mean must have latent_dim entries");
      if (!(c.stddev >= 0.0)) problems.push_back(at + ".std must be >= 0");
      if (!(c.weight > 0.0)) problems.push_back(at + ".weight must be > 0");
      total += c.weight;
    }
    if (std::abs(total - 1.0) > 1e-9) problems.push_back("mock.private_mixture weights must sum to 1");
  }
  if (!problems.empty()) {
    std::string msg = "invalid mock world configuration:";
    for (const auto& p : problems) msg += "\n  " + p;
    throw ConfigError(msg);
  }
}

std::string serialize_latent(const Eigen::Ref<const Eigen::VectorXd>& theta) {
  std::string out = "v:";
  char buf[64];
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    if (i) out.push_back(',');
    const double x = theta[i] == 0.0 ? 0.0 : theta[i];  // no "-0"
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    out.append(buf, res.ptr);
  }
  return out;
}

Eigen::VectorXd parse_latent(std::string_view text, Eigen::Index expected_dim) {
  const auto fail = [&](const std::string& why) -> ParseError {
    return ParseError("malformed latent caption '" + std::string(text.substr(0, 80)) + "': " + why);
  };
  if (text.substr(0, 2) != "v:") throw fail("missing 'v:' prefix");
  std::vector<double> vals;
  std::string_view rest = text.substr(2);
  while (true) {
    const auto comma = rest.find(',');
    const auto token = rest.substr(0, comma);
    double x = 0.0;
    const auto res = std::from_chars(token.data(), token.data() + token.size(), x);
    if (token.empty() || res.ec != std::errc() || res.ptr != token.data() + token.size())
      throw fail("bad component '" + std::string(token) + "'");
    if (!std::isfinite(x)) throw fail("non-finite component");
    vals.push_back(x);
    if (comma == std::string_view::npos) break;
    rest = rest.substr(comma + 1);
  }
  if (expected_dim >= 0 && static_cast<Eigen::Index>(vals.size()) != expected_dim)
    throw fail("expected " + std::to_string(expected_dim) + " components, got " +
               std::to_string(vals.size()));
  return Eigen::Map<Eigen::VectorXd>(vals.data(), static_cast<Eigen::Index>(vals.size()));
}

MockWorld::MockWorld(MockWorldConfig config) : config_(std::move(config)) {
  config_.validate();
  const int m = config_.latent_dim;
  Rng rng(config_.render_matrix_seed);
  Eigen::MatrixXd g(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) g(i, j) = rng.normal();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  render_ = qr.householderQ() * Eigen::MatrixXd::Identity(m, m);
  unrender_ = render_.completeOrthogonalDecomposition().pseudoInverse();
}

std::vector<std::string> MockWorld::random(std::size_t n, Rng& rng) {
  std::vector<std::string> out;
  out.reserve(n);
  Eigen::VectorXd theta(config_.latent_dim);
  for (std::size_t k = 0; k < n; ++k) {
    for (Eigen::Index i = 0; i < theta.size(); ++i) theta[i] = rng.uniform(-1.0, 1.0);
    out.push_back(serialize_latent(theta));
  }
  return out;
}

std::vector<std::string> MockWorld::vary(std::span<const std::string> parents,
                                         std::size_t per_parent, Rng& rng) {
  std::vector<std::string> out;
  out.reserve(parents.size() * per_parent);
  for (const auto& p : parents) {
    const Eigen::VectorXd theta = parse_latent(p, config_.latent_dim);
    for (std::size_t r = 0; r < per_parent; ++r) {
      Eigen::VectorXd child = theta;
      for (Eigen::Index i = 0; i < child.size(); ++i)
        child[i] += rng.normal(0.0, config_.variation_scale);
      out.push_back(serialize_latent(child));
    }
  }
  return out;
}

std::vector<Image> MockWorld::render(std::span<const std::string> texts) {
  std::vector<Image> out;
  out.reserve(texts.size());
  for (const auto& t : texts) {
    Image img;
    img.pixels = render_ * parse_latent(t, config_.latent_dim);
    img.mime = "application/x-pte-vector";
    out.push_back(std::move(img));
  }
  return out;
}

RowMatrix<double> MockWorld::encode(std::span<const Image> images) {
  RowMatrix<double> out(static_cast<Eigen::Index>(images.size()), config_.latent_dim);
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (images[i].pixels.size() != config_.latent_dim)
      throw InputError("mock encoder: image " + std::to_string(i) + " has wrong size");
    out.row(static_cast<Eigen::Index>(i)) = images[i].pixels.transpose();
  }
  return out;
}

std::vector<std::string> MockWorld::caption(std::span<const Image> images) {
  std::vector<std::string> out;
  out.reserve(images.size());
  for (const auto& img : images) {
    if (img.pixels.size() != config_.latent_dim)
      throw InputError("mock captioner: image has wrong size");
    out.push_back(serialize_latent(unrender_ * img.pixels));
  }
  return out;
}

MixtureSample MockWorld::sample_private(std::size_t n, Rng& rng) const {
  if (config_.private_mixture.empty())
    throw ConfigError("mock world has no private_mixture to sample from");
  std::vector<double> weights;
  for (const auto& c : config_.private_mixture) weights.push_back(c.weight);
  std::discrete_distribution<int> pick(weights.begin(), weights.end());

  MixtureSample s;
  s.latents.resize(static_cast<Eigen::Index>(n), config_.latent_dim);
  s.component.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const int c = pick(rng);
    s.component[k] = c;
    const auto& comp = config_.private_mixture[static_cast<std::size_t>(c)];
    for (int i = 0; i < config_.latent_dim; ++i)
      s.latents(static_cast<Eigen::Index>(k), i) = comp.mean[i] + comp.stddev * rng.normal();
  }
  return s;
}

std::vector<Image> MockWorld::render_latents(const RowMatrix<double>& latents) const {
  std::vector<Image> out;
  out.reserve(static_cast<std::size_t>(latents.rows()));
  for (Eigen::Index k = 0; k < latents.rows(); ++k) {
    Image img;
    img.pixels = render_ * latents.row(k).transpose();
    img.mime = "application/x-pte-vector";
    out.push_back(std::move(img));
  }
  return out;
}

BackendSuite MockWorld::suite(const std::shared_ptr<MockWorld>& world) {
  return BackendSuite{world, world, world, world, world};
}

}  // namespace pte
