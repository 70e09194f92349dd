#include "pte/evolution.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <numeric>
#include <random>
#include <unordered_map>

#include "pte/error.hpp"

namespace pte {

std::string_view to_string(Origin o) {
  switch (o) {
    case Origin::random_init: return "random_init";
    case Origin::voted: return "voted";
    case Origin::variant: return "variant";
  }
  return "variant";
}

Origin parse_origin(std::string_view s) {
  if (s == "random_init") return Origin::random_init;
  if (s == "voted") return Origin::voted;
  if (s == "variant") return Origin::variant;
  throw InputError("unknown candidate origin '" + std::string(s) + "'");
}

std::vector<std::string> CandidatePool::texts() const {
  std::vector<std::string> out;
  out.reserve(candidates.size());
  for (const auto& c : candidates) out.push_back(c.text);
  return out;
}

std::vector<std::size_t> choose_voted(const SelectionDistribution& probs, std::size_t count,
                                      int selection_multiplicity, Rng& rng) {
  const auto n = static_cast<std::size_t>(probs.probs.size());
  if (n == 0) throw InternalError("choose_voted: empty distribution");
  const double total = probs.probs.sum();
  if (!(probs.probs.minCoeff() >= 0.0) || std::abs(total - 1.0) > 1e-9)
    throw InternalError("choose_voted: invalid selection distribution");

  std::vector<std::size_t> out;
  out.reserve(count);
  if (selection_multiplicity == 1) {
    std::discrete_distribution<std::size_t> draw(probs.probs.data(), probs.probs.data() + n);
    for (std::size_t k = 0; k < count; ++k) out.push_back(draw(rng));
    return out;
  }
  if (count > n)
    throw InternalError("choose_voted: cannot take top " + std::to_string(count) + " of " +
                        std::to_string(n) + " candidates");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return probs.probs[static_cast<Eigen::Index>(a)] > probs.probs[static_cast<Eigen::Index>(b)];
  });
  out.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(count));
  return out;
}

Selection select_next(const CandidatePool& pool, const SelectionDistribution& probs,
                      const RunConfig& config, VariationApi& variation, IdSource& ids,
                      Rng& selection_rng, std::uint64_t variation_seed) {
  if (static_cast<std::size_t>(probs.probs.size()) != pool.size())
    throw InternalError("select_next: distribution has " + std::to_string(probs.probs.size()) +
                        " entries for a pool of " + std::to_string(pool.size()));
  const int next_gen = pool.generation + 1;
  const auto picked = choose_voted(probs, static_cast<std::size_t>(config.population),
                                   config.selection_multiplicity, selection_rng);

  Selection s;
  s.voted.reserve(picked.size());
  for (std::size_t i : picked) {
    const Candidate& src = pool.candidates[i];
    s.voted.push_back({ids.next(), src.text, next_gen, src.id, Origin::voted});
  }
  std::vector<std::string> voted_texts;
  voted_texts.reserve(s.voted.size());
  for (const auto& c : s.voted) voted_texts.push_back(c.text);

  const auto per_parent = static_cast<std::size_t>(config.next_variation_api_fold);
  const int batches = config.selection_multiplicity == 1 ? 1 : config.lookahead_degree - 1;
  for (int k = 0; k < batches; ++k) {
    Rng rng = Rng::derive(variation_seed, Stream::variation,
                          {static_cast<std::uint64_t>(pool.generation), static_cast<std::uint64_t>(k)});
    const auto texts = variation.vary(voted_texts, per_parent, rng);
    if (texts.size() != voted_texts.size() * per_parent)
      throw BackendError("variation_api returned " + std::to_string(texts.size()) +
                         " texts, expected " + std::to_string(voted_texts.size() * per_parent));
    for (std::size_t t = 0; t < texts.size(); ++t)
      s.variants.push_back(
          {ids.next(), texts[t], next_gen, s.voted[t / per_parent].id, Origin::variant});
  }

  s.next.generation = next_gen;
  if (config.selection_multiplicity > 1) s.next.candidates = s.voted;
  s.next.candidates.insert(s.next.candidates.end(), s.variants.begin(), s.variants.end());
  return s;
}

NoiseSchedule resolve_noise(const RunConfig& config) {
  if (config.iterations < 1 || !config.budget)
    return {0.0, std::max(config.iterations, 1)};
  try {
    return calibrate_sigma(*config.budget, config.iterations);
  } catch (const DomainError& e) {
    throw ConfigError(std::string("budget: ") + e.what());
  }
}

namespace {

/// Render+encode with reuse across generations, keyed by caption text.
class EmbeddingCache {
 public:
  explicit EmbeddingCache(const BackendSuite& b) : backends_(b) {}

  RowMatrix<double> embed(std::span<const std::string> texts) {
    std::vector<std::string> missing;
    for (const auto& t : texts)
      if (!cache_.count(t) && std::find(missing.begin(), missing.end(), t) == missing.end())
        missing.push_back(t);
    if (!missing.empty()) {
      const auto rows = render_and_encode(backends_, missing);
      for (std::size_t i = 0; i < missing.size(); ++i)
        cache_[missing[i]] = rows.row(static_cast<Eigen::Index>(i));
    }
    if (texts.empty()) return {};
    const Eigen::Index dim = cache_.at(texts.front()).size();
    RowMatrix<double> out(static_cast<Eigen::Index>(texts.size()), dim);
    for (std::size_t i = 0; i < texts.size(); ++i)
      out.row(static_cast<Eigen::Index>(i)) = cache_.at(texts[i]);
    return out;
  }

  void retain(const std::vector<std::string>& keep) {
    std::unordered_map<std::string, Eigen::RowVectorXd> next;
    for (const auto& t : keep)
      if (auto it = cache_.find(t); it != cache_.end()) next.emplace(t, it->second);
    cache_.swap(next);
  }

  static RowMatrix<double> render_and_encode(const BackendSuite& b,
                                             std::span<const std::string> texts) {
    const auto images = b.text_to_image->render(texts);
    if (images.size() != texts.size())
      throw BackendError("text_to_image returned " + std::to_string(images.size()) +
                         " images for " + std::to_string(texts.size()) + " texts");
    auto rows = b.encode_image->encode(images);
    if (static_cast<std::size_t>(rows.rows()) != texts.size())
      throw BackendError("encode_image returned " + std::to_string(rows.rows()) + " rows for " +
                         std::to_string(texts.size()) + " images");
    return rows;
  }

 private:
  const BackendSuite& backends_;
  std::unordered_map<std::string, Eigen::RowVectorXd> cache_;
};

CandidatePool initial_pool(const RunConfig& config, const BackendSuite& backends, IdSource& ids) {
  Rng rng = Rng::derive(config.seed, Stream::random_init);
  const auto texts = backends.random_api->random(static_cast<std::size_t>(config.population), rng);
  if (texts.size() != static_cast<std::size_t>(config.population))
    throw BackendError("random_api returned " + std::to_string(texts.size()) + " texts, expected " +
                       std::to_string(config.population));
  CandidatePool pool;
  pool.generation = 0;
  for (const auto& t : texts) pool.candidates.push_back({ids.next(), t, 0, std::nullopt, Origin::random_init});

  // Each fold round adds one variant of every random_init candidate.
  const std::vector<Candidate> seeds = pool.candidates;
  for (int round = 0; round < config.initial_variation_api_fold; ++round) {
    Rng vr = Rng::derive(config.seed, Stream::initial_variation, {static_cast<std::uint64_t>(round)});
    const auto children = backends.variation_api->vary(texts, 1, vr);
    if (children.size() != seeds.size())
      throw BackendError("variation_api returned the wrong number of texts at initialization");
    for (std::size_t i = 0; i < children.size(); ++i)
      pool.candidates.push_back({ids.next(), children[i], 0, seeds[i].id, Origin::variant});
  }
  return pool;
}

PrivateEmbeddings embed_private(const PrivateDataset& data,
                                std::span<const std::string> private_captions,
                                const RunConfig& config, const BackendSuite& backends,
                                std::shared_ptr<PrivateAccessLog> log) {
  RowMatrix<double> rows;
  if (config.voting_space == VotingSpace::image) {
    const auto images = data.read_images(PrivateReader::image_encoder);
    rows = backends.encode_image->encode(images);
  } else {
    if (private_captions.empty())
      throw ConfigError("voting_space \"text\" needs the private captions");
    rows = EmbeddingCache::render_and_encode(backends, private_captions);
  }
  return PrivateEmbeddings(EmbeddingSet(std::move(rows), config.metric), std::move(log));
}

[[noreturn]] void abort_generation(int g, const std::exception& e, RunObserver* observer) {
  if (observer) observer->on_abort(g, e);
  throw BackendError("generation " + std::to_string(g) + ": " + e.what());
}

RunResult evolve(const PrivateEmbeddings& e_priv, const RunConfig& config,
                 const NoiseSchedule& noise, const BackendSuite& backends, RunObserver* observer) {
  IdSource ids;
  EmbeddingCache cache(backends);
  RunResult result;
  result.noise = noise;

  CandidatePool pool;
  try {
    pool = initial_pool(config, backends, ids);
  } catch (const BackendError& e) {
    abort_generation(0, e, observer);
  } catch (const ParseError& e) {
    abort_generation(0, e, observer);
  }

  for (int g = 0; g < config.iterations; ++g) {
    GenerationRecord rec;
    try {
      const auto texts = pool.texts();
      RowMatrix<double> gen_rows;
      if (config.lookahead_degree == 0) {
        gen_rows = cache.embed(texts);
      } else {
        std::vector<EmbeddingSet> lookahead;
        for (int k = 0; k < config.lookahead_degree; ++k) {
          Rng rng = Rng::derive(config.seed, Stream::lookahead,
                                {static_cast<std::uint64_t>(g), static_cast<std::uint64_t>(k)});
          const auto varied = backends.variation_api->vary(texts, 1, rng);
          if (varied.size() != texts.size())
            throw BackendError("variation_api returned the wrong number of lookahead texts");
          lookahead.emplace_back(EmbeddingCache::render_and_encode(backends, varied), config.metric);
        }
        gen_rows = lookahead_average<double>(lookahead, config.normalize_lookahead).rows();
      }
      const EmbeddingSet generated(gen_rows, config.metric);

      rec.generation = g;
      rec.sigma = noise.sigma;
      rec.raw = nn_histogram(e_priv, generated);
      Rng noise_rng = Rng::derive(config.seed, Stream::noise, {static_cast<std::uint64_t>(g)});
      rec.noisy = privatize(rec.raw, noise.sigma, noise_rng);
      ++result.privatize_calls;
      rec.probs = normalize(rec.noisy);

      Rng sel_rng = Rng::derive(config.seed, Stream::selection, {static_cast<std::uint64_t>(g)});
      Selection sel = select_next(pool, rec.probs, config, *backends.variation_api, ids, sel_rng,
                                  config.seed);

      std::vector<std::string> voted_texts, variant_texts;
      for (const auto& c : sel.voted) voted_texts.push_back(c.text);
      for (const auto& c : sel.variants) variant_texts.push_back(c.text);
      rec.voted_embeddings = cache.embed(voted_texts);
      rec.variant_embeddings = cache.embed(variant_texts);
      cache.retain(sel.next.texts());

      rec.pool = std::move(pool);
      rec.embeddings = std::move(gen_rows);
      rec.voted = std::move(sel.voted);
      rec.variants = std::move(sel.variants);
      for (const auto& c : sel.next.candidates) rec.next_pool_ids.push_back(c.id);
      pool = std::move(sel.next);
    } catch (const BackendError& e) {
      abort_generation(g, e, observer);
    } catch (const ParseError& e) {
      abort_generation(g, e, observer);
    }

    spdlog::info("generation {}: pool {} -> next pool {}, max votes {:.0f}", g, rec.pool.size(),
                 pool.size(), rec.raw.counts.maxCoeff());
    if (observer) observer->on_generation(rec);
    result.trace.push_back(std::move(rec));
  }
  result.final_pool = std::move(pool);
  return result;
}

}  // namespace

RunResult run_aug_pe(const PrivateDataset& private_images,
                     std::span<const std::string> private_captions, const RunConfig& config,
                     const BackendSuite& backends, RunObserver* observer,
                     std::shared_ptr<PrivateAccessLog> access_log) {
  config.validate();
  backends.validate();
  const NoiseSchedule noise = resolve_noise(config);
  if (private_images.size() == 0) throw InputError("private dataset is empty");
  const auto e_priv =
      embed_private(private_images, private_captions, config, backends, std::move(access_log));
  return evolve(e_priv, config, noise, backends, observer);
}

SptiResult run_spti(const PrivateDataset& private_images, const RunConfig& config,
                    const BackendSuite& backends, RunObserver* observer,
                    std::shared_ptr<PrivateAccessLog> access_log) {
  config.validate();
  backends.validate();
  const NoiseSchedule noise = resolve_noise(config);
  if (observer) observer->on_start(config, noise);
  if (private_images.size() == 0) throw InputError("private dataset is empty");

  SptiResult out;
  try {
    out.private_captions = backends.caption->caption(private_images.read_images(PrivateReader::captioner));
  } catch (const ParseError& e) {
    throw BackendError(std::string("captioning private images: ") + e.what());
  }
  if (out.private_captions.size() != private_images.size())
    throw BackendError("caption backend returned " + std::to_string(out.private_captions.size()) +
                       " captions for " + std::to_string(private_images.size()) + " images");
  if (observer) observer->on_private_captions(out.private_captions);

  const auto e_priv = embed_private(private_images, out.private_captions, config, backends,
                                    std::move(access_log));
  out.evolution = evolve(e_priv, config, noise, backends, observer);

  const auto final_texts = out.evolution.final_pool.texts();
  try {
    out.synthetic_images = backends.text_to_image->render(final_texts);
  } catch (const ParseError& e) {
    throw BackendError(std::string("rendering final texts: ") + e.what());
  }
  if (observer) observer->on_final(out.evolution.final_pool, out.synthetic_images);
  return out;
}

}  // namespace pte
