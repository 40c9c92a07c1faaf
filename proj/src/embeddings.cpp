#include "beyt/embeddings.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "beyt/error.hpp"
#include "beyt/hash.hpp"
#include "beyt/rng.hpp"

namespace beyt {

using nlohmann::json;

void to_json(json& j, const EmbeddingConfig& c) {
  j = json{{"dims", c.dims},     {"window", c.window},
           {"negatives", c.negatives}, {"epochs", c.epochs},
           {"lr", c.lr},         {"min_lr_fraction", c.min_lr_fraction},
           {"seed", c.seed}};
}

void from_json(const json& j, EmbeddingConfig& c) {
  EmbeddingConfig d;
  c.dims = j.value("dims", d.dims);
  c.window = j.value("window", d.window);
  c.negatives = j.value("negatives", d.negatives);
  c.epochs = j.value("epochs", d.epochs);
  c.lr = j.value("lr", d.lr);
  c.min_lr_fraction = j.value("min_lr_fraction", d.min_lr_fraction);
  c.seed = j.value("seed", d.seed);
}

std::span<const float> EmbeddingMatrix::input_row(TokenId id) const {
  return {input.data() + static_cast<std::size_t>(id) * dims(), dims()};
}

std::span<const float> EmbeddingMatrix::output_row(TokenId id) const {
  return {output.data() + static_cast<std::size_t>(id) * dims(), dims()};
}

namespace {

constexpr char kMagic[8] = {'B', 'E', 'Y', 'T', 'E', 'M', 'B', '1'};

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double dot(const float* a, const float* b, std::size_t d) {
  double s = 0;
  for (std::size_t k = 0; k < d; ++k) s += static_cast<double>(a[k]) * b[k];
  return s;
}

template <class T>
void put(std::string& out, const T& v) {
  out.append(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
T take(std::string_view& in) {
  if (in.size() < sizeof(T)) throw InputError("embeddings: truncated file");
  T v;
  std::memcpy(&v, in.data(), sizeof v);
  in.remove_prefix(sizeof v);
  return v;
}

}  // namespace

EmbeddingMatrix train_sgns(const std::vector<TokenSequence>& sentences, const Vocabulary& vocab,
                           const EmbeddingConfig& cfg) {
  if (cfg.dims == 0) throw InputError("embedding dims must be > 0");
  if (cfg.window == 0) throw InputError("embedding window must be > 0");
  if (vocab.size() <= kReservedTokens) throw InputError("embeddings: empty vocabulary");

  const std::size_t V = vocab.size(), d = cfg.dims;
  std::vector<std::vector<TokenId>> stream;
  std::vector<double> counts(V, 0.0);
  std::size_t total_tokens = 0;
  for (const auto& s : sentences) {
    std::vector<TokenId> words;
    for (TokenId id : s.ids) {
      if (id < static_cast<TokenId>(kReservedTokens)) continue;
      if (static_cast<std::size_t>(id) >= V) throw InputError("embeddings: token id out of range");
      words.push_back(id);
      counts[static_cast<std::size_t>(id)] += 1.0;
    }
    total_tokens += words.size();
    if (!words.empty()) stream.push_back(std::move(words));
  }
  if (total_tokens == 0) throw InputError("embeddings: empty training corpus");

  std::vector<double> cumulative(V, 0.0);
  double acc = 0;
  for (std::size_t i = 0; i < V; ++i) {
    acc += counts[i] > 0 ? std::pow(counts[i], 0.75) : 0.0;
    cumulative[i] = acc;
  }

  Rng rng(cfg.seed);
  EmbeddingMatrix m;
  m.config = cfg;
  m.vocab_size = V;
  m.input.resize(V * d);
  m.output.assign(V * d, 0.0f);
  const double half = 0.5 / static_cast<double>(d);
  for (auto& x : m.input) x = static_cast<float>(rng.uniform(-half, half));

  auto sample_negative = [&] {
    const double u = rng.uniform() * acc;
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    if (it == cumulative.end()) --it;
    return static_cast<TokenId>(it - cumulative.begin());
  };

  const double planned = static_cast<double>(cfg.epochs * total_tokens);
  std::size_t processed = 0;
  std::vector<double> grad(d);
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (const auto& words : stream) {
      for (std::size_t i = 0; i < words.size(); ++i, ++processed) {
        const double lr =
            cfg.lr * std::max(cfg.min_lr_fraction, 1.0 - static_cast<double>(processed) / planned);
        float* v = m.input.data() + static_cast<std::size_t>(words[i]) * d;
        const std::size_t lo = i >= cfg.window ? i - cfg.window : 0;
        const std::size_t hi = std::min(words.size() - 1, i + cfg.window);
        for (std::size_t j = lo; j <= hi; ++j) {
          if (j == i) continue;
          const TokenId context = words[j];
          std::fill(grad.begin(), grad.end(), 0.0);
          for (std::size_t k = 0; k <= cfg.negatives; ++k) {
            TokenId target;
            double label;
            if (k == 0) {
              target = context;
              label = 1.0;
            } else {
              target = sample_negative();
              if (target == context) continue;
              label = 0.0;
            }
            float* u = m.output.data() + static_cast<std::size_t>(target) * d;
            const double g = lr * (label - sigmoid(dot(u, v, d)));
            for (std::size_t c = 0; c < d; ++c) {
              grad[c] += g * u[c];
              u[c] = static_cast<float>(u[c] + g * v[c]);
            }
          }
          for (std::size_t c = 0; c < d; ++c) v[c] = static_cast<float>(v[c] + grad[c]);
        }
      }
    }
  }
  for (float x : m.input)
    if (!std::isfinite(x)) throw NumericalError("embeddings: non-finite value after training");
  return m;
}

double sgns_loss(const EmbeddingMatrix& m, TokenId center, TokenId context,
                 std::span<const TokenId> negatives) {
  const auto v = m.input_row(center);
  double loss = -std::log(sigmoid(dot(m.output_row(context).data(), v.data(), m.dims())));
  for (TokenId n : negatives)
    loss -= std::log(sigmoid(-dot(m.output_row(n).data(), v.data(), m.dims())));
  return loss;
}

Vec verse_semantic_vector(const TokenSequence& t, const EmbeddingMatrix& m) {
  const auto d = static_cast<Eigen::Index>(m.dims());
  Vec sum = Vec::Zero(d);
  std::size_t n = 0;
  for (TokenId id : t.ids) {
    if (id < static_cast<TokenId>(kReservedTokens)) continue;
    if (static_cast<std::size_t>(id) >= m.vocab_size)
      throw InputError("semantic vector: token id out of range");
    const auto row = m.input_row(id);
    for (Eigen::Index k = 0; k < d; ++k) sum[k] += row[static_cast<std::size_t>(k)];
    ++n;
  }
  if (n > 0) sum /= static_cast<double>(n);
  return sum;
}

std::string EmbeddingMatrix::serialize() const {
  const std::string cfg = json(config).dump();
  std::string out(kMagic, sizeof kMagic);
  put(out, static_cast<std::uint64_t>(vocab_size));
  put(out, static_cast<std::uint64_t>(dims()));
  put(out, static_cast<std::uint64_t>(cfg.size()));
  out += cfg;
  out.append(reinterpret_cast<const char*>(input.data()), input.size() * sizeof(float));
  out.append(reinterpret_cast<const char*>(output.data()), output.size() * sizeof(float));
  return out;
}

EmbeddingMatrix EmbeddingMatrix::deserialize(std::string_view in) {
  if (in.size() < sizeof kMagic || std::memcmp(in.data(), kMagic, sizeof kMagic) != 0)
    throw InputError("embeddings: bad magic");
  in.remove_prefix(sizeof kMagic);
  EmbeddingMatrix m;
  m.vocab_size = take<std::uint64_t>(in);
  const auto d = take<std::uint64_t>(in);
  const auto len = take<std::uint64_t>(in);
  if (in.size() < len) throw InputError("embeddings: truncated config");
  try {
    m.config = json::parse(in.substr(0, len)).get<EmbeddingConfig>();
  } catch (const json::exception& e) {
    throw InputError(std::string("embeddings: bad config (") + e.what() + ")");
  }
  in.remove_prefix(len);
  if (m.config.dims != d) throw InputError("embeddings: header/config dims mismatch");
  const std::size_t n = m.vocab_size * d;
  if (in.size() != 2 * n * sizeof(float)) throw InputError("embeddings: wrong payload size");
  m.input.resize(n);
  m.output.resize(n);
  std::memcpy(m.input.data(), in.data(), n * sizeof(float));
  std::memcpy(m.output.data(), in.data() + n * sizeof(float), n * sizeof(float));
  return m;
}

std::string EmbeddingMatrix::hash() const { return hash_hex(serialize()); }

void save_embeddings(const EmbeddingMatrix& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << m.serialize();
}

EmbeddingMatrix load_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("embeddings not found: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return EmbeddingMatrix::deserialize(ss.str());
}

}  // namespace beyt
