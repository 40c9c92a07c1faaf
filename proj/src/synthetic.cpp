#include "beyt/synthetic.hpp"

#include <cmath>
#include <set>

#include "beyt/error.hpp"
#include "beyt/rng.hpp"
#include "beyt/utf8.hpp"

namespace beyt {

namespace {

// Persian letters used to build pseudo-words.
constexpr char32_t kLetters[] = {0x0627, 0x0628, 0x067E, 0x062A, 0x062C, 0x0686, 0x062D,
                                 0x062E, 0x062F, 0x0631, 0x0632, 0x0698, 0x0633, 0x0634,
                                 0x0635, 0x0637, 0x0639, 0x063A, 0x0641, 0x0642, 0x06A9,
                                 0x06AF, 0x0644, 0x0645, 0x0646, 0x0648, 0x0647, 0x06CC};

std::vector<std::u32string> make_words(Rng& rng, std::size_t n, std::set<std::u32string>& taken) {
  std::vector<std::u32string> out;
  while (out.size() < n) {
    std::u32string w;
    const auto len = 2 + rng.below(4);
    for (std::size_t i = 0; i < len; ++i) w.push_back(kLetters[rng.below(std::size(kLetters))]);
    // Some compounds carry a zero-width non-joiner, as in "می‌روم".
    if (rng.bernoulli(0.1)) w = std::u32string{0x0645, 0x06CC, 0x200C} + w;
    if (taken.insert(w).second) out.push_back(std::move(w));
  }
  return out;
}

struct Zipf {
  std::vector<double> cumulative;
  Zipf(std::size_t n, double s) {
    double acc = 0;
    for (std::size_t i = 0; i < n; ++i) {
      acc += 1.0 / std::pow(static_cast<double>(i + 1), s);
      cumulative.push_back(acc);
    }
  }
  std::size_t draw(Rng& rng) const {
    const double u = rng.uniform() * cumulative.back();
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    return std::min<std::size_t>(static_cast<std::size_t>(it - cumulative.begin()),
                                 cumulative.size() - 1);
  }
};

std::u32string add_noise(Rng& rng, std::u32string w, double p) {
  if (!rng.bernoulli(p)) return w;
  switch (rng.below(4)) {
    case 0:
      for (auto& c : w)
        if (c == 0x06CC) c = 0x064A;
      break;
    case 1:
      for (auto& c : w)
        if (c == 0x06A9) c = 0x0643;
      break;
    case 2:
      w.insert(w.begin() + 1, char32_t{0x064E});  // fatha
      break;
    default:
      w.insert(w.begin() + 1, char32_t{0x0640});  // tatweel
      break;
  }
  return w;
}

}  // namespace

std::vector<std::string> synthetic_meters(std::size_t n) {
  static const char* const kFeet[] = {"mafʿūlu", "mafāʿīlu", "fāʿilātun", "mustafʿilun",
                                      "mafāʿīlun", "fāʿilun", "faʿūlun", "mutafāʿilun"};
  static const char* const kEnds[] = {"fiʿl", "faʿal", "fāʿ", "faʿūlun", "fāʿilun"};
  std::vector<std::string> out;
  for (std::size_t i = 0; out.size() < n; ++i) {
    const auto a = kFeet[i % 8], b = kFeet[(i / 8 + i + 1) % 8], e = kEnds[(i / 3) % 5];
    std::string m = std::string(a) + " " + b + " " + b + " " + e;
    if (i >= 40) m += " " + std::to_string(i);
    if (std::find(out.begin(), out.end(), m) == out.end()) out.push_back(m);
  }
  return out;
}

Corpus make_synthetic_corpus(const SyntheticConfig& cfg) {
  if (cfg.poets == 0 || cfg.poems_per_poet == 0 || cfg.min_verses == 0 ||
      cfg.max_verses < cfg.min_verses || cfg.min_words_per_hemistich == 0 ||
      cfg.max_words_per_hemistich < cfg.min_words_per_hemistich || cfg.forms.empty() ||
      cfg.meters == 0)
    throw InputError("synthetic: inconsistent configuration");
  Rng rng(cfg.seed);
  std::set<std::u32string> taken;
  const auto shared = make_words(rng, cfg.shared_vocab, taken);
  std::vector<std::vector<std::u32string>> cores;
  for (std::size_t p = 0; p < cfg.poets; ++p) cores.push_back(make_words(rng, cfg.core_vocab, taken));
  const Zipf shared_zipf(std::max<std::size_t>(1, cfg.shared_vocab), cfg.zipf_exponent);
  const Zipf core_zipf(std::max<std::size_t>(1, cfg.core_vocab), cfg.zipf_exponent);
  const auto meters = synthetic_meters(cfg.meters);

  auto hemistich = [&](std::size_t poet) {
    const auto n = cfg.min_words_per_hemistich +
                   rng.below(cfg.max_words_per_hemistich - cfg.min_words_per_hemistich + 1);
    std::u32string text;
    for (std::size_t i = 0; i < n; ++i) {
      const bool from_shared = cfg.core_vocab == 0 || (cfg.shared_vocab > 0 && rng.bernoulli(cfg.shared_fraction));
      const auto& w = from_shared ? shared[shared_zipf.draw(rng)] : cores[poet][core_zipf.draw(rng)];
      if (!text.empty()) text.push_back(U' ');
      text += add_noise(rng, w, cfg.noise_prob);
    }
    if (rng.bernoulli(cfg.punctuation_prob)) text.push_back(0x060C);  // Arabic comma
    std::string out = utf8::encode(text);
    if (rng.bernoulli(cfg.noise_prob)) out = "<span>" + out + "</span>";
    return out;
  };

  std::vector<PoemRecord> records;
  for (std::size_t p = 0; p < cfg.poets; ++p) {
    char poet[32];
    std::snprintf(poet, sizeof poet, "poet_%02zu", p);
    for (std::size_t k = 0; k < cfg.poems_per_poet; ++k) {
      PoemRecord r;
      char id[48];
      std::snprintf(id, sizeof id, "%s-%04zu", poet, k);
      r.poem_id = id;
      r.poet = poet;
      r.title = "poem " + std::to_string(k + 1);
      r.form = cfg.forms[rng.below(cfg.forms.size())];
      r.meter = rng.bernoulli(cfg.preferred_meter_prob) ? meters[p % meters.size()]
                                                         : meters[rng.below(meters.size())];
      r.status = AttributionStatus::confirmed;
      const auto verses = cfg.min_verses + rng.below(cfg.max_verses - cfg.min_verses + 1);
      for (std::size_t v = 0; v < verses; ++v) r.verses.push_back({hemistich(p), hemistich(p)});
      records.push_back(std::move(r));
    }
  }
  return Corpus(std::move(records));
}

}  // namespace beyt
