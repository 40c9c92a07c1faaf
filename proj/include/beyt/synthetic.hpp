#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "beyt/corpus.hpp"

namespace beyt {

// Desk-scale corpus with known structure: each poet draws half of its words
// (in expectation) from a private core vocabulary and half from a shared pool,
// both Zipf-distributed, and writes mostly in a poet-specific meter. Forms are
// assigned independently of the poet.
struct SyntheticConfig {
  std::size_t poets = 5;
  std::size_t poems_per_poet = 200;
  std::size_t min_verses = 4;
  std::size_t max_verses = 12;
  std::size_t min_words_per_hemistich = 1;
  std::size_t max_words_per_hemistich = 3;
  std::size_t core_vocab = 60;
  std::size_t shared_vocab = 200;
  double shared_fraction = 0.5;
  double zipf_exponent = 1.0;
  std::size_t meters = 20;
  double preferred_meter_prob = 0.85;
  std::vector<std::string> forms{"ghazal", "masnavi", "qasida", "rubai"};
  // Orthographic noise folded away by normalization: Arabic yeh/kaf,
  // diacritics, tatweel and stray markup.
  double noise_prob = 0.05;
  double punctuation_prob = 0.1;
  std::uint64_t seed = 2024;
};

Corpus make_synthetic_corpus(const SyntheticConfig& cfg = {});

// Meter names used by the generator, most common first.
std::vector<std::string> synthetic_meters(std::size_t n);

}  // namespace beyt
