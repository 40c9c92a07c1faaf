#include "beyt/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

#include "beyt/error.hpp"

namespace beyt {

using nlohmann::json;

namespace {

constexpr char kMagic[8] = {'B', 'E', 'Y', 'T', 'C', 'K', 'P', 'T'};

template <class T>
void put(std::string& out, const T& v) {
  out.append(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
T take(std::string_view& in) {
  if (in.size() < sizeof(T)) throw InputError("checkpoint: truncated file");
  T v;
  std::memcpy(&v, in.data(), sizeof v);
  in.remove_prefix(sizeof v);
  return v;
}

}  // namespace

std::string serialize_checkpoint(const Checkpoint& c) {
  json manifest = json::array();
  std::string payload;
  visit_model_tensors(
      [&](const std::string& name, bool, const auto& t) {
        manifest.push_back({{"name", name}, {"rows", t.rows()}, {"cols", t.cols()}});
        for (Eigen::Index i = 0; i < t.size(); ++i) put(payload, static_cast<float>(t.data()[i]));
      },
      c.params);

  json header = {
      {"format_version", kCheckpointVersion},
      {"model", c.model},
      {"train", c.train},
      {"vocab_hash", c.vocab_hash},
      {"embeddings_hash", c.embeddings_hash},
      {"scaler", c.scaler.to_json()},
      {"meter_map", c.meter_map.to_json()},
      {"meter_map_hash", c.meter_map.hash()},
      {"form_index", c.form_index.labels()},
      {"poet_index", c.poet_index.labels()},
      {"upstream", c.upstream},
      {"training_summary", c.training_summary},
      {"tensors", manifest},
  };
  const std::string h = header.dump();
  std::string out(kMagic, sizeof kMagic);
  put(out, kCheckpointVersion);
  put(out, static_cast<std::uint64_t>(h.size()));
  out += h;
  out += payload;
  return out;
}

Checkpoint deserialize_checkpoint(std::string_view in) {
  if (in.size() < sizeof kMagic || std::memcmp(in.data(), kMagic, sizeof kMagic) != 0)
    throw InputError("checkpoint: bad magic");
  in.remove_prefix(sizeof kMagic);
  const auto version = take<std::uint32_t>(in);
  if (version != kCheckpointVersion)
    throw InputError("checkpoint: unsupported format version " + std::to_string(version));
  const auto len = take<std::uint64_t>(in);
  if (in.size() < len) throw InputError("checkpoint: truncated header");

  Checkpoint c;
  json header;
  try {
    header = json::parse(in.substr(0, len));
    in.remove_prefix(len);
    c.model = header.at("model").get<ModelConfig>();
    c.train = header.at("train").get<TrainConfig>();
    c.vocab_hash = header.at("vocab_hash").get<std::string>();
    c.embeddings_hash = header.at("embeddings_hash").get<std::string>();
    c.scaler = Scaler::from_json(header.at("scaler"));
    c.meter_map = MeterClassMap::from_json(header.at("meter_map"));
    c.form_index = LabelIndex(header.at("form_index").get<std::vector<std::string>>());
    c.poet_index = LabelIndex(header.at("poet_index").get<std::vector<std::string>>());
    c.upstream = header.at("upstream").get<std::map<std::string, std::string>>();
    c.training_summary = header.at("training_summary");
  } catch (const json::exception& e) {
    throw InputError(std::string("checkpoint: bad header (") + e.what() + ")");
  }
  if (c.meter_map.hash() != header.at("meter_map_hash").get<std::string>())
    throw StaleArtifactError("meter_map", "checkpoint meter map does not match its hash");

  // Shapes come from the config; the manifest must agree with them.
  c.params = init_model(c.model);
  const auto& manifest = header.at("tensors");
  std::size_t idx = 0;
  visit_model_tensors(
      [&](const std::string& name, bool, auto& t) {
        if (idx >= manifest.size() || manifest[idx].at("name") != name ||
            manifest[idx].at("rows").get<Eigen::Index>() != t.rows() ||
            manifest[idx].at("cols").get<Eigen::Index>() != t.cols())
          throw InputError("checkpoint: tensor manifest mismatch at '" + name + "'");
        ++idx;
        for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = take<float>(in);
      },
      c.params);
  if (idx != manifest.size() || !in.empty()) throw InputError("checkpoint: trailing data");
  return c;
}

void save_checkpoint(const Checkpoint& c, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << serialize_checkpoint(c);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("checkpoint not found: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return deserialize_checkpoint(ss.str());
}

}  // namespace beyt
