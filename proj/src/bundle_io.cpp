#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "binio.hpp"
#include "json.hpp"
#include "mispro/detector.hpp"
#include "mispro/error.hpp"
#include "mispro/json_io.hpp"

// Layout: "MSPB" | u32 version | JSON header | eigenspace blobs (verification, native,
// syllables in order, each only when present) | "END!".

namespace mispro::detector {

using nlohmann::json;

std::string bundle_to_bytes(const DetectorBundle& b) {
  json h;
  h["schema"] = "mispro-bundle";
  h["word"] = b.word;
  h["label"] = b.label;
  h["feature"] = features::to_string(b.feature);
  h["geometry"] = {{"window_ms", b.geometry.window_ms}, {"hop_ms", b.geometry.hop_ms}, {"window", "hamming"}};
  h["mfcc_include_c0"] = b.mfcc.include_c0;
  h["variance_fraction"] = b.variance_fraction;
  h["preprocess"] = json_io::to_json(b.preprocess);
  h["target_ms"] = b.target_ms;
  h["syllable_count"] = b.syllable_count;
  h["verification"] = b.verification ? json{{"threshold", json_io::to_json(b.verification->threshold)}} : json(nullptr);
  h["native"] = b.native ? json{{"threshold", json_io::to_json(b.native->threshold)}} : json(nullptr);
  h["syllables"] = json::array();
  for (const auto& s : b.syllables)
    h["syllables"].push_back({{"label", s.label}, {"target_ms", s.target_ms}, {"threshold", json_io::to_json(s.model.threshold)}});

  std::ostringstream out(std::ios::binary);
  out.write("MSPB", 4);
  detail::put_u32(out, kBundleVersion);
  detail::put_string(out, h.dump());
  if (b.verification) pca::write_eigenspace(out, b.verification->space);
  if (b.native) pca::write_eigenspace(out, b.native->space);
  for (const auto& s : b.syllables) pca::write_eigenspace(out, s.model.space);
  out.write("END!", 4);
  return out.str();
}

DetectorBundle bundle_from_bytes(std::string_view bytes) {
  std::istringstream in(std::string(bytes), std::ios::binary);
  char magic[4];
  detail::get_exact(in, magic, 4);
  if (std::memcmp(magic, "MSPB", 4) != 0) throw_data("corrupt file: not a detector bundle");
  const auto version = detail::get_u32(in);
  if (version != kBundleVersion)
    throw_data("unsupported bundle format version " + std::to_string(version) + " (this build reads version " +
               std::to_string(kBundleVersion) + ")");
  json h;
  try {
    h = json::parse(detail::get_string(in));
  } catch (const json::exception&) {
    throw_data("corrupt file: bad bundle header");
  }
  DetectorBundle b;
  try {
    if (h.at("schema") != "mispro-bundle") throw_data("corrupt file: bad bundle schema");
    b.word = h.at("word").get<int>();
    b.label = h.at("label").get<std::string>();
    b.feature = features::feature_kind_from_string(h.at("feature").get<std::string>());
    b.geometry.window_ms = h.at("geometry").at("window_ms").get<double>();
    b.geometry.hop_ms = h.at("geometry").at("hop_ms").get<double>();
    b.mfcc.include_c0 = h.at("mfcc_include_c0").get<bool>();
    b.variance_fraction = h.at("variance_fraction").get<double>();
    b.preprocess = json_io::preprocess_config_from_json(h.at("preprocess"), "preprocess");
    b.target_ms = h.at("target_ms").get<double>();
    b.syllable_count = h.at("syllable_count").get<std::size_t>();
    if (!h.at("verification").is_null())
      b.verification = StageModel{{}, json_io::threshold_model_from_json(h.at("verification").at("threshold"))};
    if (!h.at("native").is_null())
      b.native = StageModel{{}, json_io::threshold_model_from_json(h.at("native").at("threshold"))};
    for (const auto& s : h.at("syllables")) {
      SyllableModel sm;
      sm.label = s.at("label").get<std::string>();
      sm.target_ms = s.at("target_ms").get<double>();
      sm.model.threshold = json_io::threshold_model_from_json(s.at("threshold"));
      b.syllables.push_back(std::move(sm));
    }
  } catch (const json::exception& e) {
    throw_data(std::string("corrupt file: incomplete bundle header: ") + e.what());
  }
  if (b.verification) b.verification->space = pca::read_eigenspace(in);
  if (b.native) b.native->space = pca::read_eigenspace(in);
  for (auto& s : b.syllables) s.model.space = pca::read_eigenspace(in);
  char end[4];
  detail::get_exact(in, end, 4);
  if (std::memcmp(end, "END!", 4) != 0 || in.peek() != std::char_traits<char>::eof())
    throw_data("corrupt file: bad bundle trailer");
  return b;
}

void save_bundle(const DetectorBundle& bundle, const std::filesystem::path& path) {
  const auto bytes = bundle_to_bytes(bundle);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw_data("cannot write bundle: " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw_data("failed writing bundle: " + path.string());
}

DetectorBundle load_bundle(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw_data("cannot open bundle: " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return bundle_from_bytes(bytes);
}

}  // namespace mispro::detector
