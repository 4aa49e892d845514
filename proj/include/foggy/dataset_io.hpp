#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "foggy/error.hpp"
#include "foggy/lookup.hpp"
#include "foggy/serialize.hpp"
#include "foggy/synthpeople.hpp"

namespace foggy {

// Dataset manifest: one tab-separated record per line,
//   photo_id  identity_id  role(clean|query)  image file path
// Decoy rows may extend this with provenance columns
//   strategy  epsilon  generator_model  target_identity
// and use role "decoy".

inline void save_dataset(const SynthDataset& ds,
                         const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir / "images");
  std::ofstream mf(dir / "manifest.tsv");
  if (!mf) throw IoError("cannot write dataset manifest");
  auto dump = [&](const SynthPhoto& p, const char* role) {
    const std::string rel = "images/" + p.photo_id + ".fgi";
    save_image((dir / rel).string(), p.image);
    mf << p.photo_id << '\t' << p.identity << '\t' << role << '\t' << rel
       << '\n';
  };
  for (const auto& p : ds.photos) dump(p, "clean");
  for (const auto& q : ds.queries) dump(q, "query");

  std::ofstream meta(dir / "dataset.meta");
  meta << "identities=" << ds.spec.identity_count << '\n'
       << "photos_per_identity=" << ds.spec.photos_per_identity << '\n'
       << "queries_per_identity=" << ds.spec.queries_per_identity << '\n'
       << "width=" << ds.spec.width << '\n'
       << "height=" << ds.spec.height << '\n'
       << "channels=" << ds.spec.channels << '\n'
       << "jitter_brightness=" << ds.spec.jitter.brightness << '\n'
       << "jitter_noise_sigma=" << ds.spec.jitter.noise_sigma << '\n'
       << "jitter_translation=" << ds.spec.jitter.max_translation << '\n'
       << "identity_blend=" << ds.spec.identity_blend << '\n'
       << "pixel_domain=0..1\n"
       << "master_seed=" << ds.spec.master_seed << '\n';
}

struct ManifestRecord {
  std::string photo_id;
  std::string identity;
  std::string role;  // clean | query | decoy
  std::string path;
  std::optional<Provenance> provenance;
};

inline std::vector<ManifestRecord> read_manifest(
    const std::filesystem::path& manifest_path) {
  std::ifstream mf(manifest_path);
  if (!mf) throw IoError("cannot open manifest: " + manifest_path.string());
  std::vector<ManifestRecord> records;
  std::string line;
  int lineno = 0;
  while (std::getline(mf, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string col;
    while (std::getline(ss, col, '\t')) cols.push_back(col);
    if (cols.size() < 4)
      throw IoError("manifest line " + std::to_string(lineno) +
                    ": expected at least 4 tab-separated columns");
    ManifestRecord rec{cols[0], cols[1], cols[2], cols[3], {}};
    if (cols.size() >= 8 && !cols[4].empty())
      rec.provenance = Provenance{cols[4], std::stod(cols[5]), cols[6], cols[7]};
    records.push_back(std::move(rec));
  }
  return records;
}

/// Load lookup-set items (clean + decoy rows) from a manifest; query rows
/// are skipped here and read by load_manifest_queries.
inline std::vector<LookupItem> load_manifest_items(
    const std::filesystem::path& manifest_path) {
  const auto base = manifest_path.parent_path();
  std::vector<LookupItem> items;
  for (const auto& rec : read_manifest(manifest_path)) {
    if (rec.role == "query") continue;
    items.push_back({rec.photo_id, rec.identity, parse_role(rec.role),
                     load_image((base / rec.path).string()), rec.provenance});
  }
  return items;
}

inline std::vector<SynthPhoto> load_manifest_queries(
    const std::filesystem::path& manifest_path) {
  const auto base = manifest_path.parent_path();
  std::vector<SynthPhoto> queries;
  for (const auto& rec : read_manifest(manifest_path))
    if (rec.role == "query")
      queries.push_back({rec.photo_id, rec.identity,
                         load_image((base / rec.path).string())});
  return queries;
}

}  // namespace foggy
