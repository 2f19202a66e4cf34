#include "mvlab/ingest.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include "design_json.hpp"
#include "json_util.hpp"
#include "mvlab/annotation.hpp"
#include "mvlab/error.hpp"

namespace mvlab {

namespace fs = std::filesystem;
using detail::json;

namespace {

constexpr std::string_view kTensorMagic = "MVTN";
constexpr const char* kManifest = "manifest.json";
constexpr const char* kRegistry = "registry.json";
constexpr const char* kCooccurrence = "cooccurrence.csv";
constexpr const char* kTensors = "tensors.bin";
constexpr const char* kRefinedDir = "refined";
constexpr const char* kCorpusIndex = "corpus.csv";

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot read " + p.string());
  std::string bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  if (in.bad()) throw Error(ErrorCode::Io, "cannot read " + p.string());
  return bytes;
}

void write_file(const fs::path& p, std::string_view bytes) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + p.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::Io, "cannot write " + p.string());
}

struct Processed {
  std::optional<MVDesign> design;
  std::string signature;
  CompositionTensor tensor;
  bool converged = true;
  std::vector<std::string> warnings;
  std::string error;
};

Processed process_file(const fs::path& file, const std::map<std::string, Metadata>& index,
                       const RefinementConfig& cfg) {
  Processed out;
  try {
    auto annotation = parse_annotation(read_file(file));
    if (annotation.doi.empty()) annotation.doi = doi_from_stem(file.stem().string());
    enrich_metadata(annotation, index);
    auto normalized = normalize(annotation);
    auto refined = refine(normalized.design, cfg);
    out.signature = canonical_signature(slicing_tree(refined.design));
    out.tensor = composition_tensor(refined.design);
    out.converged = refined.converged;
    out.warnings = std::move(normalized.warnings);
    for (auto& w : refined.warnings) out.warnings.push_back(std::move(w));
    out.design = std::move(refined.design);
  } catch (const Error& e) {
    out.error = e.what();
  } catch (const std::exception& e) {
    out.error = std::string("E_IO: ") + e.what();
  }
  return out;
}

bool signature_non_guillotine(std::string_view signature) {
  return signature.find('P') != std::string_view::npos;
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

std::uint64_t get_le(std::string_view bytes, std::size_t offset, int width) {
  std::uint64_t v = 0;
  for (int i = 0; i < width; ++i) {
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[offset + i])) << (8 * i);
  }
  return v;
}

/// Letters and codes from the signatures, in corpus order.
void assign_codes(Library& lib, const std::vector<std::string>& signatures) {
  lib.codes.clear();
  lib.non_guillotine.clear();
  for (std::size_t i = 0; i < signatures.size(); ++i) {
    const auto letter = lib.registry.letter_for(signatures[i]);
    lib.codes.push_back({static_cast<int>(lib.corpus.items[i].nodes.size()), letter});
    lib.non_guillotine.push_back(signature_non_guillotine(signatures[i]));
  }
}

}  // namespace

std::string IngestReport::summary() const {
  std::ostringstream out;
  out << "files read: " << files_read << "\n"
      << "ingested: " << succeeded << "\n"
      << "failures: " << failures.size() << "\n";
  for (const auto& f : failures) out << "  " << f.file << ": " << f.reason << "\n";
  out << "non-guillotine layouts: " << non_guillotine << "\n"
      << "non-converged refinements: " << non_converged << "\n"
      << "registry size: " << registry_size << "\n";
  char elapsed[32];
  std::snprintf(elapsed, sizeof elapsed, "%.3f", elapsed_seconds);
  out << "elapsed: " << elapsed << " s\n";
  return out.str();
}

std::optional<std::size_t> Library::index_of_doi(std::string_view doi) const {
  for (std::size_t i = 0; i < corpus.items.size(); ++i) {
    if (corpus.items[i].doi() == doi) return i;
  }
  return std::nullopt;
}

std::vector<CorpusEntry> Library::entries() const {
  std::vector<CorpusEntry> out;
  out.reserve(corpus.items.size());
  for (std::size_t i = 0; i < corpus.items.size(); ++i) {
    out.push_back({corpus.items[i].doi(), tensors[i], codes[i], leaf_count(corpus.items[i])});
  }
  return out;
}

IngestResult ingest(const fs::path& dir, const IngestConfig& cfg) {
  cfg.refinement.check();
  const auto start = std::chrono::steady_clock::now();
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw Error(ErrorCode::Io, "not a directory: " + dir.string());

  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir, ec)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
  }
  if (ec) throw Error(ErrorCode::Io, "cannot list " + dir.string() + ": " + ec.message());
  if (files.empty()) throw Error(ErrorCode::NoFiles, "no annotation files in " + dir.string());
  std::sort(files.begin(), files.end(),
            [](const fs::path& a, const fs::path& b) { return a.filename() < b.filename(); });

  std::map<std::string, Metadata> index;
  if (const auto csv = dir / kCorpusIndex; fs::exists(csv)) index = parse_corpus_index(read_file(csv));

  std::vector<Processed> slots(files.size());
  unsigned workers = cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, files.size()));
  auto run = [&](std::size_t begin) {
    for (std::size_t i = begin; i < files.size(); i += workers) {
      slots[i] = process_file(files[i], index, cfg.refinement);
    }
  };
  if (workers <= 1) {
    run(0);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(run, w);
  }

  IngestResult result;
  auto& lib = result.library;
  auto& report = result.report;
  lib.refinement = cfg.refinement;
  report.files_read = files.size();
  std::vector<std::string> signatures;
  std::set<std::string> seen;
  for (std::size_t i = 0; i < files.size(); ++i) {
    auto& p = slots[i];
    const auto name = files[i].filename().string();
    if (!p.design) {
      report.failures.push_back({name, p.error});
      continue;
    }
    const auto doi = p.design->doi();
    if (!seen.insert(doi).second) {
      report.failures.push_back({name, "E_MALFORMED: duplicate doi " + doi});
      continue;
    }
    for (const auto& w : p.warnings) report.warnings.push_back(name + ": " + w);
    lib.corpus.items.push_back(std::move(*p.design));
    lib.tensors.push_back(p.tensor);
    lib.converged.push_back(p.converged);
    signatures.push_back(std::move(p.signature));
  }
  lib.registry.assign_all(signatures);
  assign_codes(lib, signatures);

  report.succeeded = lib.corpus.n();
  report.non_guillotine = static_cast<std::size_t>(std::count(lib.non_guillotine.begin(), lib.non_guillotine.end(), true));
  report.non_converged = static_cast<std::size_t>(std::count(lib.converged.begin(), lib.converged.end(), false));
  report.registry_size = lib.registry.size();
  report.elapsed_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

std::string serialize_design(const MVDesign& mv) {
  return detail::canonical_dump(detail::design_to_json(mv), detail::RealFormat::RoundTrip);
}

MVDesign parse_design(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::Malformed, e.what());
  }
  return detail::design_from_json(doc);
}

std::string cooccurrence_csv(const CoOccurrenceMatrix& m) {
  std::string out = "type";
  for (auto t : all_view_types()) out += "," + std::string(canonical_name(t));
  out += "\n";
  for (auto i : all_view_types()) {
    out += canonical_name(i);
    for (auto j : all_view_types()) {
      out += ",";
      if (auto p = m.at(i, j)) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.6f", *p);
        out += buf;
      }
    }
    out += "\n";
  }
  return out;
}

std::string encode_tensors(const std::vector<CompositionTensor>& tensors) {
  std::string out(kTensorMagic);
  put_u32(out, kTensorCacheVersion);
  put_u64(out, tensors.size());
  put_u32(out, static_cast<std::uint32_t>(kTensorSize));
  out.reserve(out.size() + tensors.size() * kTensorSize * 8);
  for (const auto& t : tensors) {
    for (double v : t.values) put_u64(out, std::bit_cast<std::uint64_t>(v));
  }
  return out;
}

std::optional<std::vector<CompositionTensor>> decode_tensors(std::string_view bytes) {
  constexpr std::size_t header = 4 + 4 + 8 + 4;
  if (bytes.size() < header || bytes.substr(0, 4) != kTensorMagic) return std::nullopt;
  if (get_le(bytes, 4, 4) != kTensorCacheVersion) return std::nullopt;
  const std::uint64_t rows = get_le(bytes, 8, 8);
  if (get_le(bytes, 16, 4) != kTensorSize) return std::nullopt;
  if (rows > (bytes.size() - header) / (kTensorSize * 8) ||
      bytes.size() != header + rows * kTensorSize * 8) {
    return std::nullopt;
  }
  std::vector<CompositionTensor> out(rows);
  std::size_t offset = header;
  for (auto& t : out) {
    for (auto& v : t.values) {
      v = std::bit_cast<double>(get_le(bytes, offset, 8));
      offset += 8;
    }
  }
  return out;
}

void save_derived(const Library& lib, const fs::path& out_dir) {
  std::error_code ec;
  fs::create_directories(out_dir / kRefinedDir, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot create " + out_dir.string() + ": " + ec.message());
  for (const auto& entry : fs::directory_iterator(out_dir / kRefinedDir, ec)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") fs::remove(entry.path(), ec);
  }

  json mvs = json::array();
  for (std::size_t i = 0; i < lib.corpus.items.size(); ++i) {
    const auto& mv = lib.corpus.items[i];
    const auto file = doi_to_filename(mv.doi());
    auto doc = detail::design_to_json(mv);
    doc["schema_version"] = kDerivedSchemaVersion;
    doc["layout"] = lib.codes[i].str();
    doc["converged"] = static_cast<bool>(lib.converged[i]);
    doc["non_guillotine"] = static_cast<bool>(lib.non_guillotine[i]);
    write_file(out_dir / kRefinedDir / file, detail::canonical_dump(doc, detail::RealFormat::RoundTrip));
    mvs.push_back({{"doi", mv.doi()}, {"file", file}, {"layout", lib.codes[i].str()}});
  }
  json manifest{{"schema_version", kDerivedSchemaVersion},
                {"refinement",
                 {{"theta_fraction", lib.refinement.theta_fraction},
                  {"max_iterations", lib.refinement.max_iterations}}},
                {"mvs", std::move(mvs)}};
  write_file(out_dir / kRegistry, lib.registry.to_json());
  write_file(out_dir / kCooccurrence,
             lib.corpus.empty() ? cooccurrence_csv({}) : cooccurrence_csv(conditional_probability(lib.corpus)));
  write_file(out_dir / kTensors, encode_tensors(lib.tensors));
  // Written last so that a manifest only exists next to complete artifacts.
  write_file(out_dir / kManifest, detail::canonical_dump(manifest, detail::RealFormat::RoundTrip));
}

bool is_derived_dir(const fs::path& dir) {
  std::error_code ec;
  return fs::is_regular_file(dir / kManifest, ec);
}

Library load_derived(const fs::path& dir) {
  if (!is_derived_dir(dir)) throw Error(ErrorCode::Io, "no derived corpus in " + dir.string());
  json manifest;
  try {
    manifest = json::parse(read_file(dir / kManifest));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Io, "unreadable manifest: " + std::string(e.what()));
  }
  if (!manifest.is_object() || manifest.value("schema_version", 0) != kDerivedSchemaVersion ||
      !manifest.contains("mvs") || !manifest["mvs"].is_array()) {
    throw Error(ErrorCode::Io, "unsupported manifest in " + dir.string());
  }

  Library lib;
  try {
    if (const auto& r = manifest.value("refinement", json::object()); r.is_object()) {
      lib.refinement.theta_fraction = r.value("theta_fraction", lib.refinement.theta_fraction);
      lib.refinement.max_iterations = r.value("max_iterations", lib.refinement.max_iterations);
    }
  } catch (const json::exception&) {
    throw Error(ErrorCode::Io, "unsupported refinement settings in manifest");
  }

  std::vector<std::string> signatures;
  for (const auto& entry : manifest["mvs"]) {
    const auto file = entry.is_object() ? entry.value("file", "") : std::string{};
    if (file.empty()) throw Error(ErrorCode::Io, "manifest entry without a file");
    try {
      const auto doc = json::parse(read_file(dir / kRefinedDir / file));
      auto mv = detail::design_from_json(doc);
      signatures.push_back(canonical_signature(slicing_tree(mv)));
      lib.converged.push_back(doc.value("converged", true));
      lib.corpus.items.push_back(std::move(mv));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::Io, file + ": " + e.what());
    } catch (const Error& e) {
      throw Error(ErrorCode::Io, file + ": " + e.what());
    }
  }

  bool registry_ok = false;
  if (fs::exists(dir / kRegistry)) {
    try {
      lib.registry = LayoutRegistry::from_json(read_file(dir / kRegistry));
      registry_ok = std::all_of(signatures.begin(), signatures.end(),
                                [&](const std::string& s) { return lib.registry.find(s).has_value(); });
    } catch (const Error&) {
      registry_ok = false;
    }
  }
  if (!registry_ok) {
    lib.registry = LayoutRegistry{};
    lib.registry.assign_all(signatures);
  }
  assign_codes(lib, signatures);

  std::optional<std::vector<CompositionTensor>> cached;
  if (fs::exists(dir / kTensors)) cached = decode_tensors(read_file(dir / kTensors));
  if (cached && cached->size() == lib.corpus.n()) {
    lib.tensors = std::move(*cached);
  } else {
    for (const auto& mv : lib.corpus.items) lib.tensors.push_back(composition_tensor(mv));
  }
  return lib;
}

}  // namespace mvlab
