#include "framelogic/experts.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "framelogic/text_match.hpp"
#include "json.hpp"

namespace framelogic {

using nlohmann::json;

namespace {

[[noreturn]] void format_error(const std::string& message) {
  throw BundleError(BundleError::Kind::Format, message);
}

const json& require(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) format_error(where + ": missing \"" + key + "\"");
  return *it;
}

std::vector<double> read_values(const json& j, const std::string& where) {
  if (!j.is_array()) format_error(where + ": \"values\" must be an array");
  std::vector<double> values;
  values.reserve(j.size());
  for (const auto& v : j) {
    if (!v.is_number()) format_error(where + ": non-numeric score");
    const double x = v.get<double>();
    if (!std::isfinite(x)) format_error(where + ": non-finite score");
    values.push_back(x);
  }
  return values;
}

std::vector<ScoreRow> read_rows(const json& j, const std::string& where) {
  if (!j.is_array()) format_error(where + " must be an array");
  std::vector<ScoreRow> rows;
  rows.reserve(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto here = where + "[" + std::to_string(i) + "]";
    if (!j[i].is_object()) format_error(here + " must be an object");
    const auto& q = require(j[i], "query", here);
    if (!q.is_string()) format_error(here + ": \"query\" must be a string");
    rows.push_back(ScoreRow{q.get<std::string>(), read_values(require(j[i], "values", here), here)});
  }
  return rows;
}

json write_rows(const std::vector<ScoreRow>& rows) {
  json out = json::array();
  for (const auto& row : rows) out.push_back(json{{"query", row.query}, {"values", row.values}});
  return out;
}

json parse_document(std::string_view document, const char* what) {
  json doc = json::parse(document.begin(), document.end(), nullptr, false);
  if (doc.is_discarded()) format_error(std::string(what) + " is not valid JSON");
  if (!doc.is_object()) format_error(std::string(what) + " must be a JSON object");
  return doc;
}

std::string dump(const json& j) { return j.dump() + "\n"; }

}  // namespace

std::string_view to_string(ProviderKind kind) {
  return kind == ProviderKind::Synthetic ? "synthetic" : "file";
}

const ScoreRow* ScoreTable::find(std::string_view query) const {
  const auto key = text::normalize(query);
  for (const auto& row : rows) {
    if (text::normalize(row.query) == key) return &row;
  }
  return nullptr;
}

bool ExpertBundle::has_artifacts(ExpertKind kind) const {
  switch (kind) {
    case ExpertKind::Clip: return clip.has_value();
    case ExpertKind::Clap: return clap.has_value();
    case ExpertKind::Asr: return transcript.has_value();
    case ExpertKind::Ocr: return ocr.has_value();
    case ExpertKind::Ovd: return false;
  }
  return false;
}

void ExpertBundle::validate() const {
  if (frame_count == 0) format_error("bundle " + video_id + ": T must be >= 1");
  if (!(frame_rate > 0.0) || !std::isfinite(frame_rate)) {
    format_error("bundle " + video_id + ": frame_rate must be > 0");
  }
  auto check_table = [&](const std::optional<ScoreTable>& table, const char* name) {
    if (!table) return;
    for (const auto& row : table->rows) {
      if (row.values.size() != frame_count) {
        throw BundleError(BundleError::Kind::InconsistentLength,
                          std::string(name) + " row \"" + row.query + "\" has " +
                              std::to_string(row.values.size()) + " values but header T = " +
                              std::to_string(frame_count));
      }
      for (double v : row.values) {
        if (!std::isfinite(v)) format_error(std::string(name) + ": non-finite score");
      }
    }
  };
  check_table(clip, "clip_table");
  check_table(clap, "clap_table");

  if (transcript) {
    double previous_start = -1.0;
    for (const auto& seg : *transcript) {
      if (!(seg.start >= 0.0) || !(seg.start < seg.end) || !std::isfinite(seg.end)) {
        format_error("transcript segment must satisfy 0 <= start < end");
      }
      if (seg.start < previous_start) format_error("transcript segments must be sorted by start");
      previous_start = seg.start;
    }
  }
  if (ocr) {
    for (const auto& f : *ocr) {
      if (f.frame >= frame_count) {
        throw BundleError(BundleError::Kind::InconsistentLength,
                          "ocr frame " + std::to_string(f.frame) + " outside [0, " +
                              std::to_string(frame_count) + ")");
      }
    }
  }
}

LeafEvaluationError::LeafEvaluationError(const Leaf& leaf, BundleError::Kind cause,
                                         const std::string& message)
    : std::runtime_error("leaf " + std::to_string(leaf.id.value) + " (" +
                         std::string(to_string(leaf.expert)) + ": \"" + leaf.query + "\" at " +
                         leaf.path + "): " + message),
      leaf_(leaf.id),
      cause_(cause) {}

// --- serialization ---------------------------------------------------------

std::string bundle_to_json(const ExpertBundle& bundle) {
  json doc;
  doc["header"] = json{{"format_version", kBundleFormatVersion},
                       {"video_id", bundle.video_id},
                       {"T", bundle.frame_count},
                       {"frame_rate", bundle.frame_rate},
                       {"provider", to_string(bundle.provider)}};
  if (bundle.clip) doc["clip_table"] = write_rows(bundle.clip->rows);
  if (bundle.clap) doc["clap_table"] = write_rows(bundle.clap->rows);
  if (bundle.transcript) {
    json segs = json::array();
    for (const auto& s : *bundle.transcript) {
      segs.push_back(json{{"start", s.start}, {"end", s.end}, {"text", s.text}});
    }
    doc["transcript"] = std::move(segs);
  }
  if (bundle.ocr) {
    json frames = json::array();
    for (const auto& f : *bundle.ocr) {
      frames.push_back(json{{"frame", f.frame}, {"detections", f.detections}});
    }
    doc["ocr"] = std::move(frames);
  }
  return dump(doc);
}

ExpertBundle bundle_from_json(std::string_view document) {
  const json doc = parse_document(document, "bundle");
  ExpertBundle bundle;
  try {
    const auto& header = require(doc, "header", "bundle");
    if (!header.is_object()) format_error("bundle: \"header\" must be an object");
    const auto& version = require(header, "format_version", "header");
    if (!version.is_number_integer() || version.get<int>() != kBundleFormatVersion) {
      format_error("bundle: unsupported format_version " + version.dump());
    }
    const auto& video_id = require(header, "video_id", "header");
    if (!video_id.is_string()) format_error("header: \"video_id\" must be a string");
    bundle.video_id = video_id.get<std::string>();
    const auto& frames = require(header, "T", "header");
    if (!frames.is_number_unsigned()) format_error("header: \"T\" must be a positive integer");
    bundle.frame_count = frames.get<std::size_t>();
    if (auto it = header.find("frame_rate"); it != header.end()) {
      if (!it->is_number()) format_error("header: \"frame_rate\" must be a number");
      bundle.frame_rate = it->get<double>();
    }
    if (auto it = header.find("provider"); it != header.end()) {
      if (!it->is_string()) format_error("header: \"provider\" must be a string");
      const auto name = it->get<std::string>();
      if (name == "synthetic") bundle.provider = ProviderKind::Synthetic;
      else if (name == "file") bundle.provider = ProviderKind::FileBacked;
      else format_error("header: unknown provider \"" + name + "\"");
    }

    if (auto it = doc.find("clip_table"); it != doc.end()) {
      bundle.clip = ScoreTable{ExpertKind::Clip, read_rows(*it, "clip_table")};
    }
    if (auto it = doc.find("clap_table"); it != doc.end()) {
      bundle.clap = ScoreTable{ExpertKind::Clap, read_rows(*it, "clap_table")};
    }
    if (auto it = doc.find("transcript"); it != doc.end()) {
      if (!it->is_array()) format_error("\"transcript\" must be an array");
      std::vector<TranscriptSegment> segs;
      for (const auto& s : *it) {
        if (!s.is_object()) format_error("transcript entries must be objects");
        const auto& start = require(s, "start", "transcript");
        const auto& end = require(s, "end", "transcript");
        const auto& text = require(s, "text", "transcript");
        if (!start.is_number() || !end.is_number() || !text.is_string()) {
          format_error("transcript entry has wrongly typed fields");
        }
        segs.push_back({start.get<double>(), end.get<double>(), text.get<std::string>()});
      }
      bundle.transcript = std::move(segs);
    }
    if (auto it = doc.find("ocr"); it != doc.end()) {
      if (!it->is_array()) format_error("\"ocr\" must be an array");
      std::vector<OcrFrameText> frames_text;
      for (const auto& f : *it) {
        if (!f.is_object()) format_error("ocr entries must be objects");
        const auto& frame = require(f, "frame", "ocr");
        const auto& detections = require(f, "detections", "ocr");
        if (!frame.is_number_unsigned() || !detections.is_array()) {
          format_error("ocr entry has wrongly typed fields");
        }
        OcrFrameText entry{frame.get<std::size_t>(), {}};
        for (const auto& d : detections) {
          if (!d.is_string()) format_error("ocr detections must be strings");
          entry.detections.push_back(d.get<std::string>());
        }
        frames_text.push_back(std::move(entry));
      }
      bundle.ocr = std::move(frames_text);
    }
  } catch (const json::exception& e) {
    format_error(std::string("bundle: ") + e.what());
  }
  bundle.validate();
  return bundle;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw BundleError(BundleError::Kind::Io, "cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (in.bad()) throw BundleError(BundleError::Kind::Io, "error reading " + path.string());
  return buffer.str();
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw BundleError(BundleError::Kind::Io, "cannot write " + path.string());
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw BundleError(BundleError::Kind::Io, "error writing " + path.string());
}

ExpertBundle load_bundle(const std::filesystem::path& path) {
  return bundle_from_json(read_file(path));
}

void save_bundle(const ExpertBundle& bundle, const std::filesystem::path& path) {
  bundle.validate();
  write_file(path, bundle_to_json(bundle));
}

std::string ovd_to_json(const OvdSource& source) {
  return dump(json{{"video_id", source.video_id}, {"entries", write_rows(source.entries)}});
}

OvdSource ovd_from_json(std::string_view document) {
  const json doc = parse_document(document, "ovd source");
  OvdSource source;
  try {
    const auto& video_id = require(doc, "video_id", "ovd source");
    if (!video_id.is_string()) format_error("ovd source: \"video_id\" must be a string");
    source.video_id = video_id.get<std::string>();
    source.entries = read_rows(require(doc, "entries", "ovd source"), "entries");
  } catch (const json::exception& e) {
    format_error(std::string("ovd source: ") + e.what());
  }
  return source;
}

OvdSource load_ovd_source(const std::filesystem::path& path) {
  return ovd_from_json(read_file(path));
}

void save_ovd_source(const OvdSource& source, const std::filesystem::path& path) {
  write_file(path, ovd_to_json(source));
}

// --- per-leaf scoring ------------------------------------------------------

Signal score_embedding_leaf(const ExpertBundle& bundle, ExpertKind expert,
                            std::string_view query) {
  const std::optional<ScoreTable>* table = nullptr;
  if (expert == ExpertKind::Clip) table = &bundle.clip;
  else if (expert == ExpertKind::Clap) table = &bundle.clap;
  else throw std::invalid_argument("score_embedding_leaf: expert must be CLIP or CLAP");

  if (!table->has_value()) {
    throw BundleError(BundleError::Kind::MissingArtifact,
                      "bundle " + bundle.video_id + " has no " +
                          text::lower(to_string(expert)) + "_table");
  }
  const auto* row = (*table)->find(query);
  if (!row) {
    throw BundleError(BundleError::Kind::MissingRow,
                      std::string(to_string(expert)) + " table of " + bundle.video_id +
                          " has no row for \"" + std::string(query) + "\"");
  }
  return Signal{row->values, SignalStage::Raw, {}};
}

Signal score_ovd_leaf(const OvdSource* source, std::string_view query, std::size_t frame_count) {
  Signal out{std::vector<double>(frame_count, 0.0), SignalStage::Raw, {}};
  if (!source) return out;
  const auto variants = text::query_variants(query);
  for (const auto& entry : source->entries) {
    const auto key = text::normalize(entry.query);
    if (std::find(variants.begin(), variants.end(), key) == variants.end()) continue;
    if (entry.values.size() != frame_count) {
      throw BundleError(BundleError::Kind::InconsistentLength,
                        "ovd entry \"" + entry.query + "\" has " +
                            std::to_string(entry.values.size()) + " values, expected " +
                            std::to_string(frame_count));
    }
    for (std::size_t t = 0; t < frame_count; ++t) {
      out.values[t] = std::max(out.values[t], entry.values[t]);
    }
  }
  return out;
}

double frame_overlap(double start, double end, std::size_t frame, double frame_rate) {
  const double lo = static_cast<double>(frame) / frame_rate;
  const double hi = static_cast<double>(frame + 1) / frame_rate;
  const double overlap = std::min(end, hi) - std::max(start, lo);
  return overlap > 0.0 ? overlap * frame_rate : 0.0;
}

Signal score_asr_leaf(std::span<const TranscriptSegment> transcript, std::string_view query,
                      std::size_t frame_count, double frame_rate, const SemanticScorer& fallback) {
  Signal out{std::vector<double>(frame_count, 0.0), SignalStage::Raw, {}};
  for (const auto& seg : transcript) {
    double score = 0.0;
    if (text::contains_ci(seg.text, query)) {
      score = 1.0;
    } else if (fallback) {
      score = std::clamp(fallback(query, seg.text), 0.0, 1.0);
    } else {
      score = text::match_score(query, seg.text);
    }
    if (score <= 0.0) continue;

    const auto first = static_cast<std::size_t>(std::max(0.0, std::floor(seg.start * frame_rate)));
    const auto last = std::min<double>(static_cast<double>(frame_count),
                                       std::ceil(seg.end * frame_rate));
    for (auto t = first; static_cast<double>(t) < last; ++t) {
      out.values[t] = std::max(out.values[t], score * frame_overlap(seg.start, seg.end, t, frame_rate));
    }
  }
  return out;
}

Signal score_ocr_leaf(std::span<const OcrFrameText> ocr, std::string_view query,
                      std::size_t frame_count) {
  Signal out{std::vector<double>(frame_count, 0.0), SignalStage::Raw, {}};
  for (const auto& f : ocr) {
    if (f.frame >= frame_count) continue;
    for (const auto& detection : f.detections) {
      out.values[f.frame] = std::max(out.values[f.frame], text::match_score(query, detection));
    }
  }
  return out;
}

// --- tree-level extraction -------------------------------------------------

ProviderStats ProviderCounters::snapshot() const {
  ProviderStats stats;
  for (auto kind : kAllExperts) {
    stats.invocations[kind] = invocations_[index_of(kind)].load();
    stats.rows_scored[kind] = rows_[index_of(kind)].load();
  }
  return stats;
}

LeafSignals evaluate_leaves(const LogicTree& tree, const ExpertBundle& bundle,
                            const OvdSource* ovd, ProviderCounters& counters,
                            const LeafScoringOptions& options) {
  LeafSignals signals;
  for (const auto& [expert, ids] : leaves_by_expert(tree)) {
    if (is_query_independent(expert) && !bundle.has_artifacts(expert)) {
      const auto& first = tree.leaf(ids.front());
      throw LeafEvaluationError(first, BundleError::Kind::MissingArtifact,
                                "bundle " + bundle.video_id + " carries no " +
                                    std::string(to_string(expert)) + " artifacts");
    }
    counters.record_invocation(expert);

    std::map<std::string, std::vector<double>> computed;
    for (auto id : ids) {
      const auto& leaf = tree.leaf(id);
      const auto key = text::normalize(leaf.query);
      auto it = computed.find(key);
      if (it == computed.end()) {
        Signal raw;
        try {
          switch (expert) {
            case ExpertKind::Clip:
            case ExpertKind::Clap:
              raw = score_embedding_leaf(bundle, expert, leaf.query);
              break;
            case ExpertKind::Ovd:
              raw = score_ovd_leaf(ovd, leaf.query, bundle.frame_count);
              break;
            case ExpertKind::Asr:
              raw = score_asr_leaf(*bundle.transcript, leaf.query, bundle.frame_count,
                                   bundle.frame_rate, options.asr_fallback);
              break;
            case ExpertKind::Ocr:
              raw = score_ocr_leaf(*bundle.ocr, leaf.query, bundle.frame_count);
              break;
          }
        } catch (const BundleError& e) {
          throw LeafEvaluationError(leaf, e.kind(), e.what());
        }
        counters.record_row(expert);
        it = computed.emplace(key, std::move(raw.values)).first;
      }
      signals.emplace(id, Signal{it->second, SignalStage::Raw, id});
    }
  }
  return signals;
}

}  // namespace framelogic
