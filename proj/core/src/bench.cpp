#include "framelogic/bench.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

#include "framelogic/text_match.hpp"
#include "json.hpp"

namespace framelogic::bench {

using nlohmann::json;

namespace {

bool is_audio(ExpertKind kind) { return kind == ExpertKind::Asr || kind == ExpertKind::Clap; }

[[noreturn]] void invalid(const std::string& id, const std::string& message) {
  throw BenchError(BenchError::Kind::InvalidScript, id, message);
}

[[noreturn]] void format_error(const std::string& id, const std::string& message) {
  throw BenchError(BenchError::Kind::Format, id, message);
}

// Emitted (shifted) support clipped to the timeline; nullopt when empty.
std::optional<FrameInterval> emitted_support(const ScriptEvent& e, std::size_t frame_count) {
  const auto first = static_cast<std::int64_t>(e.support.first) + e.modality_offset;
  const auto last = static_cast<std::int64_t>(e.support.last) + e.modality_offset;
  const auto lo = std::max<std::int64_t>(0, first);
  const auto hi = std::min<std::int64_t>(static_cast<std::int64_t>(frame_count) - 1, last);
  if (lo > hi) return std::nullopt;
  return FrameInterval{static_cast<std::size_t>(lo), static_cast<std::size_t>(hi)};
}

}  // namespace

double NoiseSource::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double NoiseSource::gaussian(double stddev) {
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  return stddev * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

void EventScript::validate() const {
  if (id.empty()) invalid(id, "script id must be nonempty");
  if (frame_count == 0) invalid(id, "T must be >= 1");
  if (!(frame_rate > 0.0) || !std::isfinite(frame_rate)) invalid(id, "frame_rate must be > 0");
  if (!(noise_level >= 0.0) || !std::isfinite(noise_level)) {
    invalid(id, "noise_level must be >= 0");
  }
  if (!(baseline >= 0.0 && baseline <= 1.0)) invalid(id, "baseline must lie in [0, 1]");
  for (std::size_t i = 0; i < events.size(); ++i) {
    const auto& e = events[i];
    const auto where = "event " + std::to_string(i) + ": ";
    if (text::normalize(e.query).empty()) invalid(id, where + "query is empty");
    if (e.support.first > e.support.last || e.support.last >= frame_count) {
      invalid(id, where + "support must satisfy first <= last < T");
    }
    if (!(e.amplitude > 0.0 && e.amplitude <= 1.0)) invalid(id, where + "amplitude must lie in (0, 1]");
    if (e.modality_offset != 0 && !is_audio(e.expert)) {
      invalid(id, where + "modality_offset applies to ASR/CLAP events only");
    }
  }
}

SyntheticVideo generate(const EventScript& script) {
  script.validate();
  const auto n = script.frame_count;

  // Score-table rows keyed by normalized query; first spelling wins.
  std::map<ExpertKind, std::map<std::string, ScoreRow>> tables;
  for (auto kind : {ExpertKind::Clip, ExpertKind::Clap, ExpertKind::Ovd}) tables[kind];
  std::map<std::size_t, std::vector<std::string>> ocr_frames;
  std::vector<TranscriptSegment> transcript;

  for (const auto& e : script.events) {
    const auto emitted = emitted_support(e, n);
    const auto key = text::normalize(e.query);
    switch (e.expert) {
      case ExpertKind::Clip:
      case ExpertKind::Clap:
      case ExpertKind::Ovd: {
        auto& row = tables[e.expert][key];
        if (row.values.empty()) row = ScoreRow{e.query, std::vector<double>(n, script.baseline)};
        if (!emitted) break;
        for (auto t = emitted->first; t <= emitted->last; ++t) {
          row.values[t] = std::max(row.values[t], script.baseline + e.amplitude);
        }
        break;
      }
      case ExpertKind::Asr:
        if (emitted) {
          transcript.push_back({static_cast<double>(emitted->first) / script.frame_rate,
                                static_cast<double>(emitted->last + 1) / script.frame_rate, key});
        }
        break;
      case ExpertKind::Ocr:
        if (emitted) {
          for (auto t = emitted->first; t <= emitted->last; ++t) ocr_frames[t].push_back(e.query);
        }
        break;
    }
  }

  NoiseSource noise(script.seed);
  for (auto& [kind, rows] : tables) {
    for (auto& [key, row] : rows) {
      for (auto& v : row.values) {
        if (script.noise_level > 0.0) v += noise.gaussian(script.noise_level);
        v = std::clamp(v, 0.0, 1.0);
      }
    }
  }

  std::stable_sort(transcript.begin(), transcript.end(),
                   [](const auto& a, const auto& b) { return a.start < b.start; });

  SyntheticVideo video;
  auto& bundle = video.bundle;
  bundle.video_id = script.id;
  bundle.frame_count = n;
  bundle.frame_rate = script.frame_rate;
  bundle.provider = ProviderKind::Synthetic;
  auto rows_of = [&](ExpertKind kind) {
    std::vector<ScoreRow> rows;
    for (auto& [key, row] : tables[kind]) rows.push_back(row);
    return rows;
  };
  bundle.clip = ScoreTable{ExpertKind::Clip, rows_of(ExpertKind::Clip)};
  bundle.clap = ScoreTable{ExpertKind::Clap, rows_of(ExpertKind::Clap)};
  bundle.transcript = std::move(transcript);
  bundle.ocr.emplace();
  for (auto& [frame, detections] : ocr_frames) bundle.ocr->push_back({frame, detections});

  video.ovd = OvdSource{script.id, rows_of(ExpertKind::Ovd)};
  video.truth.script_id = script.id;
  for (const auto& e : script.events) {
    if (e.target) video.truth.events.push_back(e.support);
  }
  bundle.validate();
  return video;
}

LogicTree matched_tree(const EventScript& script, const ParseOptions& options) {
  if (script.tree) return parse_tree(*script.tree, options);

  std::vector<std::pair<ExpertKind, std::string>> pairs;
  for (const auto& e : script.events) {
    if (!e.target) continue;
    std::pair<ExpertKind, std::string> p{e.expert, text::normalize(e.query)};
    if (std::find(pairs.begin(), pairs.end(), p) == pairs.end()) pairs.push_back(p);
  }
  if (pairs.empty()) invalid(script.id, "no target events to build a matched tree from");

  auto leaf = [](const auto& p) {
    return json{{"op", "LEAF"}, {"expert", to_string(p.first)}, {"query", p.second}};
  };
  json doc;
  if (pairs.size() == 1) {
    doc = leaf(pairs.front());
  } else {
    doc = json{{"op", "OR"}, {"children", json::array()}};
    for (const auto& p : pairs) doc["children"].push_back(leaf(p));
  }
  return parse_tree(doc.dump(), options);
}

TreeTemplate matched_template() {
  return TreeTemplate{"matched", [](const EventScript& s) { return matched_tree(s); }};
}

ScriptOutcome score_selection(const GroundTruth& truth, const SelectionResult& selection) {
  ScriptOutcome out;
  out.script_id = truth.script_id;
  out.events_total = truth.events.size();
  out.frames_selected = selection.frames.size();
  for (const auto& interval : truth.events) {
    const bool hit = std::any_of(selection.frames.begin(), selection.frames.end(),
                                 [&](const SelectedFrame& f) { return interval.contains(f.frame); });
    out.events_hit += hit ? 1 : 0;
  }
  for (const auto& f : selection.frames) {
    const bool relevant = std::any_of(truth.events.begin(), truth.events.end(),
                                      [&](const FrameInterval& i) { return i.contains(f.frame); });
    out.frames_relevant += relevant ? 1 : 0;
  }
  return out;
}

const RecallCell* RecallReport::find(std::string_view tree_template, SelectorKind selector,
                                     std::size_t budget) const {
  for (const auto& cell : cells) {
    if (cell.tree_template == tree_template && cell.selector == selector && cell.budget == budget) {
      return &cell;
    }
  }
  return nullptr;
}

RecallReport run_benchmark(const std::vector<EventScript>& scripts,
                           const std::vector<TreeTemplate>& templates,
                           const std::vector<SelectorKind>& selectors,
                           const std::vector<std::size_t>& budgets, const EngineConfig& config) {
  RecallReport report;
  for (const auto& script : scripts) {
    const auto video = generate(script);
    for (const auto& tmpl : templates) {
      Evaluation evaluation;
      try {
        const auto tree = tmpl.build(script);
        ProviderCounters counters;
        auto raw = evaluate_leaves(tree, video.bundle, &video.ovd, counters, config.scoring);
        auto leaves = process_leaves(tree, std::move(raw), config);
        evaluation = evaluate(tree, leaves.smoothed, config.compose);
      } catch (const BenchError&) {
        throw;
      } catch (const std::exception& e) {
        throw BenchError(BenchError::Kind::Pipeline, script.id, e.what());
      }
      for (auto selector : selectors) {
        for (auto budget : budgets) {
          SelectionResult selection;
          try {
            selection = select_frames(selector, evaluation, budget, config);
          } catch (const std::exception& e) {
            throw BenchError(BenchError::Kind::Pipeline, script.id, e.what());
          }
          auto outcome = score_selection(video.truth, selection);
          outcome.tree_template = tmpl.name;
          outcome.selector = selector;
          outcome.budget = budget;
          report.outcomes.push_back(std::move(outcome));
        }
      }
    }
  }

  std::stable_sort(report.outcomes.begin(), report.outcomes.end(),
                   [](const ScriptOutcome& a, const ScriptOutcome& b) {
                     return a.script_id < b.script_id;
                   });
  if (scripts.empty()) return report;
  for (const auto& tmpl : templates) {
    for (auto selector : selectors) {
      for (auto budget : budgets) {
        RecallCell cell{tmpl.name, selector, budget, 0, 0, 0, 0.0, 0.0};
        std::size_t selected = 0;
        std::size_t relevant = 0;
        for (const auto& o : report.outcomes) {
          if (o.tree_template != tmpl.name || o.selector != selector || o.budget != budget) continue;
          ++cell.scripts;
          cell.events_total += o.events_total;
          cell.events_hit += o.events_hit;
          selected += o.frames_selected;
          relevant += o.frames_relevant;
        }
        if (cell.events_total > 0) {
          cell.recall = static_cast<double>(cell.events_hit) / static_cast<double>(cell.events_total);
        }
        if (selected > 0) {
          cell.relevant_fraction = static_cast<double>(relevant) / static_cast<double>(selected);
        }
        report.cells.push_back(std::move(cell));
      }
    }
  }
  return report;
}

// --- formats ---------------------------------------------------------------

namespace {

json script_json(const EventScript& s) {
  json events = json::array();
  for (const auto& e : s.events) {
    events.push_back(json{{"expert", to_string(e.expert)},
                          {"query", e.query},
                          {"support", {e.support.first, e.support.last}},
                          {"amplitude", e.amplitude},
                          {"modality_offset", e.modality_offset},
                          {"target", e.target}});
  }
  json doc{{"format_version", kScriptFormatVersion},
           {"id", s.id},
           {"T", s.frame_count},
           {"frame_rate", s.frame_rate},
           {"noise_level", s.noise_level},
           {"baseline", s.baseline},
           {"seed", s.seed},
           {"events", std::move(events)}};
  if (s.tree) doc["tree"] = json::parse(*s.tree);
  return doc;
}

EventScript script_from(const json& doc) {
  std::string id;
  if (doc.is_object()) {
    if (auto it = doc.find("id"); it != doc.end() && it->is_string()) id = it->get<std::string>();
  }
  if (!doc.is_object()) format_error(id, "script must be a JSON object");
  try {
    if (doc.value("format_version", -1) != kScriptFormatVersion) {
      format_error(id, "unsupported or missing format_version");
    }
    EventScript s;
    s.id = doc.at("id").get<std::string>();
    s.frame_count = doc.at("T").get<std::size_t>();
    s.frame_rate = doc.value("frame_rate", 1.0);
    s.noise_level = doc.value("noise_level", 0.0);
    s.baseline = doc.value("baseline", 0.0);
    s.seed = doc.value("seed", std::uint64_t{0});
    for (const auto& e : doc.at("events")) {
      ScriptEvent event;
      const auto expert_name = e.at("expert").get<std::string>();
      auto expert = parse_expert(expert_name);
      if (!expert) invalid(id, "unknown expert \"" + expert_name + "\"");
      event.expert = *expert;
      event.query = e.at("query").get<std::string>();
      const auto& support = e.at("support");
      if (!support.is_array() || support.size() != 2) invalid(id, "support must be [first, last]");
      event.support = {support[0].get<std::size_t>(), support[1].get<std::size_t>()};
      event.amplitude = e.value("amplitude", 1.0);
      event.modality_offset = e.value("modality_offset", std::int64_t{0});
      event.target = e.value("target", true);
      s.events.push_back(std::move(event));
    }
    if (auto it = doc.find("tree"); it != doc.end() && !it->is_null()) s.tree = it->dump();
    return s;
  } catch (const json::exception& e) {
    format_error(id, e.what());
  }
}

json parse_or_throw(std::string_view document, const char* what) {
  json doc = json::parse(document.begin(), document.end(), nullptr, false);
  if (doc.is_discarded()) format_error("", std::string(what) + " is not valid JSON");
  return doc;
}

}  // namespace

std::string script_to_json(const EventScript& script) { return script_json(script).dump(2) + "\n"; }

EventScript script_from_json(std::string_view document) {
  return script_from(parse_or_throw(document, "script"));
}

std::string suite_to_json(const std::vector<EventScript>& scripts) {
  json list = json::array();
  for (const auto& s : scripts) list.push_back(script_json(s));
  return json{{"format_version", kScriptFormatVersion}, {"scripts", std::move(list)}}.dump(2) + "\n";
}

std::vector<EventScript> suite_from_json(std::string_view document) {
  const auto doc = parse_or_throw(document, "script suite");
  if (doc.is_object() && doc.contains("scripts")) {
    if (doc.value("format_version", -1) != kScriptFormatVersion) {
      format_error("", "unsupported or missing suite format_version");
    }
    const auto& list = doc["scripts"];
    if (!list.is_array()) format_error("", "\"scripts\" must be an array");
    std::vector<EventScript> scripts;
    for (const auto& s : list) scripts.push_back(script_from(s));
    return scripts;
  }
  return {script_from(doc)};
}

std::string truth_to_json(const GroundTruth& truth) {
  json events = json::array();
  for (const auto& e : truth.events) events.push_back({e.first, e.last});
  return json{{"script_id", truth.script_id}, {"events", std::move(events)}}.dump(2) + "\n";
}

std::string report_to_json(const RecallReport& report) {
  json cells = json::array();
  for (const auto& c : report.cells) {
    cells.push_back(json{{"template", c.tree_template},
                         {"selector", to_string(c.selector)},
                         {"K", c.budget},
                         {"scripts", c.scripts},
                         {"events_total", c.events_total},
                         {"events_hit", c.events_hit},
                         {"recall", c.recall},
                         {"relevant_fraction", c.relevant_fraction}});
  }
  json outcomes = json::array();
  for (const auto& o : report.outcomes) {
    outcomes.push_back(json{{"script", o.script_id},
                            {"template", o.tree_template},
                            {"selector", to_string(o.selector)},
                            {"K", o.budget},
                            {"events_total", o.events_total},
                            {"events_hit", o.events_hit},
                            {"frames_selected", o.frames_selected},
                            {"frames_relevant", o.frames_relevant}});
  }
  return json{{"format_version", kReportFormatVersion},
              {"cells", std::move(cells)},
              {"outcomes", std::move(outcomes)}}
             .dump(2) +
         "\n";
}

RecallReport report_from_json(std::string_view document) {
  const auto doc = parse_or_throw(document, "report");
  try {
    if (doc.value("format_version", -1) != kReportFormatVersion) {
      format_error("", "unsupported or missing report format_version");
    }
    auto selector_of = [](const json& j) {
      auto s = parse_selector(j.get<std::string>());
      if (!s) format_error("", "unknown selector " + j.dump());
      return *s;
    };
    RecallReport report;
    for (const auto& c : doc.at("cells")) {
      report.cells.push_back(RecallCell{c.at("template").get<std::string>(),
                                        selector_of(c.at("selector")),
                                        c.at("K").get<std::size_t>(),
                                        c.at("scripts").get<std::size_t>(),
                                        c.at("events_total").get<std::size_t>(),
                                        c.at("events_hit").get<std::size_t>(),
                                        c.at("recall").get<double>(),
                                        c.at("relevant_fraction").get<double>()});
    }
    for (const auto& o : doc.at("outcomes")) {
      report.outcomes.push_back(ScriptOutcome{o.at("script").get<std::string>(),
                                              o.at("template").get<std::string>(),
                                              selector_of(o.at("selector")),
                                              o.at("K").get<std::size_t>(),
                                              o.at("events_total").get<std::size_t>(),
                                              o.at("events_hit").get<std::size_t>(),
                                              o.at("frames_selected").get<std::size_t>(),
                                              o.at("frames_relevant").get<std::size_t>()});
    }
    return report;
  } catch (const json::exception& e) {
    format_error("", e.what());
  }
}

std::vector<EventScript> demo_suite(std::size_t count, std::uint64_t seed) {
  static const std::vector<std::string> kObjects = {"red car",  "black dog", "man in suit",
                                                    "bicycle",  "guitar",    "white horse"};
  static const std::vector<std::string> kScenes = {"crowd cheering", "sunset", "cooking"};

  std::mt19937_64 rng(seed);
  auto pick = [&](std::size_t lo, std::size_t hi) {  // inclusive
    return lo + static_cast<std::size_t>(rng() % (hi - lo + 1));
  };
  auto unit = [&] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };

  std::vector<EventScript> suite;
  for (std::size_t i = 0; i < count; ++i) {
    EventScript s;
    s.id = "demo-" + std::string(i < 10 ? "00" : i < 100 ? "0" : "") + std::to_string(i);
    s.frame_count = 600;
    s.noise_level = 0.04;
    s.baseline = 0.3;
    s.seed = seed * 1000 + i;
    const auto& object = kObjects[pick(0, kObjects.size() - 1)];

    // Targets and tree-relevant decoys never come within `kGap` frames of
    // each other; a decoy that finds no room is dropped.
    constexpr std::size_t kGap = 40;
    std::vector<FrameInterval> taken;
    auto place = [&](std::size_t length) -> std::optional<FrameInterval> {
      for (int attempt = 0; attempt < 200; ++attempt) {
        const auto first = pick(10, s.frame_count - 20 - length);
        const FrameInterval candidate{first, first + length - 1};
        const bool clear = std::none_of(taken.begin(), taken.end(), [&](const FrameInterval& o) {
          return candidate.first < o.last + kGap && o.first < candidate.last + kGap;
        });
        if (clear) {
          taken.push_back(candidate);
          return candidate;
        }
      }
      return std::nullopt;
    };

    const auto targets = pick(1, 3);
    for (std::size_t k = 0; k < targets; ++k) {
      const auto support = place(pick(4, 8));
      if (!support) break;
      s.events.push_back({ExpertKind::Ovd, object, *support, 0.35 + 0.2 * unit(), 0, true});
      s.events.push_back({ExpertKind::Asr, object, *support, 1.0,
                          static_cast<std::int64_t>(pick(0, 2)), false});
    }
    for (std::size_t k = 0, decoys = pick(2, 4); k < decoys; ++k) {
      if (auto support = place(pick(3, 6))) {
        s.events.push_back({ExpertKind::Ovd, object, *support, 0.1 + 0.05 * unit(), 0, false});
      }
    }
    if (auto support = place(pick(2, 4))) {
      s.events.push_back({ExpertKind::Asr, object, *support, 1.0, 0, false});
    }
    for (std::size_t k = 0; k < 2; ++k) {
      const auto length = pick(5, 15);
      const auto first = pick(0, s.frame_count - length);
      s.events.push_back({ExpertKind::Clip, kScenes[pick(0, kScenes.size() - 1)],
                          {first, first + length - 1}, 0.4, 0, false});
    }

    s.tree = json{{"op", "AND"},
                  {"children",
                   {json{{"expert", "OVD"}, {"query", object}},
                    json{{"expert", "ASR"}, {"query", object}}}}}
                 .dump();
    suite.push_back(std::move(s));
  }
  return suite;
}

}  // namespace framelogic::bench
