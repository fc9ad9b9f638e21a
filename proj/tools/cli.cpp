#include "cli.hpp"

#include <cstdlib>
#include <functional>
#include <iomanip>
#include <iostream>
#include <memory>
#include <sstream>

#include "CLI11.hpp"
#include "framelogic/bench.hpp"
#include "framelogic/cache.hpp"
#include "json.hpp"

namespace framelogic::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::array<const char*, 4> kSelectArtifacts = {"selection.json", "curve.json",
                                                         "attribution.json", "stats.json"};

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

// Registers flags whose values are applied to a RunConfig only when given,
// so flags override the config file which overrides defaults.
class FlagSet {
 public:
  template <class T, class F>
  CLI::Option* add(CLI::App* app, const std::string& name, const std::string& help, F apply) {
    auto value = std::make_shared<T>();
    auto* opt = app->add_option(name, *value, help);
    appliers_.push_back([opt, value, apply](RunConfig& c) {
      if (opt->count() > 0) apply(c, *value);
    });
    return opt;
  }

  void add_strict_flag(CLI::App* app) {
    auto value = std::make_shared<bool>(true);
    auto* opt = app->add_flag("--strict-schema,!--lenient-schema", *value,
                              "Reject (strict) or ignore (lenient) unknown tree keys");
    appliers_.push_back([opt, value](RunConfig& c) {
      if (opt->count() > 0) c.parse.strict_schema = *value;
    });
  }

  void apply(RunConfig& config) const {
    for (const auto& f : appliers_) f(config);
  }

 private:
  std::vector<std::function<void(RunConfig&)>> appliers_;
};

ExpertSet parse_experts_or_throw(std::string_view csv) {
  auto set = ExpertSet::parse(csv);
  if (!set) throw std::invalid_argument("invalid expert list \"" + std::string(csv) + "\"");
  return *set;
}

SmoothingMode parse_mode_or_throw(std::string_view name) {
  auto mode = parse_smoothing_mode(name);
  if (!mode) {
    throw std::invalid_argument("unknown smoothing mode \"" + std::string(name) +
                                "\" (expected renormalized or strict-eq2)");
  }
  return *mode;
}

SelectorKind parse_selector_or_throw(std::string_view name) {
  auto kind = parse_selector(lower(name));
  if (!kind) throw std::invalid_argument("unknown selector \"" + std::string(name) + "\"");
  return *kind;
}

void add_parse_flags(CLI::App* app, FlagSet& flags) {
  flags.add<std::string>(app, "--experts", "Active experts, e.g. CLIP,OVD,ASR",
                         [](RunConfig& c, const std::string& v) {
                           c.parse.active_experts = parse_experts_or_throw(v);
                         });
  flags.add_strict_flag(app);
}

void add_engine_flags(CLI::App* app, FlagSet& flags) {
  add_parse_flags(app, flags);
  flags.add<double>(app, "--gamma", "Normalization sigmoid sharpness",
                    [](RunConfig& c, double v) { c.engine.normalization.gamma = v; });
  flags.add<double>(app, "--delta", "Normalization MAD stabilizer",
                    [](RunConfig& c, double v) { c.engine.normalization.delta = v; });
  flags.add<double>(app, "--kappa", "RIGHT_AFTER decay rate",
                    [](RunConfig& c, double v) { c.engine.compose.kappa = v; });
  for (auto kind : kAllExperts) {
    flags.add<double>(app, "--sigma-" + lower(to_string(kind)),
                      "Smoothing bandwidth for " + std::string(to_string(kind)) + " (0 disables)",
                      [kind](RunConfig& c, double v) { c.engine.smoothing.sigma_by_expert[kind] = v; });
  }
  flags.add<std::string>(app, "--smoothing-mode", "renormalized | strict-eq2",
                         [](RunConfig& c, const std::string& v) {
                           c.engine.smoothing.mode = parse_mode_or_throw(v);
                         });
  flags.add<std::size_t>(app, "--peaks", "PASS peak count",
                         [](RunConfig& c, std::size_t v) { c.engine.pass_overrides.peaks = v; });
  flags.add<std::size_t>(app, "--neighbors", "PASS neighbors per peak",
                         [](RunConfig& c, std::size_t v) { c.engine.pass_overrides.neighbors = v; });
  flags.add<std::size_t>(app, "--window", "PASS neighbor window",
                         [](RunConfig& c, std::size_t v) { c.engine.pass_overrides.window = v; });
  flags.add<std::size_t>(app, "--min-dist", "PASS minimum peak separation",
                         [](RunConfig& c, std::size_t v) {
                           c.engine.pass_overrides.min_distance = v;
                         });
}

std::string read_text(const fs::path& path) {
  try {
    return read_file(path);
  } catch (const BundleError& e) {
    throw std::invalid_argument(e.what());
  }
}

RunConfig resolve(const std::string& config_path, const FlagSet& flags) {
  RunConfig config;
  if (!config_path.empty()) apply_config_json(config, read_text(config_path));
  flags.apply(config);
  return config;
}

// --- artifact documents ------------------------------------------------------

json experts_json(const ExpertMap<std::uint64_t>& m) {
  json out = json::object();
  for (auto kind : kAllExperts) out[std::string(to_string(kind))] = m[kind];
  return out;
}

json selection_json(const std::string& video_id, SelectorKind selector, std::size_t budget,
                    const EngineConfig& engine, const SelectionResult& selection) {
  json frames = json::array();
  for (const auto& f : selection.frames) {
    frames.push_back({{"frame", f.frame}, {"phase", to_string(f.phase)}});
  }
  json doc{{"video_id", video_id},
           {"selector", to_string(selector)},
           {"K", budget},
           {"selected", selection.frames.size()},
           {"frames", std::move(frames)}};
  if (selector == SelectorKind::Pass) {
    const auto p = engine.pass_params();
    doc["pass"] = {{"peaks", p.peaks},
                   {"neighbors", p.neighbors},
                   {"window", p.window},
                   {"min_distance", p.min_distance}};
  }
  return doc;
}

json attribution_json(const LogicTree& tree, const AttributionMatrix& attribution) {
  json leaves = json::array();
  for (const auto& leaf : tree.leaves()) {
    leaves.push_back({{"leaf", leaf.id.value},
                      {"expert", to_string(leaf.expert)},
                      {"query", leaf.query},
                      {"path", leaf.path},
                      {"scores", attribution.row(leaf.id)}});
  }
  return json{{"frames", attribution.frames()}, {"leaves", std::move(leaves)}};
}

json stats_json(const std::string& video_id, const CacheStats& cache,
                const ProviderStats& providers) {
  json per_expert = json::object();
  for (auto kind : kAllExperts) {
    const bool cacheable = is_query_independent(kind);
    // Cacheable experts count feature extractions this run paid for; experts
    // the tree does not use are never charged.
    const auto used = providers.invocations[kind] > 0;
    const std::uint64_t extractions = used ? cache.extractions[kind] : 0;
    per_expert[std::string(to_string(kind))] = {
        {"cacheable", cacheable},
        {"invocations", cacheable ? extractions : providers.invocations[kind]},
        {"scoring_calls", providers.invocations[kind]},
        {"rows_scored", providers.rows_scored[kind]}};
  }
  return json{{"video_id", video_id},
              {"cache",
               {{"hits", cache.hits},
                {"misses", cache.misses},
                {"evictions", cache.evictions},
                {"disk_hits", cache.disk_hits},
                {"loader_calls", cache.loader_calls},
                {"extractions", experts_json(cache.extractions)}}},
              {"providers", std::move(per_expert)}};
}

std::string pretty(const json& doc) { return doc.dump(2) + "\n"; }

// --- commands ------------------------------------------------------------------

int cmd_validate(const RunConfig& config, std::ostream& out) {
  const auto tree = parse_tree(read_text(*config.tree), config.parse);
  out << "valid: " << config.tree->string() << "\n"
      << "depth: " << tree.depth() << "\n"
      << "leaves: " << tree.leaf_count() << "\n"
      << "experts: " << tree.experts_used().to_string() << "\n";
  return kOk;
}

int cmd_select(const RunConfig& config, bool use_disk_cache, std::ostream& out, std::ostream& err) {
  const auto out_dir = *config.out;
  auto remove_artifacts = [&] {
    std::error_code ec;
    for (const auto* name : kSelectArtifacts) fs::remove(out_dir / name, ec);
  };

  try {
    config.engine.validate();
    const auto tree = parse_tree(read_text(*config.tree), config.parse);

    const auto bytes = read_text(*config.bundle);
    auto parsed = bundle_from_json(bytes);
    const auto key = CacheKey::for_source(parsed.video_id, bytes);
    BundleCache cache(8, use_disk_cache ? default_cache_dir() : std::nullopt);
    const auto bundle = cache.get_or_load(key, [&] { return std::move(parsed); });

    std::optional<OvdSource> ovd;
    if (config.ovd) {
      ovd = ovd_from_json(read_text(*config.ovd));
      if (ovd->video_id != bundle->video_id) {
        throw BundleError(BundleError::Kind::Format,
                          "detector source is for video \"" + ovd->video_id + "\", bundle is \"" +
                              bundle->video_id + "\"");
      }
    } else if (tree.experts_used().contains(ExpertKind::Ovd)) {
      err << "warning: tree has OVD leaves but no --ovd source; they score 0\n";
    }

    ProviderCounters counters;
    auto raw = evaluate_leaves(tree, *bundle, ovd ? &*ovd : nullptr, counters, config.engine.scoring);
    const auto leaves = process_leaves(tree, std::move(raw), config.engine);
    const auto evaluation = evaluate(tree, leaves.smoothed, config.engine.compose);
    const auto selection =
        select_frames(config.selector, evaluation, config.engine.budget, config.engine);

    const std::array<std::string, 4> documents = {
        pretty(selection_json(bundle->video_id, config.selector, config.engine.budget,
                              config.engine, selection)),
        pretty(json{{"T", evaluation.curve.size()}, {"values", evaluation.curve.values}}),
        pretty(attribution_json(tree, selection.attribution)),
        pretty(stats_json(bundle->video_id, cache.stats(), counters.snapshot()))};

    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw std::invalid_argument("cannot create " + out_dir.string() + ": " + ec.message());
    for (std::size_t i = 0; i < documents.size(); ++i) {
      try {
        write_file(out_dir / kSelectArtifacts[i], documents[i]);
      } catch (const BundleError& e) {
        throw std::invalid_argument(e.what());
      }
    }

    out << "selected " << selection.frames.size() << " of " << evaluation.curve.size()
        << " frames -> " << out_dir.string() << "\n";
    return kOk;
  } catch (...) {
    remove_artifacts();
    throw;
  }
}

std::vector<bench::EventScript> load_scripts(const std::string& path, bool demo,
                                             std::size_t demo_count,
                                             std::optional<std::uint64_t> seed) {
  if (demo) return bench::demo_suite(demo_count, seed.value_or(2024));
  auto scripts = bench::suite_from_json(read_text(path));
  if (seed) {
    for (auto& s : scripts) s.seed = *seed;
  }
  return scripts;
}

int cmd_bench(const RunConfig& config, const std::vector<bench::EventScript>& scripts,
              const std::vector<std::string>& selector_names,
              const std::vector<std::size_t>& budgets, std::ostream& out) {
  config.engine.validate();
  std::vector<SelectorKind> selectors;
  for (const auto& name : selector_names) selectors.push_back(parse_selector_or_throw(name));
  for (auto k : budgets) {
    if (k == 0) throw std::invalid_argument("budgets must be >= 1");
  }

  const auto report =
      bench::run_benchmark(scripts, {bench::matched_template()}, selectors, budgets, config.engine);
  if (config.out) {
    try {
      write_file(*config.out, bench::report_to_json(report));
    } catch (const BundleError& e) {
      throw std::invalid_argument(e.what());
    }
  }

  out << scripts.size() << " scripts\n";
  for (const auto& c : report.cells) {
    out << std::left << std::setw(8) << to_string(c.selector) << " K=" << std::setw(4) << c.budget
        << " recall " << std::fixed << std::setprecision(4) << c.recall << " (" << c.events_hit
        << "/" << c.events_total << ")\n";
  }
  out.unsetf(std::ios::floatfield);
  return kOk;
}

int cmd_gen(const std::vector<bench::EventScript>& scripts, const fs::path& out_dir,
            std::ostream& out) {
  for (const auto& script : scripts) {
    const auto video = bench::generate(script);
    const auto dir = out_dir / script.id;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw std::invalid_argument("cannot create " + dir.string() + ": " + ec.message());
    try {
      save_bundle(video.bundle, dir / "bundle.json");
      save_ovd_source(video.ovd, dir / "ovd.json");
      write_file(dir / "truth.json", bench::truth_to_json(video.truth));
      write_file(dir / "script.json", bench::script_to_json(script));
      const auto tree = bench::matched_tree(script);
      write_file(dir / "tree.json", pretty(json::parse(serialize_tree(tree))));
    } catch (const BundleError& e) {
      throw std::invalid_argument(e.what());
    }
  }
  out << "generated " << scripts.size() << " videos in " << out_dir.string() << "\n";
  return kOk;
}

int report(std::exception_ptr error, std::ostream& err) {
  try {
    std::rethrow_exception(error);
  } catch (const TreeError& e) {
    err << "error: tree: " << e.what() << "\n";
    switch (e.kind()) {
      case TreeErrorKind::Syntax: return kTreeSyntax;
      case TreeErrorKind::Arity: return kTreeArity;
      case TreeErrorKind::InactiveExpert: return kInactiveExpert;
      case TreeErrorKind::Schema:
      case TreeErrorKind::EmptyQuery:
      case TreeErrorKind::Limit: return kTreeSchema;
    }
    return kTreeSchema;
  } catch (const LeafEvaluationError& e) {
    err << "error: experts: " << e.what() << "\n";
    return kInputData;
  } catch (const BundleError& e) {
    err << "error: bundle: " << e.what() << "\n";
    return e.kind() == BundleError::Kind::Io ? kUsage : kInputData;
  } catch (const bench::BenchError& e) {
    err << "error: bench: " << e.what() << "\n";
    return e.kind() == bench::BenchError::Kind::Pipeline ? kPipeline : kInputData;
  } catch (const SignalError& e) {
    err << "error: signal: " << e.what() << "\n";
    return e.kind() == SignalError::Kind::InvalidParams ? kUsage : kPipeline;
  } catch (const ComposeError& e) {
    err << "error: compose: " << e.what() << "\n";
    return e.kind() == ComposeError::Kind::InvalidParams ? kUsage : kPipeline;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kPipeline;
  }
}

}  // namespace

void apply_config_json(RunConfig& config, std::string_view document) {
  const auto doc = json::parse(document.begin(), document.end(), nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) {
    throw std::invalid_argument("config: expected a JSON object");
  }
  auto number = [](const json& v, const std::string& key) {
    if (!v.is_number()) throw std::invalid_argument("config: \"" + key + "\" must be a number");
    return v.get<double>();
  };
  auto count = [](const json& v, const std::string& key) {
    if (!v.is_number_unsigned()) {
      throw std::invalid_argument("config: \"" + key + "\" must be a nonnegative integer");
    }
    return v.get<std::size_t>();
  };
  auto text = [](const json& v, const std::string& key) {
    if (!v.is_string()) throw std::invalid_argument("config: \"" + key + "\" must be a string");
    return v.get<std::string>();
  };

  auto& e = config.engine;
  for (const auto& [key, v] : doc.items()) {
    if (key == "frames") {
      e.budget = count(v, key);
    } else if (key == "gamma") {
      e.normalization.gamma = number(v, key);
    } else if (key == "delta") {
      e.normalization.delta = number(v, key);
    } else if (key == "kappa") {
      e.compose.kappa = number(v, key);
    } else if (key == "sigma") {
      if (!v.is_object()) throw std::invalid_argument("config: \"sigma\" must be an object");
      for (const auto& [name, s] : v.items()) {
        auto kind = parse_expert(name);
        if (!kind) throw std::invalid_argument("config: unknown expert \"" + name + "\" in sigma");
        e.smoothing.sigma_by_expert[*kind] = number(s, "sigma." + name);
      }
    } else if (key == "smoothing_mode") {
      e.smoothing.mode = parse_mode_or_throw(text(v, key));
    } else if (key == "peaks") {
      e.pass_overrides.peaks = count(v, key);
    } else if (key == "neighbors") {
      e.pass_overrides.neighbors = count(v, key);
    } else if (key == "window") {
      e.pass_overrides.window = count(v, key);
    } else if (key == "min_distance") {
      e.pass_overrides.min_distance = count(v, key);
    } else if (key == "experts") {
      config.parse.active_experts = parse_experts_or_throw(text(v, key));
    } else if (key == "strict_schema") {
      if (!v.is_boolean()) throw std::invalid_argument("config: \"strict_schema\" must be a boolean");
      config.parse.strict_schema = v.get<bool>();
    } else if (key == "selector") {
      config.selector = parse_selector_or_throw(text(v, key));
    } else {
      throw std::invalid_argument("config: unknown key \"" + key + "\"");
    }
  }
}

std::optional<fs::path> default_cache_dir() {
  if (const char* dir = std::getenv("HIMU_CACHE_DIR"); dir && *dir) return fs::path(dir);
  if (const char* xdg = std::getenv("XDG_CACHE_HOME"); xdg && *xdg) {
    return fs::path(xdg) / "framelogic";
  }
  if (const char* home = std::getenv("HOME"); home && *home) {
    return fs::path(home) / ".cache" / "framelogic";
  }
  return std::nullopt;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Query-program frame selection over per-frame expert scores", "framelogic"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "framelogic 0.1.0");

  std::string tree_path, bundle_path, ovd_path, out_path, config_path, scripts_path;
  std::size_t frames = 16;
  std::size_t demo_count = 50;
  std::uint64_t seed = 0;
  std::string selector = "pass";
  bool demo = false;
  bool no_disk_cache = false;
  std::vector<std::string> selectors = {"uniform", "topk", "pass"};
  std::vector<std::size_t> budgets = bench::kDefaultBudgets;

  FlagSet validate_flags, select_flags, bench_flags;

  auto* validate = app.add_subcommand("validate", "Check a logic tree and summarize it");
  validate->add_option("--tree", tree_path, "Logic tree JSON")->required();
  validate->add_option("--config", config_path, "JSON config file");
  add_parse_flags(validate, validate_flags);

  auto* select = app.add_subcommand("select", "Run the pipeline and write selection artifacts");
  select->add_option("--tree", tree_path, "Logic tree JSON")->required();
  select->add_option("--bundle", bundle_path, "Expert bundle JSON")->required();
  select->add_option("--ovd", ovd_path, "Detector score source JSON");
  select->add_option("--out", out_path, "Output directory")->required();
  select->add_option("--config", config_path, "JSON config file");
  auto* frames_opt = select->add_option("--frames", frames, "Frame budget K");
  auto* selector_opt = select->add_option("--selector", selector, "pass | topk | uniform");
  select->add_flag("--no-disk-cache", no_disk_cache, "Keep the bundle cache in memory only");
  add_engine_flags(select, select_flags);

  auto* bench_cmd = app.add_subcommand("bench", "Recall benchmark over synthetic scripts");
  auto* bench_scripts = bench_cmd->add_option("--scripts", scripts_path, "Script or suite JSON");
  auto* bench_demo = bench_cmd->add_flag("--demo", demo, "Use the built-in demo suite");
  bench_scripts->excludes(bench_demo);
  bench_cmd->add_option("--demo-count", demo_count, "Scripts in the demo suite");
  auto* bench_seed = bench_cmd->add_option("--seed", seed, "Noise seed override");
  bench_cmd->add_option("--out", out_path, "Report JSON path");
  bench_cmd->add_option("--config", config_path, "JSON config file");
  bench_cmd->add_option("--selectors", selectors, "Selectors to compare")->delimiter(',');
  bench_cmd->add_option("--budgets", budgets, "Frame budgets")->delimiter(',');
  add_engine_flags(bench_cmd, bench_flags);

  auto* gen = app.add_subcommand("gen", "Write synthetic bundles, detector sources and truth");
  auto* gen_scripts = gen->add_option("--scripts", scripts_path, "Script or suite JSON");
  auto* gen_demo = gen->add_flag("--demo", demo, "Use the built-in demo suite");
  gen_scripts->excludes(gen_demo);
  gen->add_option("--demo-count", demo_count, "Scripts in the demo suite");
  auto* gen_seed = gen->add_option("--seed", seed, "Noise seed override");
  gen->add_option("--out", out_path, "Output directory")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    std::ostringstream help_out;
    const int code = app.exit(e, help_out, err);
    out << help_out.str();
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (validate->parsed()) {
      auto config = resolve(config_path, validate_flags);
      config.tree = tree_path;
      return cmd_validate(config, out);
    }
    if (select->parsed()) {
      auto config = resolve(config_path, select_flags);
      if (frames_opt->count() > 0) config.engine.budget = frames;
      if (selector_opt->count() > 0) config.selector = parse_selector_or_throw(selector);
      config.tree = tree_path;
      config.bundle = bundle_path;
      if (!ovd_path.empty()) config.ovd = ovd_path;
      config.out = out_path;
      return cmd_select(config, !no_disk_cache, out, err);
    }
    if (bench_cmd->parsed()) {
      if (scripts_path.empty() && !demo) throw std::invalid_argument("bench: give --scripts or --demo");
      auto config = resolve(config_path, bench_flags);
      if (!out_path.empty()) config.out = out_path;
      const auto scripts = load_scripts(scripts_path, demo, demo_count,
                                        bench_seed->count() ? std::optional(seed) : std::nullopt);
      return cmd_bench(config, scripts, selectors, budgets, out);
    }
    if (gen->parsed()) {
      if (scripts_path.empty() && !demo) throw std::invalid_argument("gen: give --scripts or --demo");
      const auto scripts = load_scripts(scripts_path, demo, demo_count,
                                        gen_seed->count() ? std::optional(seed) : std::nullopt);
      return cmd_gen(scripts, out_path, out);
    }
  } catch (...) {
    return report(std::current_exception(), err);
  }
  return kUsage;
}

}  // namespace framelogic::cli
