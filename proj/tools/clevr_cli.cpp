// clevr: generate, execute, analyze, audit and validate CLEVR-style datasets.
//
// stdout carries data only; errors and warnings go to stderr as one JSON record per line.
// Exit codes: 0 success, 1 validation failure, 2 usage error, 3 internal error.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "clevr/audit.hpp"
#include "clevr/dataset_io.hpp"
#include "clevr/relaxed.hpp"
#include "clevr/sampler.hpp"

namespace fs = std::filesystem;
using namespace clevr;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 1;
constexpr int kExitUsage = 2;
constexpr int kExitInternal = 3;
constexpr const char* kConfigEnv = "CLEVR_CONFIG";

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A failure that is about the data rather than the tool (exit code 1).
struct InvalidInput : std::runtime_error {
  InvalidInput(std::string kind, const std::string& message) : std::runtime_error(message), kind(std::move(kind)) {}
  std::string kind;
};

void emit(const char* level, const std::string& kind, const std::string& message, Json extra = Json::object()) {
  Json j = {{"level", level}, {"kind", kind}, {"message", message}};
  for (auto& [k, v] : extra.items()) j[k] = v;
  std::cerr << j.dump() << "\n";
}

std::string default_data(const std::string& name) { return std::string(CLEVR_DATA_DIR) + "/" + name; }

// Config precedence: defaults < config file (--config or $CLEVR_CONFIG) < --set < dedicated flags.
struct ConfigSources {
  std::string config_path;
  std::vector<std::string> overrides;

  ConfigMap merged() const {
    ConfigMap map;
    std::string path = config_path;
    if (path.empty()) {
      if (const char* env = std::getenv(kConfigEnv)) path = env;
    }
    if (!path.empty()) map = read_config_file(path);
    for (const auto& item : overrides) {
      for (auto& [k, v] : parse_config_text(item)) map[k] = v;
    }
    return map;
  }
};

// Keeps the keys that `defaults` knows about; keys known to neither config are rejected.
ConfigMap select_keys(const ConfigMap& map, const ConfigMap& defaults) {
  const ConfigMap scene_keys = SamplerConfig{}.to_map(), question_keys = GenerationConfig{}.to_map();
  ConfigMap out;
  for (const auto& [k, v] : map) {
    if (defaults.count(k)) out[k] = v;
    else if (!scene_keys.count(k) && !question_keys.count(k)) throw ConfigError("unknown config key '" + k + "'");
  }
  return out;
}

RunManifest start_manifest(const std::string& command, ConfigMap config, std::uint64_t seed) {
  RunManifest m;
  m.command = command;
  m.config = std::move(config);
  m.seed = seed;
  return m;
}

void add_input(RunManifest& m, const std::string& path) { m.inputs.push_back({path, sha256_file(path)}); }

void write_output(RunManifest& m, const fs::path& dir, const std::string& name, const std::string& text) {
  write_text_file((dir / name).string(), text);
  m.outputs.push_back({name, sha256_hex(text)});
}

std::vector<Split> parse_splits(const std::string& list) {
  std::vector<Split> out;
  std::stringstream in(list);
  for (std::string item; std::getline(in, item, ',');) {
    auto s = parse_split(item);
    if (!s) throw UsageError("unknown split '" + item + "'");
    out.push_back(*s);
  }
  if (out.empty()) throw UsageError("no eval splits given");
  return out;
}

SceneGraph load_one_scene(const std::string& path, int scene_id) {
  const std::string text = read_text_file(path);
  const Json first = Json::parse(text.substr(0, text.find('\n')), nullptr, false);
  if (!first.is_discarded() && first.is_object() && first.contains("format")) {
    for (auto& s : read_scenes(path)) {
      if (scene_id < 0 || s.scene_id() == scene_id) return s;
    }
    throw InvalidInput("unknown_scene", path + " has no scene " + std::to_string(scene_id));
  }
  try {
    return scene_from_json(Json::parse(text));
  } catch (const Json::exception& e) {
    throw InvalidInput("parse_error", path + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw InvalidInput("parse_error", path + ": " + e.what());
  }
}

Program load_program(const std::string& path) {
  try {
    return program_from_json(Json::parse(read_text_file(path)));
  } catch (const Json::exception& e) {
    throw InvalidInput("parse_error", path + ": " + e.what());
  } catch (const ParseError& e) {
    throw InvalidInput("parse_error", path + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------------------

struct GenScenesArgs {
  int count = 0;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string condition;
  std::string out;
};

int gen_scenes(const GenScenesArgs& a, const ConfigSources& sources, unsigned workers) {
  if (a.count < 0) throw UsageError("--count must be >= 0");
  ConfigMap map = select_keys(sources.merged(), SamplerConfig{}.to_map());
  if (a.seed_set) map["seed"] = std::to_string(a.seed);
  if (!a.condition.empty()) map["condition"] = a.condition;
  const SamplerConfig config = SamplerConfig::from_map(map);
  if (a.count == 0) emit("warning", "empty_output", "--count 0 writes an empty scene file");

  const fs::path dir(a.out);
  fs::create_directories(dir);
  RunManifest m = start_manifest("gen-scenes", config.to_map(), config.seed);
  write_output(m, dir, "scenes.jsonl", scenes_to_jsonl(sample_scenes(config, a.count, workers)));
  write_text_file((dir / "scenes.manifest.json").string(), manifest_to_json(m).dump(2) + "\n");
  std::cout << manifest_to_json(m).dump() << "\n";
  return kExitOk;
}

struct GenQuestionsArgs {
  std::string scenes;
  std::string families = default_data("families.json");
  std::string synonyms = default_data("synonyms.json");
  int per_image = 0;
  std::uint64_t seed = 0;
  bool seed_set = false;
  bool no_balance = false;
  std::string out;
};

int gen_questions(const GenQuestionsArgs& a, const ConfigSources& sources, unsigned workers) {
  ConfigMap map = select_keys(sources.merged(), GenerationConfig{}.to_map());
  if (a.per_image > 0) map["questions_per_image"] = std::to_string(a.per_image);
  if (a.seed_set) map["seed"] = std::to_string(a.seed);
  if (a.no_balance) map["balancing"] = "false";
  const GenerationConfig config = GenerationConfig::from_map(map);

  const auto scenes = read_scenes(a.scenes);
  std::vector<QuestionFamily> families;
  try {
    families = load_families(a.families);
  } catch (const ValidationError& e) {
    throw InvalidInput("family_validation", e.what());
  }
  const SynonymTable synonyms = load_synonyms(a.synonyms);
  const GeneratedDataset data = generate_dataset(scenes, families, synonyms, config, workers);
  if (!data.starved_scenes.empty()) {
    emit("warning", "scene_starved", std::to_string(data.starved_scenes.size()) + " scenes produced too few questions",
         {{"scene_ids", data.starved_scenes}});
  }

  const fs::path dir(a.out);
  fs::create_directories(dir);
  RunManifest m = start_manifest("gen-questions", config.to_map(), config.seed);
  add_input(m, a.scenes);
  add_input(m, a.families);
  add_input(m, a.synonyms);
  write_output(m, dir, "questions.jsonl", questions_to_jsonl(data.instances));
  write_output(m, dir, "stats.json", generation_stats_to_json(data).dump(2) + "\n");
  write_output(m, dir, "splits.json", splits_to_json(data.scene_splits).dump(2) + "\n");
  write_text_file((dir / "questions.manifest.json").string(), manifest_to_json(m).dump(2) + "\n");
  std::cout << manifest_to_json(m).dump() << "\n";
  return kExitOk;
}

struct ExecArgs {
  std::string scene;
  std::string program;
  int scene_id = -1;
  bool relaxed = false;
};

int exec_program(const ExecArgs& a) {
  const SceneGraph scene = load_one_scene(a.scene, a.scene_id);
  const Program program = load_program(a.program);
  if (auto err = typecheck(program)) throw InvalidInput("type_error", err->message());
  Json out = {{"scene_id", scene.scene_id()}, {"program", to_functional_string(program)}};
  if (a.relaxed) {
    Json answers = Json::array();
    for (const auto& v : relaxed_answer(program, scene)) answers.push_back(answer_string(v));
    out["answers"] = answers;
    std::cout << out.dump() << "\n";
    return kExitOk;
  }
  const ExecOutcome outcome = execute(program, scene);
  if (!outcome.ok()) {
    const ExecFailure& f = outcome.failure();
    emit("error", std::string(to_string(f.kind)), f.detail, {{"node", f.node}, {"set_size", f.set_size}});
    return kExitInvalid;
  }
  out["answer"] = answer_string(outcome.answer());
  const EffectiveQuestion eq = effective_question(program, scene);
  out["effective_program"] = to_functional_string(eq.pruned);
  out["effective_size"] = eq.effective_size;
  std::cout << out.dump() << "\n";
  return kExitOk;
}

struct DatasetArgs {
  std::string dataset;
  std::string scenes;  // defaults to <dataset>/scenes.jsonl

  std::string questions_path() const { return (fs::path(dataset) / "questions.jsonl").string(); }
  std::string scenes_path() const { return scenes.empty() ? (fs::path(dataset) / "scenes.jsonl").string() : scenes; }
};

std::vector<std::pair<int, Split>> read_splits(const std::string& dataset) {
  const fs::path path = fs::path(dataset) / "splits.json";
  std::vector<std::pair<int, Split>> out;
  if (!fs::exists(path)) return out;
  const Json j = Json::parse(read_text_file(path.string()));
  for (Split s : {Split::train, Split::val, Split::test}) {
    for (const auto& id : j.at(std::string(to_string(s)))) out.emplace_back(id.get<int>(), s);
  }
  return out;
}

template <typename K>
Json counts_json(const std::map<K, long>& m) {
  Json j = Json::object();
  for (const auto& [k, v] : m) {
    if constexpr (std::is_same_v<K, std::string>) j[k] = v;
    else if constexpr (std::is_same_v<K, int>) j[std::to_string(k)] = v;
    else j[std::string(to_string(k))] = v;
  }
  return j;
}

struct AnalyzeArgs : DatasetArgs {
  std::string profiles_out;
};

int analyze(const AnalyzeArgs& a, unsigned workers) {
  const auto scenes = read_scenes(a.scenes_path());
  const auto questions = read_questions(a.questions_path(), &scenes);
  std::vector<QuestionProfile> profiles(questions.size());
  parallel_for(questions.size(), workers, [&](std::size_t i) { profiles[i] = profile(questions[i].program, scenes[questions[i].scene_index]); });

  std::map<FunctionKind, long> by_type;
  std::map<int, long> by_size, by_effective;
  std::map<std::string, long> by_topology, by_relation;
  long absolute = 0, spatial = 0, mismatched = 0;
  std::string lines;
  for (std::size_t i = 0; i < questions.size(); ++i) {
    const QuestionProfile& p = profiles[i];
    if (!(p == questions[i].profile)) ++mismatched;
    ++by_type[p.question_type];
    ++by_size[p.size];
    ++by_effective[p.effective_size];
    ++by_topology[std::string(to_string(p.topology))];
    if (p.spatial_relation_count > 0) {
      ++by_relation["spatial"];
      ++spatial;
      absolute += p.absolute_spatial_answerable;
    }
    if (p.same_attribute_relation_count > 0) ++by_relation["same_attribute"];
    if (p.spatial_relation_count == 0 && p.same_attribute_relation_count == 0) ++by_relation["none"];
    if (!a.profiles_out.empty()) {
      Json j = profile_to_json(p);
      j["question_id"] = questions[i].question_id;
      lines += j.dump() + "\n";
    }
  }
  if (!a.profiles_out.empty()) write_text_file(a.profiles_out, lines);
  const Json report = {{"questions", questions.size()},
                       {"question_type", counts_json(by_type)},
                       {"size", counts_json(by_size)},
                       {"effective_size", counts_json(by_effective)},
                       {"topology", counts_json(by_topology)},
                       {"relationship_type", counts_json(by_relation)},
                       {"spatial_questions", spatial},
                       {"absolute_spatial_answerable_fraction", spatial ? static_cast<double>(absolute) / static_cast<double>(spatial) : 0.0},
                       {"stored_profile_mismatches", mismatched}};
  std::cout << report.dump(2) << "\n";
  if (mismatched > 0) {
    emit("error", "profile_mismatch", std::to_string(mismatched) + " stored profiles differ from recomputation");
    return kExitInvalid;
  }
  return kExitOk;
}

struct AuditArgs : DatasetArgs {
  std::string splits = "val,test";
  double margin = 0.05;
  long min_count = 50;
  std::string format = "json";
  bool fail_on_alarm = false;
};

int audit_dataset(const AuditArgs& a) {
  const auto questions = read_questions(a.questions_path());
  AuditReport report;
  try {
    report = audit(audit_records(questions), {a.margin, parse_splits(a.splits), a.min_count});
  } catch (const EmptySplit& e) {
    throw InvalidInput("empty_split", e.what());
  }
  if (a.format == "text") std::cout << audit_to_text(report);
  else if (a.format == "csv") std::cout << audit_to_csv(report);
  else std::cout << audit_to_json(report).dump(2) << "\n";
  if (report.any_alarm()) emit("warning", "bias_alarm", "Q-type-mode accuracy exceeds chance by more than the margin");
  return a.fail_on_alarm && report.any_alarm() ? kExitInvalid : kExitOk;
}

int validate_dataset(const DatasetArgs& a, unsigned workers) {
  const auto scenes = read_scenes(a.scenes_path());
  const auto violations = validate_questions(a.questions_path(), scenes, read_splits(a.dataset), {true, workers});
  Json list = Json::array();
  for (const auto& v : violations) list.push_back(violation_to_json(v));
  Json mismatched = Json::array();
  for (const char* name : {"questions.manifest.json", "scenes.manifest.json"}) {
    const fs::path path = fs::path(a.dataset) / name;
    if (!fs::exists(path)) continue;
    for (const auto& f : manifest_mismatches(manifest_from_json(Json::parse(read_text_file(path.string()))), a.dataset)) {
      mismatched.push_back(f);
    }
  }
  const bool pass = violations.empty() && mismatched.empty();
  std::cout << Json{{"pass", pass}, {"violations", list}, {"checksum_mismatches", mismatched}}.dump(2) << "\n";
  return pass ? kExitOk : kExitInvalid;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Generate and analyze CLEVR-style scene/question datasets"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand
  ConfigSources sources;
  unsigned workers = 1;
  app.add_option("--config", sources.config_path, std::string("Config file (JSON or key=value); default $") + kConfigEnv);
  app.add_option("--set", sources.overrides, "Config override key=value (repeatable)");
  app.add_option("--workers", workers, "Worker threads; output does not depend on it")->check(CLI::Range(1U, 256U));

  GenScenesArgs gs;
  auto* cmd_scenes = app.add_subcommand("gen-scenes", "Sample scene graphs");
  cmd_scenes->add_option("--count", gs.count, "Number of scenes")->required();
  cmd_scenes->add_option("--seed", gs.seed, "Master seed")->each([&](const std::string&) { gs.seed_set = true; });
  cmd_scenes->add_option("--condition", gs.condition, "full, A or B");
  cmd_scenes->add_option("--out", gs.out, "Output directory")->required();

  GenQuestionsArgs gq;
  auto* cmd_questions = app.add_subcommand("gen-questions", "Instantiate question families on scenes");
  cmd_questions->add_option("--scenes", gq.scenes, "scenes.jsonl")->required()->check(CLI::ExistingFile);
  cmd_questions->add_option("--families", gq.families, "Family catalog JSON")->check(CLI::ExistingFile);
  cmd_questions->add_option("--synonyms", gq.synonyms, "Synonym table JSON")->check(CLI::ExistingFile);
  cmd_questions->add_option("--per-image", gq.per_image, "Questions per scene");
  cmd_questions->add_option("--seed", gq.seed, "Master seed")->each([&](const std::string&) { gq.seed_set = true; });
  cmd_questions->add_flag("--no-balance", gq.no_balance, "Disable answer balancing (control run)");
  cmd_questions->add_option("--out", gq.out, "Output directory")->required();

  ExecArgs ex;
  auto* cmd_exec = app.add_subcommand("exec", "Execute one program on one scene");
  cmd_exec->add_option("--scene", ex.scene, "Scene JSON, or scenes.jsonl with --scene-id")->required()->check(CLI::ExistingFile);
  cmd_exec->add_option("--scene-id", ex.scene_id, "Scene to pick from a scenes.jsonl");
  cmd_exec->add_option("--program", ex.program, "Program JSON")->required()->check(CLI::ExistingFile);
  cmd_exec->add_flag("--relaxed", ex.relaxed, "Print the relaxed answer set");

  AnalyzeArgs an;
  auto* cmd_analyze = app.add_subcommand("analyze", "Recompute question profiles and aggregate them");
  cmd_analyze->add_option("--dataset", an.dataset, "Dataset directory")->required()->check(CLI::ExistingDirectory);
  cmd_analyze->add_option("--scenes", an.scenes, "scenes.jsonl (default <dataset>/scenes.jsonl)");
  cmd_analyze->add_option("--profiles", an.profiles_out, "Write per-question profiles as JSON lines");

  AuditArgs au;
  auto* cmd_audit = app.add_subcommand("audit", "Q-type-mode bias audit and dataset statistics");
  cmd_audit->add_option("--dataset", au.dataset, "Dataset directory")->required()->check(CLI::ExistingDirectory);
  cmd_audit->add_option("--splits", au.splits, "Comma-separated eval splits");
  cmd_audit->add_option("--margin", au.margin, "Bias alarm margin above chance")->check(CLI::Range(0.0, 1.0));
  cmd_audit->add_option("--min-count", au.min_count, "Eval questions a type needs before it can alarm")->check(CLI::NonNegativeNumber);
  cmd_audit->add_option("--format", au.format, "json, text or csv")->check(CLI::IsMember({"json", "text", "csv"}));
  cmd_audit->add_flag("--fail-on-alarm", au.fail_on_alarm, "Exit 1 when a bias alarm fires");

  DatasetArgs va;
  auto* cmd_validate = app.add_subcommand("validate", "Re-execute and check every question");
  cmd_validate->add_option("--dataset", va.dataset, "Dataset directory")->required()->check(CLI::ExistingDirectory);
  cmd_validate->add_option("--scenes", va.scenes, "scenes.jsonl (default <dataset>/scenes.jsonl)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    emit("error", "usage", e.what());
    return kExitUsage;
  }

  try {
    if (cmd_scenes->parsed()) return gen_scenes(gs, sources, workers);
    if (cmd_questions->parsed()) return gen_questions(gq, sources, workers);
    if (cmd_exec->parsed()) return exec_program(ex);
    if (cmd_analyze->parsed()) return analyze(an, workers);
    if (cmd_audit->parsed()) return audit_dataset(au);
    if (cmd_validate->parsed()) return validate_dataset(va, workers);
  } catch (const UsageError& e) {
    emit("error", "usage", e.what());
    return kExitUsage;
  } catch (const ConfigError& e) {
    emit("error", "config", e.what());
    return kExitUsage;
  } catch (const InvalidInput& e) {
    emit("error", e.kind, e.what());
    return kExitInvalid;
  } catch (const DatasetError& e) {
    emit("error", "dataset", e.what());
    return kExitInvalid;
  } catch (const std::exception& e) {
    emit("error", "internal", e.what());
    return kExitInternal;
  }
  return kExitUsage;
}
