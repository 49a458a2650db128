#pragma once

#include <openssl/evp.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "clevr/generator.hpp"
#include "clevr/parallel.hpp"
#include "clevr/program_json.hpp"
#include "clevr/scene_json.hpp"

namespace clevr {

inline constexpr int kDatasetSchemaVersion = 1;
inline constexpr std::string_view kToolVersion = "1.0.0";
inline constexpr std::string_view kScenesFormat = "clevr-scenes";
inline constexpr std::string_view kQuestionsFormat = "clevr-questions";

class DatasetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------------------
// JSON-lines files: a header record, then one record per line.

inline Json jsonl_header(std::string_view format) {
  return {{"format", format}, {"schema_version", kDatasetSchemaVersion}};
}

inline void check_header(const Json& header, std::string_view format, const std::string& path) {
  if (!header.is_object() || header.value("format", "") != format) {
    throw DatasetError(path + ": not a " + std::string(format) + " file");
  }
  if (header.value("schema_version", -1) != kDatasetSchemaVersion) {
    throw DatasetError(path + ": unsupported schema_version " + header.value("schema_version", Json(nullptr)).dump());
  }
}

/// Raw record lines after the header has been checked. Blank lines are skipped.
inline std::vector<std::string> read_jsonl_lines(const std::string& path, std::string_view format) {
  std::ifstream in(path);
  if (!in) throw DatasetError("cannot read " + path);
  std::string line;
  if (!std::getline(in, line)) throw DatasetError(path + ": empty file");
  Json header;
  try {
    header = Json::parse(line);
  } catch (const Json::exception&) {
    throw DatasetError(path + ": header is not JSON");
  }
  check_header(header, format, path);
  std::vector<std::string> lines;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") != std::string::npos) lines.push_back(line);
  }
  return lines;
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DatasetError("cannot write " + path);
  out << text;
  if (!out) throw DatasetError("write failed: " + path);
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DatasetError("cannot read " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

// ---------------------------------------------------------------------------------------
// Scenes

inline std::string scenes_to_jsonl(const std::vector<SceneGraph>& scenes) {
  std::string out = jsonl_header(kScenesFormat).dump() + "\n";
  for (const auto& s : scenes) out += scene_to_json(s).dump() + "\n";
  return out;
}

inline void write_scenes(const std::string& path, const std::vector<SceneGraph>& scenes) {
  write_text_file(path, scenes_to_jsonl(scenes));
}

inline std::vector<SceneGraph> read_scenes(const std::string& path) {
  std::vector<SceneGraph> scenes;
  const auto lines = read_jsonl_lines(path, kScenesFormat);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    try {
      scenes.push_back(scene_from_json(Json::parse(lines[i])));
    } catch (const std::exception& e) {
      throw DatasetError(path + ":" + std::to_string(i + 2) + ": " + e.what());
    }
  }
  return scenes;
}

// ---------------------------------------------------------------------------------------
// Questions

inline Json question_to_json(const QuestionInstance& q) {
  return {{"question_id", q.question_id},
          {"scene_id", q.scene_id},
          {"split", to_string(q.split)},
          {"family_id", q.family_id},
          {"template_index", q.template_index},
          {"question", q.text},
          {"answer", answer_string(q.answer)},
          {"binding", binding_to_json(q.binding)},
          {"program", program_to_json(q.program)["nodes"]},
          {"profile", profile_to_json(q.profile)}};
}

inline Binding binding_from_json(const Json& j) {
  Binding b;
  for (const auto& [slot, value] : j.items()) {
    if (value.is_null()) {
      b[slot] = std::nullopt;
      continue;
    }
    auto lit = parse_any_literal(value.get<std::string>());
    if (!lit) throw ParseError("binding " + slot + ": unknown value '" + value.get<std::string>() + "'");
    b[slot] = *lit;
  }
  return b;
}

/// Parses one record. Throws ParseError on malformed fields and on ill-typed programs.
inline QuestionInstance question_from_json(const Json& j) {
  try {
    QuestionInstance q;
    q.question_id = j.at("question_id").get<int>();
    q.scene_id = j.at("scene_id").get<int>();
    const auto split = parse_split(j.at("split").get<std::string>());
    if (!split) throw ParseError("unknown split '" + j.at("split").get<std::string>() + "'");
    q.split = *split;
    q.family_id = j.at("family_id").get<std::string>();
    q.template_index = j.value("template_index", 0);
    q.text = j.at("question").get<std::string>();
    q.program = program_from_json(j.at("program"));
    if (auto err = typecheck(q.program)) throw ParseError("type error: " + err->message());
    const std::string answer = j.at("answer").get<std::string>();
    auto value = parse_answer(answer, signature(q.program.question_type()).output);
    if (!value) throw ParseError("answer '" + answer + "' does not fit " + std::string(to_string(q.program.question_type())));
    q.answer = *value;
    if (j.contains("binding")) q.binding = binding_from_json(j.at("binding"));
    if (j.contains("profile")) q.profile = profile_from_json(j.at("profile"));
    return q;
  } catch (const Json::exception& e) {
    throw ParseError(std::string("malformed question record: ") + e.what());
  }
}

inline std::string questions_to_jsonl(const std::vector<QuestionInstance>& questions) {
  std::string out = jsonl_header(kQuestionsFormat).dump() + "\n";
  for (const auto& q : questions) out += question_to_json(q).dump() + "\n";
  return out;
}

inline void write_questions(const std::string& path, const std::vector<QuestionInstance>& questions) {
  write_text_file(path, questions_to_jsonl(questions));
}

/// Strict read; `scenes`, when given, fills in scene_index.
inline std::vector<QuestionInstance> read_questions(const std::string& path, const std::vector<SceneGraph>* scenes = nullptr) {
  std::map<int, std::size_t> index;
  if (scenes) {
    for (std::size_t i = 0; i < scenes->size(); ++i) index[(*scenes)[i].scene_id()] = i;
  }
  std::vector<QuestionInstance> out;
  const auto lines = read_jsonl_lines(path, kQuestionsFormat);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    try {
      QuestionInstance q = question_from_json(Json::parse(lines[i]));
      if (scenes) {
        auto it = index.find(q.scene_id);
        if (it == index.end()) throw ParseError("unknown scene_id " + std::to_string(q.scene_id));
        q.scene_index = it->second;
      }
      out.push_back(std::move(q));
    } catch (const std::exception& e) {
      throw DatasetError(path + ":" + std::to_string(i + 2) + ": " + e.what());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------------------
// Side files

inline Json splits_to_json(const std::vector<std::pair<int, Split>>& scene_splits) {
  Json j = {{"schema_version", kDatasetSchemaVersion}, {"train", Json::array()}, {"val", Json::array()}, {"test", Json::array()}};
  for (const auto& [scene_id, split] : scene_splits) j[std::string(to_string(split))].push_back(scene_id);
  return j;
}

inline Json generation_stats_to_json(const GeneratedDataset& d) {
  Json families = Json::array();
  for (std::size_t i = 0; i < d.family_ids.size(); ++i) families.push_back(family_stats_to_json(d.family_ids[i], d.family_stats[i]));
  return {{"schema_version", kDatasetSchemaVersion},
          {"questions", d.instances.size()},
          {"scenes", d.scene_splits.size()},
          {"starved_scenes", d.starved_scenes},
          {"dfs", {{"expanded_nodes", d.dfs.expanded_nodes},
                   {"full_executions", d.dfs.full_executions},
                   {"budget_exhausted", d.dfs.budget_exhausted}}},
          {"families", families}};
}

// ---------------------------------------------------------------------------------------
// Manifest

inline std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 failed");
  }
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", digest[i]);
    hex += buf;
  }
  return hex;
}

inline std::string sha256_file(const std::string& path) { return sha256_hex(read_text_file(path)); }

struct FileEntry {
  std::string path;
  std::string sha256;
};

struct RunManifest {
  std::string tool_version{kToolVersion};
  int schema_version = kDatasetSchemaVersion;
  std::string command;
  ConfigMap config;
  std::uint64_t seed = 0;
  std::vector<FileEntry> inputs;
  std::vector<FileEntry> outputs;  // paths relative to the manifest's directory
};

inline Json manifest_to_json(const RunManifest& m) {
  auto files = [](const std::vector<FileEntry>& entries) {
    Json a = Json::array();
    for (const auto& e : entries) a.push_back({{"path", e.path}, {"sha256", e.sha256}});
    return a;
  };
  Json config = Json::object();
  for (const auto& [k, v] : m.config) config[k] = v;
  return {{"tool_version", m.tool_version}, {"schema_version", m.schema_version}, {"command", m.command},
          {"seed", m.seed},                 {"config", config},                   {"inputs", files(m.inputs)},
          {"outputs", files(m.outputs)}};
}

inline RunManifest manifest_from_json(const Json& j) {
  try {
    if (j.at("schema_version").get<int>() != kDatasetSchemaVersion) throw DatasetError("unsupported manifest schema_version");
    RunManifest m;
    m.tool_version = j.at("tool_version").get<std::string>();
    m.command = j.at("command").get<std::string>();
    m.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& [k, v] : j.at("config").items()) m.config[k] = v.get<std::string>();
    for (const auto& e : j.at("inputs")) m.inputs.push_back({e.at("path").get<std::string>(), e.at("sha256").get<std::string>()});
    for (const auto& e : j.at("outputs")) m.outputs.push_back({e.at("path").get<std::string>(), e.at("sha256").get<std::string>()});
    return m;
  } catch (const Json::exception& e) {
    throw DatasetError(std::string("malformed manifest: ") + e.what());
  }
}

/// Output files whose current checksum differs from the manifest (or which are missing).
inline std::vector<std::string> manifest_mismatches(const RunManifest& m, const std::filesystem::path& dir) {
  std::vector<std::string> bad;
  for (const auto& e : m.outputs) {
    const auto path = (dir / e.path).string();
    if (!std::filesystem::exists(path) || sha256_file(path) != e.sha256) bad.push_back(e.path);
  }
  return bad;
}

// ---------------------------------------------------------------------------------------
// Validation

struct DatasetViolation {
  int line = 0;          // 1-based line in the questions file
  int question_id = -1;  // -1 when the record could not be parsed that far
  std::string rule;
  std::string detail;
};

inline Json violation_to_json(const DatasetViolation& v) {
  Json j = {{"line", v.line}, {"rule", v.rule}, {"detail", v.detail}};
  j["question_id"] = v.question_id >= 0 ? Json(v.question_id) : Json(nullptr);
  return j;
}

struct ValidationOptions {
  bool check_profiles = true;
  unsigned workers = 1;
};

namespace detail {

inline void check_question_line(const std::string& line, int line_no, const std::map<int, const SceneGraph*>& scenes,
                                const std::map<int, Split>& splits, bool check_profiles,
                                std::vector<DatasetViolation>& out) {
  auto fail = [&](int id, std::string rule, std::string detail) { out.push_back({line_no, id, std::move(rule), std::move(detail)}); };
  Json j;
  try {
    j = Json::parse(line);
  } catch (const Json::exception& e) {
    return fail(-1, "json", e.what());
  }
  const int id = j.is_object() && j.contains("question_id") && j["question_id"].is_number_integer() ? j["question_id"].get<int>() : -1;
  QuestionInstance q;
  try {
    q = question_from_json(j);
  } catch (const std::exception& e) {
    const std::string what = e.what();
    return fail(id, what.rfind("type error", 0) == 0 ? "type_error" : "parse_error", what);
  }
  auto it = scenes.find(q.scene_id);
  if (it == scenes.end()) return fail(id, "unknown_scene", "scene_id " + std::to_string(q.scene_id));
  const SceneGraph& scene = *it->second;
  if (auto s = splits.find(q.scene_id); s != splits.end() && s->second != q.split) {
    fail(id, "split_mismatch", "question split " + std::string(to_string(q.split)) + ", scene split " + std::string(to_string(s->second)));
  }
  if (q.text.find_first_not_of(" \t") == std::string::npos) fail(id, "empty_text", "");
  const ExecOutcome outcome = execute(q.program, scene);
  if (!outcome.ok()) return fail(id, std::string(to_string(outcome.failure().kind)), outcome.failure().detail);
  if (outcome.answer() != q.answer) {
    return fail(id, "answer_mismatch", "recorded " + answer_string(q.answer) + ", executes to " + answer_string(outcome.answer()));
  }
  if (auto node = degeneracy_check(q.program, scene)) fail(id, "degenerate", "node " + std::to_string(*node));
  if (check_profiles && j.contains("profile") && !(profile(q.program, scene) == q.profile)) {
    fail(id, "profile_mismatch", profile_to_json(profile(q.program, scene)).dump());
  }
}

}  // namespace detail

/// Re-validates a questions file against its scenes: parse, typecheck, re-execute, compare
/// answers, degeneracy, profiles, split assignment, dense ids and per-scene duplicate text.
/// Never throws on bad records; a missing or mis-headed file throws DatasetError.
inline std::vector<DatasetViolation> validate_questions(const std::string& questions_path, const std::vector<SceneGraph>& scenes,
                                                        const std::vector<std::pair<int, Split>>& scene_splits = {},
                                                        const ValidationOptions& options = {}) {
  const auto lines = read_jsonl_lines(questions_path, kQuestionsFormat);
  std::map<int, const SceneGraph*> by_id;
  for (const auto& s : scenes) by_id[s.scene_id()] = &s;
  const std::map<int, Split> splits(scene_splits.begin(), scene_splits.end());

  std::vector<std::vector<DatasetViolation>> per_line(lines.size());
  parallel_for(lines.size(), options.workers, [&](std::size_t i) {
    detail::check_question_line(lines[i], static_cast<int>(i) + 2, by_id, splits, options.check_profiles, per_line[i]);
  });
  std::vector<DatasetViolation> out;
  for (auto& v : per_line) out.insert(out.end(), v.begin(), v.end());

  // Cross-record checks on whatever parsed far enough.
  std::set<std::pair<int, std::string>> texts;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    Json j = Json::parse(lines[i], nullptr, false);
    if (j.is_discarded() || !j.is_object()) continue;
    const int line_no = static_cast<int>(i) + 2;
    const Json& id = j["question_id"];
    if (!id.is_number_integer() || id.get<long>() != static_cast<long>(i)) {
      out.push_back({line_no, id.is_number_integer() ? id.get<int>() : -1, "question_id", "expected " + std::to_string(i)});
    }
    if (j["scene_id"].is_number_integer() && j["question"].is_string()) {
      if (!texts.emplace(j["scene_id"].get<int>(), normalize_text(j["question"].get<std::string>())).second) {
        out.push_back({line_no, id.is_number_integer() ? id.get<int>() : -1, "duplicate_text", j["question"].get<std::string>()});
      }
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.line < b.line; });
  return out;
}

}  // namespace clevr
