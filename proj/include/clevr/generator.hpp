#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "clevr/config.hpp"
#include "clevr/executor.hpp"
#include "clevr/family.hpp"
#include "clevr/parallel.hpp"
#include "clevr/relaxed.hpp"
#include "clevr/rng.hpp"
#include "clevr/scene.hpp"

namespace clevr {

enum class RejectCause : std::uint8_t { ill_posed, degenerate, balance, duplicate_text };
inline constexpr std::array kRejectCauses = {RejectCause::ill_posed, RejectCause::degenerate, RejectCause::balance,
                                             RejectCause::duplicate_text};

constexpr std::string_view to_string(RejectCause c) {
  switch (c) {
    case RejectCause::ill_posed: return "ill_posed";
    case RejectCause::degenerate: return "degenerate";
    case RejectCause::balance: return "balance";
    case RejectCause::duplicate_text: return "duplicate_text";
  }
  return "?";
}

struct FamilyStats {
  std::map<std::string, long> answer_histogram;
  long accepted = 0;
  long attempts = 0;
  std::array<long, 4> rejections{};

  long rejected(RejectCause c) const { return rejections[static_cast<int>(c)]; }
  long total_rejections() const { return rejections[0] + rejections[1] + rejections[2] + rejections[3]; }
};

struct DfsStats {
  long expanded_nodes = 0;   // slot assignments tried
  long full_executions = 0;  // complete programs executed at leaves
  bool budget_exhausted = false;
};

struct GenerationConfig {
  int questions_per_image = 10;
  double balance_tolerance = 0.05;
  double soft_floor = 0.05;
  long max_dfs_nodes = 10000;
  int family_passes = 2;  // rounds over the catalog per scene before the scene is starved
  bool balancing = true;  // false gives the unbalanced control run
  std::uint64_t seed = 0;

  void validate() const {
    if (questions_per_image < 1) throw ConfigError("questions_per_image must be >= 1");
    if (!(balance_tolerance > 0 && balance_tolerance <= 1)) throw ConfigError("balance_tolerance must be in (0, 1]");
    if (!(soft_floor > 0 && soft_floor <= 1)) throw ConfigError("soft_floor must be in (0, 1]");
    if (max_dfs_nodes < 1) throw ConfigError("max_dfs_nodes must be >= 1");
    if (family_passes < 1) throw ConfigError("family_passes must be >= 1");
  }

  static GenerationConfig from_map(const ConfigMap& map) {
    GenerationConfig c;
    ConfigReader r(map);
    r.read("questions_per_image", c.questions_per_image);
    r.read("balance_tolerance", c.balance_tolerance);
    r.read("soft_floor", c.soft_floor);
    r.read("max_dfs_nodes", c.max_dfs_nodes);
    r.read("family_passes", c.family_passes);
    r.read("balancing", c.balancing);
    r.read("seed", c.seed);
    r.finish();
    c.validate();
    return c;
  }

  ConfigMap to_map() const {
    auto num = [](double v) { return Json(v).dump(); };
    return {{"questions_per_image", std::to_string(questions_per_image)},
            {"balance_tolerance", num(balance_tolerance)},
            {"soft_floor", num(soft_floor)},
            {"max_dfs_nodes", std::to_string(max_dfs_nodes)},
            {"family_passes", std::to_string(family_passes)},
            {"balancing", balancing ? "true" : "false"},
            {"seed", std::to_string(seed)}};
  }
};

// ---------------------------------------------------------------------------------------
// Degeneracy

namespace detail {

constexpr bool is_qualifier(FunctionKind k) {
  return k == FunctionKind::relate || is_same(k) || k == FunctionKind::logical_and || k == FunctionKind::logical_or;
}

}  // namespace detail

/// Index of the first unique node whose qualifier (relate/same_X/AND/OR below its filter
/// chain) is unnecessary: the filters alone already pick out a single object. nullopt if
/// every qualified reference needs its qualifier. The program must execute strictly.
inline std::optional<int> degeneracy_check(const Program& program, const SceneGraph& scene) {
  for (int u = 0; u < static_cast<int>(program.nodes.size()); ++u) {
    if (program.nodes[u].kind != FunctionKind::unique) continue;
    ObjectSet candidates = scene.all();
    int n = program.nodes[u].inputs[0];
    while (is_filter(program.nodes[n].kind)) {
      const ProgramNode& f = program.nodes[n];
      candidates = detail::filter_by(scene, candidates, *attribute_of(f.kind), detail::literal_code(f.value_inputs[0]));
      n = f.inputs[0];
    }
    if (detail::is_qualifier(program.nodes[n].kind) && candidates.size() == 1) return u;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------------------
// Balancing

/// Rejection-sampling decision for one candidate answer of `family`.
inline bool balance_accept(const FamilyStats& stats, const QuestionFamily& family, const Value& answer, Rng& rng,
                           const GenerationConfig& config) {
  if (!config.balancing || stats.accepted == 0) return true;
  const std::string a = answer_string(answer);
  auto bin = [&](const std::string& key) {
    auto it = stats.answer_histogram.find(key);
    return it == stats.answer_histogram.end() ? 0L : it->second;
  };
  if (family.answer_balancing == BalanceMode::uniform_hard) {
    const auto space = answer_space(family.question_type());
    long min_bin = bin(a);
    for (const Value& v : space) min_bin = std::min(min_bin, bin(answer_string(v)));
    // The least-filled answer is always welcome, so the cap can never stall generation.
    if (bin(a) == min_bin) return true;
    const double share = static_cast<double>(bin(a) + 1) / static_cast<double>(stats.accepted + 1);
    return share <= (1.0 + config.balance_tolerance) / static_cast<double>(space.size());
  }
  long max_bin = 0;
  for (const auto& [key, count] : stats.answer_histogram) max_bin = std::max(max_bin, count);
  if (max_bin == 0) return true;
  const double deficit = static_cast<double>(max_bin - bin(a)) / static_cast<double>(max_bin);
  return rng.chance(std::max(config.soft_floor, deficit));
}

// ---------------------------------------------------------------------------------------
// Depth-first instantiation

/// Leaf verdict: nullopt accepts, otherwise the rejection cause.
using LeafAcceptor = std::function<std::optional<RejectCause>(const Binding&, const Program&, const Value&)>;

struct DfsResult {
  std::optional<Binding> binding;
  Program program;
  Value answer;
  DfsStats stats;
  std::array<long, 4> rejections{};  // leaf rejections during this search, by cause

  bool found() const { return binding.has_value(); }
};

namespace detail {

class BindingSearch {
 public:
  BindingSearch(const QuestionFamily& family, const SceneGraph& scene, Rng& rng, long budget, const LeafAcceptor& accept)
      : f_(family), scene_(scene), rng_(rng), budget_(budget), accept_(accept), values_(family.program.size()) {
    const int n = static_cast<int>(f_.program.size());
    feeds_unique_.assign(n, false);
    for (int i = n - 1; i >= 0; --i) {
      for (int in : f_.program[i].inputs) {
        const FunctionKind k = f_.program[i].kind;
        if (k == FunctionKind::unique || (is_filter(k) && feeds_unique_[i])) feeds_unique_[in] = true;
      }
    }
  }

  DfsResult run() {
    step(0);
    result_.stats = stats_;
    return result_;
  }

 private:
  bool step(int i) {
    if (i == static_cast<int>(f_.program.size())) return leaf();
    const TemplateNode& node = f_.program[i];
    if (node.value_inputs.empty() || !node.value_inputs[0].is_slot()) {
      return evaluate(i, node.value_inputs.empty() ? std::nullopt : node.value_inputs[0].literal, false) && step(i + 1);
    }
    const std::string& slot = node.value_inputs[0].slot;
    if (auto bound = binding_.find(slot); bound != binding_.end()) {
      return evaluate(i, bound->second, !bound->second) && step(i + 1);
    }
    const ParameterSlot& decl = *f_.find_slot(slot);
    std::vector<std::optional<Literal>> options;
    for (const Literal& l : slot_domain(decl.type)) options.emplace_back(l);
    if (decl.nullable) options.emplace_back(std::nullopt);
    rng_.shuffle(std::span<std::optional<Literal>>(options));
    for (const auto& option : options) {
      if (stats_.expanded_nodes >= budget_) {
        stats_.budget_exhausted = true;
        break;
      }
      ++stats_.expanded_nodes;
      binding_[slot] = option;
      if (!satisfies_constraints(f_, binding_)) continue;
      if (evaluate(i, option, !option) && step(i + 1)) return true;
      if (stats_.budget_exhausted) break;
    }
    binding_.erase(slot);
    return false;
  }

  // Computes node i under the partial binding; false prunes this branch.
  bool evaluate(int i, const std::optional<Literal>& literal, bool nil) {
    const TemplateNode& node = f_.program[i];
    if (nil) {
      values_[i] = values_[node.inputs[0]];
      return true;
    }
    ProgramNode concrete{node.kind, node.inputs, {}};
    if (literal) concrete.value_inputs.push_back(*literal);
    std::array<Value, 2> args;
    for (std::size_t s = 0; s < node.inputs.size(); ++s) args[s] = values_[node.inputs[s]];
    ExecOutcome out = apply_function(concrete, std::span<const Value>(args.data(), node.inputs.size()), scene_, i);
    if (!out) return false;  // unique saw zero or several objects
    values_[i] = out.answer();
    if (feeds_unique_[i] && std::get<ObjectSet>(values_[i]).empty()) return false;
    if (node.kind == FunctionKind::unique && qualifier_unnecessary(i)) return false;
    return true;
  }

  // Same rule as degeneracy_check, applied while the template is still partially bound.
  bool qualifier_unnecessary(int u) const {
    ObjectSet candidates = scene_.all();
    int n = f_.program[u].inputs[0];
    while (is_filter(f_.program[n].kind)) {
      const TemplateValue& v = f_.program[n].value_inputs[0];
      const std::optional<Literal> lit = v.is_slot() ? binding_.at(v.slot) : v.literal;
      if (lit) candidates = filter_by(scene_, candidates, *attribute_of(f_.program[n].kind), literal_code(*lit));
      n = f_.program[n].inputs[0];
    }
    return is_qualifier(f_.program[n].kind) && candidates.size() == 1;
  }

  bool leaf() {
    ++stats_.full_executions;
    Program program = instantiate_program(f_, binding_);
    const ExecOutcome out = execute(program, scene_);
    std::optional<RejectCause> verdict;
    if (!out) verdict = RejectCause::ill_posed;
    else if (degeneracy_check(program, scene_)) verdict = RejectCause::degenerate;
    else verdict = accept_(binding_, program, out.answer());
    if (verdict) {
      ++result_.rejections[static_cast<int>(*verdict)];
      return false;
    }
    result_.binding = binding_;
    result_.program = std::move(program);
    result_.answer = out.answer();
    return true;
  }

  const QuestionFamily& f_;
  const SceneGraph& scene_;
  Rng& rng_;
  long budget_;
  const LeafAcceptor& accept_;
  std::vector<Value> values_;
  std::vector<bool> feeds_unique_;
  Binding binding_;
  DfsStats stats_;
  DfsResult result_;
};

}  // namespace detail

/// Depth-first search over slot values in template order, pruning on scene ground truth:
/// a filter chain feeding unique() may never become empty, and every unique() must see
/// exactly one object that its filters alone would not already single out. Leaves are
/// executed strictly, checked for degeneracy and handed to `accept`.
inline DfsResult dfs_instantiate(const QuestionFamily& family, const SceneGraph& scene, Rng& rng,
                                 long max_nodes = 10000, const LeafAcceptor& accept = {}) {
  const LeafAcceptor accept_all = [](const Binding&, const Program&, const Value&) {
    return std::optional<RejectCause>{};
  };
  return detail::BindingSearch(family, scene, rng, max_nodes, accept ? accept : accept_all).run();
}

// ---------------------------------------------------------------------------------------
// Dataset generation

enum class Split : std::uint8_t { train, val, test };

constexpr std::string_view to_string(Split s) {
  return s == Split::train ? "train" : s == Split::val ? "val" : "test";
}

inline std::optional<Split> parse_split(std::string_view s) {
  if (s == "train") return Split::train;
  if (s == "val") return Split::val;
  if (s == "test") return Split::test;
  return std::nullopt;
}

/// 70/15/15 by position in the scene list.
inline Split split_for(std::size_t position, std::size_t scene_count) {
  const auto train_end = static_cast<std::size_t>(std::llround(0.70 * static_cast<double>(scene_count)));
  const auto val_end = static_cast<std::size_t>(std::llround(0.85 * static_cast<double>(scene_count)));
  return position < train_end ? Split::train : position < val_end ? Split::val : Split::test;
}

struct QuestionInstance {
  int question_id = 0;
  int scene_id = 0;
  std::size_t scene_index = 0;  // position in the scene list the dataset was generated from
  Split split = Split::train;
  std::string family_id;
  int template_index = 0;
  std::string text;
  Binding binding;
  Program program;
  Value answer;
  QuestionProfile profile;
};

/// Lowercase, whitespace-collapsed text used for duplicate and uniqueness checks.
inline std::string normalize_text(const std::string& text) {
  std::string out;
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!out.empty() && out.back() != ' ') out.push_back(' ');
    } else {
      out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
  }
  if (!out.empty() && out.back() == ' ') out.pop_back();
  return out;
}

struct GeneratedDataset {
  std::vector<QuestionInstance> instances;
  std::vector<FamilyStats> family_stats;  // aligned with the family list
  std::vector<std::string> family_ids;
  DfsStats dfs;
  std::vector<int> starved_scenes;
  std::vector<std::pair<int, Split>> scene_splits;  // every input scene, in input order
};

namespace detail {

inline constexpr std::uint64_t kGenerationStream = 0x47454e;  // "GEN"

}  // namespace detail

/// Generates questions scene by scene. Balancing state is carried across scenes in input
/// order, so acceptance decisions (and the output) do not depend on `workers`; only the
/// per-question profiles are computed in parallel.
inline GeneratedDataset generate_dataset(const std::vector<SceneGraph>& scenes, const std::vector<QuestionFamily>& families,
                                         const SynonymTable& synonyms, const GenerationConfig& config,
                                         unsigned workers = 1) {
  config.validate();
  GeneratedDataset out;
  out.family_stats.assign(families.size(), {});
  for (const auto& f : families) out.family_ids.push_back(f.family_id);
  for (std::size_t s = 0; s < scenes.size(); ++s) out.scene_splits.emplace_back(scenes[s].scene_id(), split_for(s, scenes.size()));
  if (families.empty()) return out;

  for (std::size_t s = 0; s < scenes.size(); ++s) {
    const SceneGraph& scene = scenes[s];
    Rng rng(derive_seed(config.seed, detail::kGenerationStream, static_cast<std::uint64_t>(scene.scene_id())));
    const std::vector<FamilyStats> snapshot = out.family_stats;
    const DfsStats dfs_snapshot = out.dfs;
    std::vector<QuestionInstance> accepted;
    std::set<std::string> texts;
    const std::size_t start = rng.below(families.size());

    for (int pass = 0; pass < config.family_passes; ++pass) {
      for (std::size_t k = 0; k < families.size(); ++k) {
        if (static_cast<int>(accepted.size()) >= config.questions_per_image) break;
        const std::size_t fi = (start + k) % families.size();
        const QuestionFamily& family = families[fi];
        FamilyStats& stats = out.family_stats[fi];
        RealizedText realized;
        const LeafAcceptor accept = [&](const Binding& b, const Program&, const Value& answer) -> std::optional<RejectCause> {
          if (!balance_accept(stats, family, answer, rng, config)) return RejectCause::balance;
          realized = realize_text(family, b, synonyms, rng);
          if (texts.count(normalize_text(realized.text))) return RejectCause::duplicate_text;
          return std::nullopt;
        };
        const DfsResult r = dfs_instantiate(family, scene, rng, config.max_dfs_nodes, accept);
        out.dfs.expanded_nodes += r.stats.expanded_nodes;
        out.dfs.full_executions += r.stats.full_executions;
        out.dfs.budget_exhausted = out.dfs.budget_exhausted || r.stats.budget_exhausted;
        for (int c = 0; c < 4; ++c) stats.rejections[c] += r.rejections[c];
        stats.attempts += r.rejections[0] + r.rejections[1] + r.rejections[2] + r.rejections[3];
        if (!r.found()) continue;
        ++stats.attempts;
        ++stats.accepted;
        ++stats.answer_histogram[answer_string(r.answer)];
        texts.insert(normalize_text(realized.text));
        QuestionInstance q;
        q.scene_id = scene.scene_id();
        q.scene_index = s;
        q.split = out.scene_splits[s].second;
        q.family_id = family.family_id;
        q.template_index = static_cast<int>(realized.template_index);
        q.text = realized.text;
        q.binding = *r.binding;
        q.program = r.program;
        q.answer = r.answer;
        accepted.push_back(std::move(q));
      }
    }
    if (static_cast<int>(accepted.size()) < config.questions_per_image) {
      // A starved scene contributes nothing, including its effect on the balancing state.
      out.family_stats = snapshot;
      out.dfs = dfs_snapshot;
      out.starved_scenes.push_back(scene.scene_id());
      continue;
    }
    for (auto& q : accepted) out.instances.push_back(std::move(q));
  }

  for (std::size_t i = 0; i < out.instances.size(); ++i) out.instances[i].question_id = static_cast<int>(i);
  parallel_for(out.instances.size(), workers, [&](std::size_t i) {
    QuestionInstance& q = out.instances[i];
    q.profile = profile(q.program, scenes[q.scene_index]);
  });
  return out;
}

/// Largest answer share of a family's accepted questions.
inline double max_answer_share(const FamilyStats& stats) {
  if (stats.accepted == 0) return 0;
  long top = 0;
  for (const auto& [key, count] : stats.answer_histogram) top = std::max(top, count);
  return static_cast<double>(top) / static_cast<double>(stats.accepted);
}

inline Json family_stats_to_json(const std::string& family_id, const FamilyStats& s) {
  Json rejections = Json::object();
  for (RejectCause c : kRejectCauses) rejections[std::string(to_string(c))] = s.rejected(c);
  Json hist = Json::object();
  for (const auto& [k, v] : s.answer_histogram) hist[k] = v;
  return {{"family_id", family_id}, {"accepted", s.accepted},         {"attempts", s.attempts},
          {"rejections", rejections}, {"answer_histogram", hist}, {"max_answer_share", max_answer_share(s)}};
}

}  // namespace clevr
