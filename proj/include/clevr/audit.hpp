#pragma once

#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "clevr/executor.hpp"
#include "clevr/family.hpp"
#include "clevr/generator.hpp"

namespace clevr {

class EmptySplit : public std::invalid_argument {
 public:
  explicit EmptySplit(const std::string& split) : std::invalid_argument("split '" + split + "' has no questions") {}
};

/// The fields of a question the auditor looks at.
struct AuditRecord {
  int question_id = 0;
  int scene_id = 0;
  Split split = Split::train;
  std::string family_id;
  FunctionKind question_type = FunctionKind::count;
  std::string text;
  std::string answer;
};

inline AuditRecord audit_record(const QuestionInstance& q) {
  return {q.question_id, q.scene_id, q.split, q.family_id, q.program.question_type(), q.text, answer_string(q.answer)};
}

inline std::vector<AuditRecord> audit_records(const std::vector<QuestionInstance>& instances) {
  std::vector<AuditRecord> out;
  out.reserve(instances.size());
  for (const auto& q : instances) out.push_back(audit_record(q));
  return out;
}

struct QTypeModel {
  std::map<FunctionKind, std::string> prediction;
  std::map<FunctionKind, long> train_count;
  std::map<FunctionKind, long> modal_count;

  std::optional<std::string> predict(FunctionKind type) const {
    auto it = prediction.find(type);
    if (it == prediction.end()) return std::nullopt;
    return it->second;
  }
};

/// Most frequent training answer per question type; ties go to the lexicographically
/// smallest answer string.
inline QTypeModel fit_qtype(const std::vector<AuditRecord>& records, Split train = Split::train) {
  std::map<FunctionKind, std::map<std::string, long>> counts;
  for (const auto& r : records) {
    if (r.split == train) ++counts[r.question_type][r.answer];
  }
  if (counts.empty()) throw EmptySplit(std::string(to_string(train)));
  QTypeModel model;
  for (const auto& [type, hist] : counts) {
    long best = -1, total = 0;
    for (const auto& [answer, n] : hist) {  // map order is lexicographic, so strict > keeps the first tie
      total += n;
      if (n > best) {
        best = n;
        model.prediction[type] = answer;
      }
    }
    model.train_count[type] = total;
    model.modal_count[type] = best;
  }
  return model;
}

inline double entropy_bits(const std::map<std::string, long>& hist) {
  long total = 0;
  for (const auto& [k, n] : hist) total += n;
  double h = 0;
  for (const auto& [k, n] : hist) {
    if (n == 0) continue;
    const double p = static_cast<double>(n) / static_cast<double>(total);
    h -= p * std::log2(p);
  }
  return h;
}

struct TypeAudit {
  FunctionKind type = FunctionKind::count;
  long eval_count = 0;
  long correct = 0;
  double accuracy = 0;  // on the eval splits
  double chance = 0;
  double entropy = 0;   // of the eval answer distribution, in bits
  std::string predicted;
  std::map<std::string, long> histogram;  // eval answers
  bool alarm = false;
};

struct FamilyAudit {
  std::string family_id;
  long count = 0;
  double max_share = 0;
  double balance_deviation = 0;  // max_share - 1/|answer_space|
  std::map<std::string, long> histogram;
};

struct UniquenessStats {
  long total = 0;
  long unique = 0;
  double unique_fraction = 0;
  std::map<Split, long> split_count;
  std::map<Split, long> overlap_with_train;  // eval questions whose text also occurs in train
  std::map<Split, double> overlap_fraction;
};

struct AuditOptions {
  double alarm_margin = 0.05;
  std::vector<Split> eval_splits{Split::val, Split::test};
  long min_alarm_count = 50;  // smaller eval samples are reported but cannot alarm
};

struct AuditReport {
  std::vector<TypeAudit> types;
  std::vector<FamilyAudit> families;
  UniquenessStats uniqueness;
  std::map<int, long> length_histogram;  // whitespace tokens -> questions
  std::map<FunctionKind, long> type_distribution;
  long questions = 0;
  double alarm_margin = 0.05;
  long min_alarm_count = 50;

  const TypeAudit* type(FunctionKind k) const {
    for (const auto& t : types) {
      if (t.type == k) return &t;
    }
    return nullptr;
  }
  bool any_alarm() const {
    for (const auto& t : types) {
      if (t.alarm) return true;
    }
    return false;
  }
};

inline UniquenessStats uniqueness_stats(const std::vector<AuditRecord>& records) {
  UniquenessStats u;
  std::set<std::string> all, train;
  for (const auto& r : records) {
    const std::string t = normalize_text(r.text);
    all.insert(t);
    if (r.split == Split::train) train.insert(t);
    ++u.split_count[r.split];
  }
  for (const auto& r : records) {
    if (r.split != Split::train && train.count(normalize_text(r.text))) ++u.overlap_with_train[r.split];
  }
  u.total = static_cast<long>(records.size());
  u.unique = static_cast<long>(all.size());
  u.unique_fraction = u.total ? static_cast<double>(u.unique) / static_cast<double>(u.total) : 0;
  for (Split s : {Split::val, Split::test}) {
    const long n = u.split_count[s];
    u.overlap_fraction[s] = n ? static_cast<double>(u.overlap_with_train[s]) / static_cast<double>(n) : 0;
  }
  return u;
}

inline std::size_t whitespace_tokens(const std::string& text) {
  std::istringstream in(text);
  std::size_t n = 0;
  for (std::string w; in >> w;) ++n;
  return n;
}

/// Full report. Q-type-mode is fitted on train and scored on `options.eval_splits`.
inline AuditReport audit(const std::vector<AuditRecord>& records, const AuditOptions& options = {}) {
  AuditReport report;
  report.questions = static_cast<long>(records.size());
  report.alarm_margin = options.alarm_margin;
  report.min_alarm_count = options.min_alarm_count;
  const QTypeModel model = fit_qtype(records);
  auto is_eval = [&](Split s) { return std::find(options.eval_splits.begin(), options.eval_splits.end(), s) != options.eval_splits.end(); };

  std::map<FunctionKind, TypeAudit> types;
  std::map<std::string, FamilyAudit> families;
  std::map<std::string, FunctionKind> family_type;
  for (const auto& r : records) {
    ++report.type_distribution[r.question_type];
    ++report.length_histogram[static_cast<int>(whitespace_tokens(r.text))];
    FamilyAudit& fa = families[r.family_id];
    fa.family_id = r.family_id;
    ++fa.count;
    ++fa.histogram[r.answer];
    family_type[r.family_id] = r.question_type;
    if (!is_eval(r.split)) continue;
    TypeAudit& t = types[r.question_type];
    t.type = r.question_type;
    ++t.eval_count;
    ++t.histogram[r.answer];
    const auto predicted = model.predict(r.question_type);
    if (predicted && *predicted == r.answer) ++t.correct;
  }
  for (auto& [type, t] : types) {
    t.accuracy = t.eval_count ? static_cast<double>(t.correct) / static_cast<double>(t.eval_count) : 0;
    t.chance = 1.0 / static_cast<double>(answer_space(type).size());
    t.entropy = entropy_bits(t.histogram);
    t.predicted = model.predict(type).value_or("");
    // Count questions are only softly balanced; their residual bias is expected.
    t.alarm = type != FunctionKind::count && t.eval_count >= options.min_alarm_count &&
              t.accuracy > t.chance + options.alarm_margin;
    report.types.push_back(t);
  }
  for (auto& [id, fa] : families) {
    long top = 0;
    for (const auto& [a, n] : fa.histogram) top = std::max(top, n);
    fa.max_share = static_cast<double>(top) / static_cast<double>(fa.count);
    fa.balance_deviation = fa.max_share - 1.0 / static_cast<double>(answer_space(family_type[id]).size());
    report.families.push_back(fa);
  }
  report.uniqueness = uniqueness_stats(records);
  return report;
}

inline Json histogram_json(const std::map<std::string, long>& h) {
  Json j = Json::object();
  for (const auto& [k, v] : h) j[k] = v;
  return j;
}

inline Json audit_to_json(const AuditReport& r) {
  Json types = Json::array();
  for (const auto& t : r.types) {
    types.push_back({{"question_type", to_string(t.type)},
                     {"eval_count", t.eval_count},
                     {"qtype_mode_prediction", t.predicted},
                     {"qtype_mode_accuracy", t.accuracy},
                     {"chance", t.chance},
                     {"answer_entropy_bits", t.entropy},
                     {"bias_alarm", t.alarm},
                     {"answer_histogram", histogram_json(t.histogram)}});
  }
  Json families = Json::array();
  for (const auto& f : r.families) {
    families.push_back({{"family_id", f.family_id},
                        {"count", f.count},
                        {"max_answer_share", f.max_share},
                        {"balance_deviation", f.balance_deviation},
                        {"answer_histogram", histogram_json(f.histogram)}});
  }
  Json lengths = Json::object();
  for (const auto& [len, n] : r.length_histogram) lengths[std::to_string(len)] = n;
  Json distribution = Json::object();
  for (const auto& [type, n] : r.type_distribution) distribution[std::string(to_string(type))] = n;
  Json overlap = Json::object();
  for (Split s : {Split::val, Split::test}) {
    overlap[std::string(to_string(s))] = {{"questions", r.uniqueness.split_count.count(s) ? r.uniqueness.split_count.at(s) : 0},
                                          {"overlap_with_train", r.uniqueness.overlap_with_train.count(s) ? r.uniqueness.overlap_with_train.at(s) : 0},
                                          {"overlap_fraction", r.uniqueness.overlap_fraction.at(s)}};
  }
  return {{"questions", r.questions},
          {"length_metric", "whitespace tokens"},
          {"alarm_margin", r.alarm_margin},
          {"min_alarm_count", r.min_alarm_count},
          {"bias_alarm", r.any_alarm()},
          {"question_types", types},
          {"families", families},
          {"uniqueness", {{"unique_questions", r.uniqueness.unique}, {"unique_fraction", r.uniqueness.unique_fraction}}},
          {"overlap", overlap},
          {"question_type_distribution", distribution},
          {"question_length_histogram", lengths}};
}

inline std::string audit_to_text(const AuditReport& r) {
  std::ostringstream out;
  char line[160];
  out << "questions: " << r.questions << "  (lengths in whitespace tokens)\n";
  std::snprintf(line, sizeof line, "%-16s %7s %9s %7s %8s  %s\n", "type", "eval", "accuracy", "chance", "entropy", "alarm");
  out << line;
  for (const auto& t : r.types) {
    std::snprintf(line, sizeof line, "%-16s %7ld %9.4f %7.4f %8.3f  %s\n", std::string(to_string(t.type)).c_str(),
                  t.eval_count, t.accuracy, t.chance, t.entropy, t.alarm ? "BIAS" : "-");
    out << line;
  }
  std::snprintf(line, sizeof line, "unique questions: %ld / %ld (%.4f)\n", r.uniqueness.unique, r.uniqueness.total,
                r.uniqueness.unique_fraction);
  out << line;
  for (Split s : {Split::val, Split::test}) {
    std::snprintf(line, sizeof line, "overlap with train (%s): %.4f\n", std::string(to_string(s)).c_str(),
                  r.uniqueness.overlap_fraction.at(s));
    out << line;
  }
  return out.str();
}

/// Long-format CSV: histogram,key,value rows for external plotting.
inline std::string audit_to_csv(const AuditReport& r) {
  std::ostringstream out;
  out << "histogram,key,value\n";
  for (const auto& [type, n] : r.type_distribution) out << "question_type," << to_string(type) << "," << n << "\n";
  for (const auto& [len, n] : r.length_histogram) out << "question_length," << len << "," << n << "\n";
  for (const auto& t : r.types) {
    for (const auto& [a, n] : t.histogram) out << "answers_" << to_string(t.type) << "," << a << "," << n << "\n";
  }
  return out.str();
}

}  // namespace clevr
