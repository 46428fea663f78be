#pragma once

#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <unordered_map>
#include <vector>

#include "prefkit/errors.hpp"
#include "prefkit/io.hpp"
#include "prefkit/text.hpp"

namespace prefkit {

struct Candidate {
  std::string candidate_id;
  std::string body;
  double score = 0.0;
};

struct CandidateSet {
  std::string prompt_id;
  std::string prompt;  // optional in the file; empty means prompt-free scoring
  std::vector<Candidate> candidates;
};

inline std::vector<CandidateSet> parse_candidates(std::istream& in) {
  std::vector<CandidateSet> sets;
  for_each_jsonl(in, [&](size_t lineno, const json& obj) {
    auto where = [&] { return " at line " + std::to_string(lineno); };
    if (!obj.contains("prompt_id") || !obj.contains("candidates"))
      throw DataError("candidate set missing field" + where());
    CandidateSet set;
    set.prompt_id = obj["prompt_id"].get<std::string>();
    if (obj.contains("prompt")) set.prompt = obj["prompt"].get<std::string>();
    for (const auto& cj : obj["candidates"]) {
      if (!cj.contains("candidate_id") || !cj.contains("body"))
        throw DataError("candidate missing field" + where());
      Candidate c;
      c.candidate_id = cj["candidate_id"].get<std::string>();
      c.body = cj["body"].get<std::string>();
      set.candidates.push_back(std::move(c));
    }
    if (set.candidates.empty()) throw DataError("empty candidate set" + where());
    sets.push_back(std::move(set));
  });
  return sets;
}

// Argmax by score; ties go to the lexicographically lowest candidate_id.
inline const Candidate& best_of_n(const CandidateSet& set) {
  if (set.candidates.empty()) throw DataError("best_of_n: empty candidate set");
  const Candidate* best = &set.candidates[0];
  for (const auto& c : set.candidates) {
    if (c.score > best->score ||
        (c.score == best->score && c.candidate_id < best->candidate_id))
      best = &c;
  }
  return *best;
}

// (r - mean) / population sigma; a zero-spread group gets all-zero advantages.
inline std::vector<double> group_advantage(const std::vector<double>& scores) {
  if (scores.size() < 2) throw DataError("group_advantage: need at least 2 scores");
  const double n = static_cast<double>(scores.size());
  double mean = 0.0;
  for (double s : scores) mean += s;
  mean /= n;
  double var = 0.0;
  for (double s : scores) var += (s - mean) * (s - mean);
  var /= n;
  if (var == 0.0) return std::vector<double>(scores.size(), 0.0);
  const double sd = std::sqrt(var);
  std::vector<double> out;
  out.reserve(scores.size());
  for (double s : scores) out.push_back((s - mean) / sd);
  return out;
}

inline double mean_selected_length(const std::vector<CandidateSet>& sets) {
  if (sets.empty()) throw DataError("mean_selected_length: no candidate sets");
  double total = 0.0;
  for (const auto& set : sets)
    total += static_cast<double>(token_count(best_of_n(set).body));
  return total / static_cast<double>(sets.size());
}

struct CandidateScore {
  std::string prompt_id;
  std::string candidate_id;
  double score = 0.0;
};

inline void serialize_candidate_scores(const std::vector<CandidateScore>& scores,
                                       std::ostream& out) {
  for (const auto& s : scores) {
    json obj;
    obj["prompt_id"] = s.prompt_id;
    obj["candidate_id"] = s.candidate_id;
    obj["score"] = s.score;
    out << obj.dump() << "\n";
  }
}

inline std::vector<CandidateScore> parse_candidate_scores(std::istream& in) {
  std::vector<CandidateScore> out;
  for_each_jsonl(in, [&](size_t lineno, const json& obj) {
    if (!obj.contains("prompt_id") || !obj.contains("candidate_id") || !obj.contains("score"))
      throw DataError("candidate score missing field at line " + std::to_string(lineno));
    out.push_back({obj["prompt_id"].get<std::string>(), obj["candidate_id"].get<std::string>(),
                   obj["score"].get<double>()});
  });
  return out;
}

// Attach external scores to parsed candidate sets; every candidate must be
// covered.
inline void apply_candidate_scores(std::vector<CandidateSet>& sets,
                                   const std::vector<CandidateScore>& scores) {
  std::unordered_map<std::string, double> lookup;
  for (const auto& s : scores) lookup[s.prompt_id + "\x1f" + s.candidate_id] = s.score;
  for (auto& set : sets)
    for (auto& c : set.candidates) {
      auto it = lookup.find(set.prompt_id + "\x1f" + c.candidate_id);
      if (it == lookup.end())
        throw DataError("no score for candidate " + set.prompt_id + "/" + c.candidate_id);
      c.score = it->second;
    }
}

}  // namespace prefkit
