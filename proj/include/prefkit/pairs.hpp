#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <unordered_map>
#include <vector>

#include "prefkit/errors.hpp"
#include "prefkit/forum.hpp"
#include "prefkit/io.hpp"
#include "prefkit/rng.hpp"

namespace prefkit {

enum class Bucket { B1_2, B3_5, B6_10, B11_PLUS };

inline Bucket bucket_of(int64_t margin) {
  if (margin < 1) throw DataError("bucket_of: margin must be >= 1");
  if (margin <= 2) return Bucket::B1_2;
  if (margin <= 5) return Bucket::B3_5;
  if (margin <= 10) return Bucket::B6_10;
  return Bucket::B11_PLUS;
}

inline std::string bucket_name(Bucket b) {
  switch (b) {
    case Bucket::B1_2: return "B1_2";
    case Bucket::B3_5: return "B3_5";
    case Bucket::B6_10: return "B6_10";
    case Bucket::B11_PLUS: return "B11_PLUS";
  }
  throw DataError("bucket_name: bad enum");
}

inline Bucket bucket_from_name(const std::string& s) {
  if (s == "B1_2") return Bucket::B1_2;
  if (s == "B3_5") return Bucket::B3_5;
  if (s == "B6_10") return Bucket::B6_10;
  if (s == "B11_PLUS") return Bucket::B11_PLUS;
  throw DataError("unknown bucket name: " + s);
}

struct PreferencePair {
  std::string pair_id;
  std::string prompt;
  std::string chosen;
  std::string rejected;
  int64_t margin = 1;
  Bucket bucket = Bucket::B1_2;
  std::string source;
};

inline json pair_to_json(const PreferencePair& p) {
  json obj;
  obj["pair_id"] = p.pair_id;
  obj["prompt"] = p.prompt;
  obj["chosen"] = p.chosen;
  obj["rejected"] = p.rejected;
  obj["margin"] = p.margin;
  obj["bucket"] = bucket_name(p.bucket);
  obj["source"] = p.source;
  return obj;
}

inline void serialize_pairs(const std::vector<PreferencePair>& pairs, std::ostream& out) {
  for (const auto& p : pairs) out << pair_to_json(p).dump() << "\n";
}

inline std::vector<PreferencePair> parse_pairs(std::istream& in) {
  std::vector<PreferencePair> pairs;
  for_each_jsonl(in, [&](size_t lineno, const json& obj) {
    auto where = [&] { return " at line " + std::to_string(lineno); };
    for (const char* key : {"pair_id", "prompt", "chosen", "rejected", "margin", "bucket", "source"})
      if (!obj.contains(key))
        throw DataError(std::string("pair missing field '") + key + "'" + where());
    PreferencePair p;
    p.pair_id = obj["pair_id"].get<std::string>();
    p.prompt = obj["prompt"].get<std::string>();
    p.chosen = obj["chosen"].get<std::string>();
    p.rejected = obj["rejected"].get<std::string>();
    p.margin = obj["margin"].get<int64_t>();
    p.bucket = bucket_from_name(obj["bucket"].get<std::string>());
    p.source = obj["source"].get<std::string>();
    if (p.margin < 1) throw DataError("pair margin < 1" + where());
    pairs.push_back(std::move(p));
  });
  return pairs;
}

inline std::vector<PreferencePair> load_pairs(const std::string& path) {
  auto in = open_input(path);
  return parse_pairs(in);
}

// Up to pairs_per_post unordered response pairs per post, chosen = strictly
// higher net score.  The RNG stream is keyed by (seed, post_id) so the output
// is independent of post processing order.
inline std::vector<PreferencePair> build_pairs(const std::vector<ForumPost>& posts,
                                               int64_t pairs_per_post, uint64_t seed) {
  if (pairs_per_post < 1) throw ConfigError("pairs_per_post must be >= 1");
  std::vector<PreferencePair> out;
  for (const auto& post : posts) {
    const auto& rs = post.responses;
    std::vector<std::pair<size_t, size_t>> cand;
    for (size_t i = 0; i < rs.size(); ++i)
      for (size_t j = i + 1; j < rs.size(); ++j)
        if (net_score(rs[i]) != net_score(rs[j]) && rs[i].body != rs[j].body)
          cand.emplace_back(i, j);
    if (cand.empty()) continue;
    if (static_cast<int64_t>(cand.size()) > pairs_per_post) {
      Rng rng = Rng::keyed(seed, post.post_id);
      rng.shuffle(cand);
      cand.resize(static_cast<size_t>(pairs_per_post));
      std::sort(cand.begin(), cand.end());
    }
    for (auto [i, j] : cand) {
      const ForumResponse& a = rs[i];
      const ForumResponse& b = rs[j];
      const ForumResponse& win = net_score(a) > net_score(b) ? a : b;
      const ForumResponse& lose = net_score(a) > net_score(b) ? b : a;
      PreferencePair p;
      p.pair_id = post.post_id + ":" + win.response_id + ":" + lose.response_id;
      p.prompt = prompt_of(post);
      p.chosen = win.body;
      p.rejected = lose.body;
      p.margin = net_score(win) - net_score(lose);
      p.bucket = bucket_of(p.margin);
      p.source = post.post_id;
      out.push_back(std::move(p));
    }
  }
  return out;
}

struct PairScore {
  double score_chosen = 0.0;
  double score_rejected = 0.0;
};

using ScoreMap = std::unordered_map<std::string, PairScore>;

inline ScoreMap parse_scores(std::istream& in) {
  ScoreMap scores;
  for_each_jsonl(in, [&](size_t lineno, const json& obj) {
    if (!obj.contains("pair_id") || !obj.contains("score_chosen") ||
        !obj.contains("score_rejected"))
      throw DataError("score record missing field at line " + std::to_string(lineno));
    scores[obj["pair_id"].get<std::string>()] = {obj["score_chosen"].get<double>(),
                                                 obj["score_rejected"].get<double>()};
  });
  return scores;
}

inline ScoreMap load_scores(const std::string& path) {
  auto in = open_input(path);
  return parse_scores(in);
}

struct FilterResult {
  std::vector<PreferencePair> kept;
  std::vector<PreferencePair> dropped;
};

// Drop only strict disagreements (chosen scored strictly below rejected);
// ties stay.
inline FilterResult filter_by_scorer(const std::vector<PreferencePair>& pairs,
                                     const ScoreMap& scores) {
  FilterResult res;
  for (const auto& p : pairs) {
    auto it = scores.find(p.pair_id);
    if (it == scores.end()) throw DataError("no score for pair " + p.pair_id);
    if (it->second.score_chosen >= it->second.score_rejected) res.kept.push_back(p);
    else res.dropped.push_back(p);
  }
  return res;
}

struct SplitResult {
  std::vector<PreferencePair> train;
  std::vector<PreferencePair> validation;
};

// Groups by prompt so no prompt straddles the split; group order comes from a
// seeded hash, filled greedily until the validation target is met.
inline SplitResult split_pairs(const std::vector<PreferencePair>& pairs,
                               double holdout_fraction, uint64_t seed) {
  if (!(holdout_fraction > 0.0 && holdout_fraction < 1.0))
    throw ConfigError("holdout_fraction must be in (0,1)");
  if (pairs.size() < 2) throw DataError("need at least 2 pairs to split");

  std::map<std::string, size_t> group_sizes;
  for (const auto& p : pairs) group_sizes[p.prompt]++;
  struct G { uint64_t h; const std::string* prompt; size_t size; };
  std::vector<G> groups;
  groups.reserve(group_sizes.size());
  for (const auto& [prompt, size] : group_sizes)
    groups.push_back({hash_combine(mix64(seed), fnv1a64(prompt)), &prompt, size});
  std::sort(groups.begin(), groups.end(), [](const G& a, const G& b) {
    if (a.h != b.h) return a.h < b.h;
    return *a.prompt < *b.prompt;
  });

  const size_t target =
      static_cast<size_t>(std::llround(holdout_fraction * static_cast<double>(pairs.size())));
  std::unordered_map<std::string, bool> in_validation;
  size_t val_count = 0;
  for (const auto& g : groups) {
    bool take = val_count < target;
    in_validation[*g.prompt] = take;
    if (take) val_count += g.size;
  }

  SplitResult res;
  for (const auto& p : pairs) {
    if (in_validation[p.prompt]) res.validation.push_back(p);
    else res.train.push_back(p);
  }
  return res;
}

}  // namespace prefkit
