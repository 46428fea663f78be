#pragma once

#include <algorithm>
#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <unordered_map>
#include <vector>

#include "prefkit/errors.hpp"
#include "prefkit/io.hpp"
#include "prefkit/text.hpp"

namespace prefkit {

struct ForumResponse {
  std::string response_id;
  std::string body;
  int64_t upvotes = 0;
  int64_t downvotes = 0;
  bool accepted = false;
};

// Acceptance counts as one extra upvote; the result may be negative.
inline int64_t net_score(const ForumResponse& r) {
  return r.upvotes - r.downvotes + (r.accepted ? 1 : 0);
}

struct ForumPost {
  std::string post_id;
  std::string title;
  std::string body;
  std::vector<ForumResponse> responses;
};

inline std::string prompt_of(const ForumPost& p) {
  return "Title: " + p.title + "\n\n" + p.body;
}

struct ParseResult {
  std::vector<ForumPost> posts;
  size_t records = 0;  // well-formed-or-not input records seen
  size_t skipped = 0;  // malformed records dropped (always tallied)
};

namespace detail {

// Duplicate bodies within a post carry no pairwise information; keep the
// higher-net-score copy.
inline void dedup_responses(ForumPost& post) {
  std::vector<ForumResponse> out;
  std::unordered_map<std::string, size_t> by_body;
  for (auto& r : post.responses) {
    auto it = by_body.find(r.body);
    if (it == by_body.end()) {
      by_body.emplace(r.body, out.size());
      out.push_back(std::move(r));
    } else if (net_score(r) > net_score(out[it->second])) {
      out[it->second] = std::move(r);
    }
  }
  post.responses = std::move(out);
}

inline bool parse_post_json(const json& obj, ForumPost& post) {
  if (!obj.is_object()) return false;
  if (!obj.contains("post_id") || !obj.contains("title") || !obj.contains("body") ||
      !obj.contains("responses"))
    return false;
  if (!obj["post_id"].is_string() || !obj["title"].is_string() || !obj["body"].is_string() ||
      !obj["responses"].is_array())
    return false;
  post.post_id = obj["post_id"].get<std::string>();
  post.title = obj["title"].get<std::string>();
  post.body = obj["body"].get<std::string>();
  post.responses.clear();
  for (const auto& rj : obj["responses"]) {
    if (!rj.is_object()) return false;
    if (!rj.contains("response_id") || !rj.contains("body") || !rj.contains("upvotes") ||
        !rj.contains("downvotes") || !rj.contains("accepted"))
      return false;
    if (!rj["response_id"].is_string() || !rj["body"].is_string() ||
        !rj["upvotes"].is_number_integer() || !rj["downvotes"].is_number_integer() ||
        !rj["accepted"].is_boolean())
      return false;
    ForumResponse r;
    r.response_id = rj["response_id"].get<std::string>();
    r.body = rj["body"].get<std::string>();
    r.upvotes = rj["upvotes"].get<int64_t>();
    r.downvotes = rj["downvotes"].get<int64_t>();
    r.accepted = rj["accepted"].get<bool>();
    if (r.upvotes < 0 || r.downvotes < 0) return false;
    post.responses.push_back(std::move(r));
  }
  return true;
}

inline std::string xml_unescape(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (size_t i = 0; i < s.size();) {
    if (s[i] != '&') { out += s[i++]; continue; }
    size_t semi = s.find(';', i);
    if (semi == std::string::npos || semi - i > 10) { out += s[i++]; continue; }
    std::string ent = s.substr(i + 1, semi - i - 1);
    if (ent == "lt") out += '<';
    else if (ent == "gt") out += '>';
    else if (ent == "amp") out += '&';
    else if (ent == "quot") out += '"';
    else if (ent == "apos") out += '\'';
    else if (!ent.empty() && ent[0] == '#') {
      long code = 0;
      try {
        code = (ent.size() > 1 && (ent[1] == 'x' || ent[1] == 'X'))
                   ? std::stol(ent.substr(2), nullptr, 16)
                   : std::stol(ent.substr(1), nullptr, 10);
      } catch (const std::exception&) { code = -1; }
      if (code >= 0 && code < 128) out += static_cast<char>(code);
      else if (code == 8211 || code == 8212) out += '-';
      // other codepoints dropped rather than mis-encoded
    } else {
      out += s.substr(i, semi - i + 1);
    }
    i = semi + 1;
  }
  return out;
}

inline std::string strip_html_tags(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  bool in_tag = false;
  for (char c : s) {
    if (c == '<') in_tag = true;
    else if (c == '>') in_tag = false;
    else if (!in_tag) out += c;
  }
  return out;
}

inline std::map<std::string, std::string> xml_row_attrs(const std::string& line) {
  std::map<std::string, std::string> attrs;
  size_t i = line.find("<row");
  if (i == std::string::npos) return attrs;
  i += 4;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    if (i >= line.size() || line[i] == '/' || line[i] == '>') break;
    size_t eq = line.find('=', i);
    if (eq == std::string::npos) break;
    std::string key = line.substr(i, eq - i);
    size_t q1 = line.find('"', eq);
    if (q1 == std::string::npos) break;
    size_t q2 = line.find('"', q1 + 1);
    if (q2 == std::string::npos) break;
    attrs[key] = line.substr(q1 + 1, q2 - q1 - 1);
    i = q2 + 1;
  }
  return attrs;
}

}  // namespace detail

inline ParseResult parse_jsonl_posts(std::istream& in) {
  ParseResult res;
  for_each_jsonl_tolerant(in, [&](size_t, const json& obj, bool ok) {
    ++res.records;
    ForumPost post;
    if (ok && detail::parse_post_json(obj, post)) {
      detail::dedup_responses(post);
      res.posts.push_back(std::move(post));
    } else {
      ++res.skipped;
    }
  });
  return res;
}

// StackExchange Posts.xml: question rows become posts, answer rows attach to
// their ParentId.  Score maps to up/down votes by sign; AcceptedAnswerId sets
// the accepted flag.  Bodies are XML-unescaped and stripped of HTML tags.
inline ParseResult parse_se_xml(std::istream& in) {
  ParseResult res;
  std::vector<ForumPost> posts;
  std::unordered_map<std::string, size_t> post_index;
  std::unordered_map<std::string, std::string> accepted_of;  // question id -> answer id
  struct PendingAnswer { std::string parent; ForumResponse resp; };
  std::vector<PendingAnswer> answers;

  std::string line;
  while (std::getline(in, line)) {
    if (line.find("<row") == std::string::npos) continue;
    ++res.records;
    auto attrs = detail::xml_row_attrs(line);
    auto get = [&](const char* k) -> const std::string* {
      auto it = attrs.find(k);
      return it == attrs.end() ? nullptr : &it->second;
    };
    const std::string* id = get("Id");
    const std::string* type = get("PostTypeId");
    const std::string* body = get("Body");
    if (!id || !type || !body) { ++res.skipped; continue; }
    std::string clean =
        detail::xml_unescape(detail::strip_html_tags(detail::xml_unescape(*body)));
    if (*type == "1") {
      ForumPost post;
      post.post_id = *id;
      post.title = get("Title") ? detail::xml_unescape(*get("Title")) : "";
      post.body = clean;
      if (const std::string* acc = get("AcceptedAnswerId")) accepted_of[*id] = *acc;
      post_index[post.post_id] = posts.size();
      posts.push_back(std::move(post));
    } else if (*type == "2") {
      const std::string* parent = get("ParentId");
      if (!parent) { ++res.skipped; continue; }
      ForumResponse r;
      r.response_id = *id;
      r.body = clean;
      int64_t score = 0;
      if (const std::string* s = get("Score")) {
        try { score = std::stoll(*s); } catch (const std::exception&) { score = 0; }
      }
      if (score >= 0) r.upvotes = score;
      else r.downvotes = -score;
      answers.push_back({*parent, std::move(r)});
    }
    // other PostTypeIds (wiki, tag info) are not posts or answers; ignored
  }
  for (auto& a : answers) {
    auto it = post_index.find(a.parent);
    if (it == post_index.end()) { ++res.skipped; continue; }
    ForumPost& post = posts[it->second];
    auto acc = accepted_of.find(post.post_id);
    if (acc != accepted_of.end() && acc->second == a.resp.response_id)
      a.resp.accepted = true;
    post.responses.push_back(std::move(a.resp));
  }
  for (auto& p : posts) detail::dedup_responses(p);
  res.posts = std::move(posts);
  return res;
}

inline ParseResult parse_dump(std::istream& in, const std::string& format) {
  if (format == "jsonl") return parse_jsonl_posts(in);
  if (format == "se-xml") return parse_se_xml(in);
  throw ConfigError("unknown dump format: " + format);
}

inline json post_to_json(const ForumPost& p) {
  json obj;
  obj["post_id"] = p.post_id;
  obj["title"] = p.title;
  obj["body"] = p.body;
  obj["responses"] = json::array();
  for (const auto& r : p.responses) {
    json rj;
    rj["response_id"] = r.response_id;
    rj["body"] = r.body;
    rj["upvotes"] = r.upvotes;
    rj["downvotes"] = r.downvotes;
    rj["accepted"] = r.accepted;
    obj["responses"].push_back(std::move(rj));
  }
  return obj;
}

inline void serialize_posts(const std::vector<ForumPost>& posts, std::ostream& out) {
  for (const auto& p : posts) out << post_to_json(p).dump() << "\n";
}

// Histograms as tidy CSV: stat,key,key2,count.  key2 is only used by the
// length-vs-upvote joint distribution.
inline std::string corpus_stats_csv(const std::vector<ForumPost>& posts) {
  std::map<int64_t, int64_t> resp_len, netscore, per_post;
  std::map<std::pair<int64_t, int64_t>, int64_t> len_up;
  for (const auto& p : posts) {
    per_post[static_cast<int64_t>(p.responses.size())]++;
    for (const auto& r : p.responses) {
      int64_t len = static_cast<int64_t>(token_count(r.body));
      resp_len[len]++;
      netscore[net_score(r)]++;
      len_up[{len, r.upvotes}]++;
    }
  }
  std::string out = "stat,key,key2,count\n";
  auto emit1 = [&](const char* name, const std::map<int64_t, int64_t>& h) {
    for (const auto& [k, v] : h)
      out += std::string(name) + "," + std::to_string(k) + ",," + std::to_string(v) + "\n";
  };
  emit1("response_length", resp_len);
  emit1("net_score", netscore);
  emit1("responses_per_post", per_post);
  for (const auto& [k, v] : len_up)
    out += "length_upvotes," + std::to_string(k.first) + "," + std::to_string(k.second) +
           "," + std::to_string(v) + "\n";
  return out;
}

}  // namespace prefkit
