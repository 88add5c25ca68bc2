#include "scenario.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

namespace poolforge {

namespace {

[[noreturn]] void perr(int line, const std::string& msg) {
  fail(Errc::parse, "line " + std::to_string(line) + ": " + msg);
}

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

uint64_t parse_size(const std::string& tok, int line) {
  if (tok.empty()) perr(line, "empty numeric value");
  uint64_t mult = 1;
  std::string num = tok;
  switch (tok.back()) {
    case 'K': case 'k': mult = 1024; num.pop_back(); break;
    case 'M': case 'm': mult = 1024 * 1024; num.pop_back(); break;
    case 'G': case 'g': mult = 1024ull * 1024 * 1024; num.pop_back(); break;
    default: break;
  }
  uint64_t v = 0;
  auto [p, ec] = std::from_chars(num.data(), num.data() + num.size(), v);
  if (ec != std::errc() || p != num.data() + num.size())
    perr(line, "bad number: " + tok);
  return v * mult;
}

double parse_double(const std::string& tok, int line) {
  try {
    size_t used = 0;
    double v = std::stod(tok, &used);
    if (used != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    perr(line, "bad number: " + tok);
  }
}

std::vector<std::string> split_ws(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  std::string t;
  while (in >> t) out.push_back(t);
  return out;
}

}  // namespace

Scenario load_scenario(const std::string& text) {
  Scenario sc;
  std::set<std::string> node_names;
  bool saw_policy = false, saw_workload = false;

  enum class Sec { Top, Node, Link, Workload, Policy } sec = Sec::Top;
  NodeSpec* node = nullptr;
  LinkSpec* link = nullptr;

  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    line++;
    auto cut = raw.find_first_of("#;");
    std::string s = trim(cut == std::string::npos ? raw : raw.substr(0, cut));
    if (s.empty()) continue;

    if (s.front() == '[') {
      if (s.back() != ']') perr(line, "unterminated section header");
      auto toks = split_ws(s.substr(1, s.size() - 2));
      if (toks.empty()) perr(line, "empty section header");
      if (toks[0] == "node") {
        if (toks.size() != 2) perr(line, "[node] takes exactly one name");
        if (!node_names.insert(toks[1]).second)
          perr(line, "duplicate node name: " + toks[1]);
        sc.nodes.push_back(NodeSpec{});
        node = &sc.nodes.back();
        node->name = toks[1];
        sec = Sec::Node;
      } else if (toks[0] == "link") {
        if (toks.size() != 3) perr(line, "[link] takes src and dst names");
        sc.links.push_back(LinkSpec{});
        link = &sc.links.back();
        link->src = toks[1];
        link->dst = toks[2];
        sec = Sec::Link;
      } else if (toks[0] == "workload") {
        if (toks.size() != 1) perr(line, "[workload] takes no arguments");
        saw_workload = true;
        sec = Sec::Workload;
      } else if (toks[0] == "policy") {
        if (toks.size() != 1) perr(line, "[policy] takes no arguments");
        saw_policy = true;
        sec = Sec::Policy;
      } else {
        perr(line, "unknown section: " + toks[0]);
      }
      continue;
    }

    auto eq = s.find('=');
    if (eq == std::string::npos) perr(line, "expected key=value");
    std::string key = trim(s.substr(0, eq));
    std::string val = trim(s.substr(eq + 1));
    if (key.empty() || val.empty()) perr(line, "expected key=value");

    switch (sec) {
      case Sec::Top:
        if (key == "seed") sc.seed = parse_size(val, line);
        else if (key == "duration") sc.duration_s = parse_size(val, line);
        else perr(line, "unknown top-level key: " + key);
        break;
      case Sec::Node:
        if (key == "children") {
          uint64_t c = parse_size(val, line);
          if (c < 2 || c > 16) perr(line, "children must be in [2,16]");
          node->children = int(c);
        } else if (key == "capacity") {
          node->capacity_bytes = parse_size(val, line);
          if (node->capacity_bytes == 0) perr(line, "capacity must be positive");
        } else if (key == "record_size") {
          uint64_t rs = parse_size(val, line);
          if (rs < 8 * 1024 || rs > 128 * 1024 || (rs & (rs - 1)))
            perr(line, "record_size must be a power of two in [8K,128K]");
          node->record_size = uint32_t(rs);
        } else {
          perr(line, "unknown node key: " + key);
        }
        break;
      case Sec::Link:
        if (key == "bandwidth") {
          link->bandwidth = parse_size(val, line);
          if (link->bandwidth == 0) perr(line, "bandwidth must be positive");
        } else if (key == "latency") {
          link->latency_ms = parse_size(val, line);
        } else if (key == "loss_prob") {
          double p = parse_double(val, line);
          if (p < 0.0 || p >= 1.0) perr(line, "loss_prob must be in [0,1)");
          link->loss_prob = p;
        } else {
          perr(line, "unknown link key: " + key);
        }
        break;
      case Sec::Workload:
        if (key == "write") {
          auto toks = split_ws(val);
          if (toks.size() != 5)
            perr(line, "write takes: <t_s> <object_id> <offset> <length> <pattern>");
          WriteOpSpec op;
          op.t_ms = parse_size(toks[0], line) * 1000;
          op.object_id = parse_size(toks[1], line);
          op.offset = parse_size(toks[2], line);
          op.length = parse_size(toks[3], line);
          if (op.length == 0) perr(line, "write length must be positive");
          op.pattern = toks[4];
          sc.writes.push_back(std::move(op));
        } else if (key == "corrupt") {
          sc.corrupt_at_ms.push_back(parse_size(val, line) * 1000);
        } else {
          perr(line, "unknown workload key: " + key);
        }
        break;
      case Sec::Policy:
        if (key == "interval") {
          sc.policy.interval_s = parse_size(val, line);
          if (sc.policy.interval_s == 0) perr(line, "interval must be positive");
        } else if (key == "mode") {
          if (val == "discrete") sc.policy.cumulative = false;
          else if (val == "cumulative") sc.policy.cumulative = true;
          else perr(line, "mode must be discrete or cumulative");
        } else if (key == "dedup") {
          if (val == "on" || val == "true" || val == "1") sc.policy.dedup = true;
          else if (val == "off" || val == "false" || val == "0") sc.policy.dedup = false;
          else perr(line, "dedup must be on or off");
        } else {
          perr(line, "unknown policy key: " + key);
        }
        break;
    }
  }

  if (sc.nodes.size() < 2) perr(line, "scenario needs at least two [node] sections");
  if (sc.links.empty()) perr(line, "scenario needs a [link] section");
  for (const auto& l : sc.links) {
    if (!node_names.count(l.src)) perr(line, "link references unknown node: " + l.src);
    if (!node_names.count(l.dst)) perr(line, "link references unknown node: " + l.dst);
    if (l.src == l.dst) perr(line, "link endpoints must differ");
  }
  (void)saw_policy;
  (void)saw_workload;
  return sc;
}

Scenario load_scenario_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail(Errc::io, "cannot read " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return load_scenario(ss.str());
}

std::vector<uint8_t> pattern_bytes(const std::string& pattern, uint64_t offset, size_t len) {
  // FNV-1a over the pattern picks the stream; bytes are a pure function of
  // (pattern, absolute offset) so overlapping writes agree
  uint64_t h = 1469598103934665603ull;
  for (unsigned char c : pattern) h = (h ^ c) * 1099511628211ull;
  std::vector<uint8_t> out(len);
  uint64_t word = 0;
  for (size_t i = 0; i < len; i++) {
    uint64_t pos = offset + i;
    if (i == 0 || pos % 8 == 0) {
      uint64_t s = h + pos / 8;
      word = splitmix64(s);
    }
    out[i] = uint8_t(word >> (8 * (pos % 8)));
  }
  return out;
}

}  // namespace poolforge
