#include "skp/kb_ingest.hpp"

#include <zlib.h>

#include <array>
#include <cctype>
#include <fstream>
#include <memory>
#include <streambuf>

namespace skp {

namespace {

bool is_ws(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; }

void skip_ws(std::string_view s, std::size_t& pos) {
  while (pos < s.size() && is_ws(s[pos])) ++pos;
}

void append_utf8(std::string& out, std::uint32_t cp) {
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xC0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else if (cp < 0x10000) {
    out += static_cast<char>(0xE0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else {
    out += static_cast<char>(0xF0 | (cp >> 18));
    out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  }
}

struct Cursor {
  std::string_view line;
  std::size_t pos = 0;
  std::size_t line_no;

  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError(line_no, what + " at column " + std::to_string(pos + 1));
  }
  bool at_end() const { return pos >= line.size(); }
  char peek() const { return line[pos]; }
};

std::string read_iri(Cursor& c) {
  // c.peek() == '<'
  const std::size_t close = c.line.find('>', c.pos + 1);
  if (close == std::string_view::npos) c.fail("unterminated IRI");
  const std::string_view iri = c.line.substr(c.pos, close - c.pos + 1);
  c.pos = close + 1;
  const std::string_view local = iri_local_name(iri);
  if (local.empty()) c.fail("IRI has an empty local name");
  return std::string(local);
}

std::string read_blank_node(Cursor& c) {
  // c.line starts with "_:" at c.pos
  const std::size_t begin = c.pos;
  c.pos += 2;
  while (!c.at_end() && !is_ws(c.peek()) && c.peek() != '.') ++c.pos;
  if (c.pos == begin + 2) c.fail("empty blank node label");
  return std::string(c.line.substr(begin, c.pos - begin));
}

std::string read_node(Cursor& c, const char* role) {
  if (c.at_end()) c.fail(std::string("missing ") + role);
  if (c.peek() == '<') return read_iri(c);
  if (c.line.substr(c.pos).starts_with("_:")) return read_blank_node(c);
  c.fail(std::string("expected IRI or blank node for ") + role);
}

std::uint32_t read_hex(Cursor& c, int digits) {
  if (c.pos + digits > c.line.size()) c.fail("truncated unicode escape");
  std::uint32_t v = 0;
  for (int i = 0; i < digits; ++i) {
    const char h = c.line[c.pos++];
    v <<= 4;
    if (h >= '0' && h <= '9') v |= h - '0';
    else if (h >= 'a' && h <= 'f') v |= h - 'a' + 10;
    else if (h >= 'A' && h <= 'F') v |= h - 'A' + 10;
    else c.fail("bad hex digit in escape");
  }
  return v;
}

// Lexical value of a quoted literal; suffixes are consumed and dropped.
std::string read_literal(Cursor& c) {
  ++c.pos;  // opening quote
  std::string value;
  for (;;) {
    if (c.at_end()) c.fail("unterminated literal");
    const char ch = c.line[c.pos++];
    if (ch == '"') break;
    if (ch != '\\') {
      value += ch;
      continue;
    }
    if (c.at_end()) c.fail("dangling escape");
    const char e = c.line[c.pos++];
    switch (e) {
      case 't': value += '\t'; break;
      case 'b': value += '\b'; break;
      case 'n': value += '\n'; break;
      case 'r': value += '\r'; break;
      case 'f': value += '\f'; break;
      case '"': value += '"'; break;
      case '\'': value += '\''; break;
      case '\\': value += '\\'; break;
      case 'u': append_utf8(value, read_hex(c, 4)); break;
      case 'U': append_utf8(value, read_hex(c, 8)); break;
      default: c.fail(std::string("unknown escape \\") + e);
    }
  }
  if (!c.at_end() && c.peek() == '@') {
    const std::size_t begin = ++c.pos;
    while (!c.at_end() && (std::isalnum(static_cast<unsigned char>(c.peek())) || c.peek() == '-'))
      ++c.pos;
    if (c.pos == begin) c.fail("empty language tag");
  } else if (c.line.substr(c.pos).starts_with("^^")) {
    c.pos += 2;
    if (c.at_end() || c.peek() != '<') c.fail("datatype must be an IRI");
    read_iri(c);
  }
  return value;
}

class GzStreamBuf : public std::streambuf {
 public:
  explicit GzStreamBuf(gzFile file) : file_(file) {}
  ~GzStreamBuf() override { gzclose(file_); }

 protected:
  int_type underflow() override {
    if (gptr() < egptr()) return traits_type::to_int_type(*gptr());
    const int n = gzread(file_, buffer_.data(), static_cast<unsigned>(buffer_.size()));
    if (n <= 0) return traits_type::eof();
    setg(buffer_.data(), buffer_.data(), buffer_.data() + n);
    return traits_type::to_int_type(*gptr());
  }

 private:
  gzFile file_;
  std::array<char, 1 << 16> buffer_{};
};

bool is_gzip(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  unsigned char magic[2] = {0, 0};
  in.read(reinterpret_cast<char*>(magic), 2);
  return in.gcount() == 2 && magic[0] == 0x1f && magic[1] == 0x8b;
}

bool digit_at(std::string_view s, std::size_t i) {
  return i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]));
}

std::string_view trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && is_ws(s[b])) ++b;
  while (e > b && is_ws(s[e - 1])) --e;
  return s.substr(b, e - b);
}

std::string resolve_id(std::string_view id, const NameMap* names) {
  if (names) {
    if (auto it = names->find(std::string(id)); it != names->end()) return clean_surface(it->second);
  }
  return clean_surface(id);
}

}  // namespace

std::size_t TripleHash::operator()(const Triple& t) const noexcept {
  const std::hash<std::string> h;
  std::size_t seed = h(t.subject);
  for (std::size_t v : {h(t.predicate), h(t.object), static_cast<std::size_t>(t.object_kind)})
    seed ^= v + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2);
  return seed;
}

std::optional<Triple> parse_ntriples_line(std::string_view line, std::size_t line_no) {
  Cursor c{line, 0, line_no};
  skip_ws(line, c.pos);
  if (c.at_end() || c.peek() == '#') return std::nullopt;

  Triple t;
  t.subject = read_node(c, "subject");
  skip_ws(line, c.pos);
  if (c.at_end() || c.peek() != '<') c.fail("expected predicate IRI");
  t.predicate = read_iri(c);
  skip_ws(line, c.pos);
  if (c.at_end()) c.fail("missing object");
  if (c.peek() == '"') {
    t.object = read_literal(c);
    t.object_kind = ObjectKind::literal;
  } else {
    t.object = read_node(c, "object");
  }
  skip_ws(line, c.pos);
  if (c.at_end() || c.peek() != '.') c.fail("missing terminal '.'");
  ++c.pos;
  skip_ws(line, c.pos);
  if (!c.at_end() && c.peek() != '#') c.fail("trailing content after '.'");
  return t;
}

std::optional<Triple> NTriplesReader::next() {
  while (std::getline(in_, buffer_)) {
    const std::size_t line_no = next_line_++;
    ++stats_.lines;
    try {
      if (auto t = parse_ntriples_line(buffer_, line_no)) {
        ++stats_.triples;
        return t;
      }
    } catch (const ParseError& e) {
      if (policy_ == MalformedPolicy::abort) throw;
      ++stats_.malformed;
      if (stats_.errors.size() < ParseStats::kMaxRecordedErrors) stats_.errors.push_back(e);
    }
  }
  return std::nullopt;
}

std::vector<Triple> parse_ntriples(std::istream& in, MalformedPolicy policy, ParseStats* stats) {
  NTriplesReader reader(in, policy);
  std::vector<Triple> out;
  while (auto t = reader.next()) out.push_back(std::move(*t));
  if (stats) *stats = reader.stats();
  return out;
}

std::vector<Triple> read_ntriples_file(const std::filesystem::path& path, MalformedPolicy policy,
                                       ParseStats* stats) {
  if (!std::filesystem::exists(path)) throw ConfigError("dump not found: " + path.string());
  if (is_gzip(path)) {
    gzFile file = gzopen(path.c_str(), "rb");
    if (!file) throw ConfigError("cannot open " + path.string());
    GzStreamBuf buf(file);
    std::istream in(&buf);
    return parse_ntriples(in, policy, stats);
  }
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  return parse_ntriples(in, policy, stats);
}

void write_ntriples(std::ostream& out, std::span<const Triple> triples) {
  auto escape = [](std::string_view s) {
    std::string r;
    for (char ch : s) {
      switch (ch) {
        case '"': r += "\\\""; break;
        case '\\': r += "\\\\"; break;
        case '\n': r += "\\n"; break;
        case '\r': r += "\\r"; break;
        case '\t': r += "\\t"; break;
        default: r += ch;
      }
    }
    return r;
  };
  auto node = [](std::string_view id) {
    return id.starts_with("_:") ? std::string(id) : "<" + std::string(id) + ">";
  };
  for (const Triple& t : triples) {
    out << node(t.subject) << ' ' << '<' << t.predicate << "> ";
    if (t.object_kind == ObjectKind::literal)
      out << '"' << escape(t.object) << '"';
    else
      out << node(t.object);
    out << " .\n";
  }
}

NameMap load_name_map(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read name map " + path.string());
  NameMap names;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto tab = line.find('\t');
    if (tab == std::string::npos) continue;
    names[line.substr(0, tab)] = line.substr(tab + 1);
  }
  return names;
}

std::string_view iri_local_name(std::string_view iri) {
  if (iri.size() >= 2 && iri.front() == '<' && iri.back() == '>') iri = iri.substr(1, iri.size() - 2);
  const auto cut = iri.find_last_of("/#");
  if (cut != std::string_view::npos) return iri.substr(cut + 1);
  if (const auto colon = iri.find(':'); colon != std::string_view::npos) return iri.substr(colon + 1);
  return iri;
}

std::string clean_surface(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    char ch = text[i];
    const bool separator = ch == '_' || ch == '<' || ch == '>' || ch == '"' ||
                           (ch == '.' && !(i > 0 && digit_at(text, i - 1) && digit_at(text, i + 1)));
    if (separator || is_ws(ch) || ch == '\f' || ch == '\v') {
      pending_space = true;
      continue;
    }
    if (pending_space && !out.empty()) out += ' ';
    pending_space = false;
    out += ch;
  }
  return out;
}

std::string normalize_term(std::string_view raw, const NameMap* names) {
  const std::string_view term = trim(raw);
  if (term.size() >= 2 && term.front() == '<' && term.back() == '>')
    return resolve_id(iri_local_name(term), names);
  if (!term.empty() && term.front() == '"') {
    Cursor c{term, 0, 0};
    try {
      return clean_surface(read_literal(c));
    } catch (const ParseError&) {
      // Not a well-formed literal: drop everything after the last quote.
      const auto close = term.rfind('"');
      return clean_surface(close > 0 ? term.substr(1, close - 1) : term.substr(1));
    }
  }
  return resolve_id(term, names);
}

std::string surface_of(std::string_view term, ObjectKind kind, const NameMap* names) {
  return kind == ObjectKind::literal ? clean_surface(term) : resolve_id(term, names);
}

void NodeCounts::add(const Triple& t) {
  ++nodes[t.subject].as_subject;
  if (t.object_kind == ObjectKind::entity) ++nodes[t.object].as_object;
}

void NodeCounts::merge(const NodeCounts& other) {
  for (const auto& [id, d] : other.nodes) {
    auto& mine = nodes[id];
    mine.as_subject += d.as_subject;
    mine.as_object += d.as_object;
  }
}

NodeSet load_cvt_list(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read CVT list " + path.string());
  NodeSet ids;
  std::string line;
  while (std::getline(in, line)) {
    const std::string_view id = trim(line);
    if (id.empty() || id.front() == '#') continue;
    ids.emplace(id.front() == '<' ? iri_local_name(id) : id);
  }
  return ids;
}

NodeSet detect_cvt(const NodeCounts& counts, const NameMap* names) {
  NodeSet out;
  for (const auto& [id, d] : counts.nodes) {
    if (d.as_object >= 1 && d.as_subject >= 2 && !(names && names->contains(id))) out.insert(id);
  }
  return out;
}

NodeSet detect_cvt(std::span<const Triple> triples, const NameMap* names,
                   const std::optional<NodeSet>& explicit_list) {
  NodeCounts counts;
  for (const Triple& t : triples) counts.add(t);
  if (!explicit_list) return detect_cvt(counts, names);
  NodeSet out;
  for (const auto& id : *explicit_list)
    if (counts.nodes.contains(id)) out.insert(id);
  return out;
}

}  // namespace skp
