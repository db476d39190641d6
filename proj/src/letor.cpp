#include "l2r/letor.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace l2r {

namespace {

std::string with_line(const std::string& what, int line_no) {
  if (line_no <= 0) return what;
  return "line " + std::to_string(line_no) + ": " + what;
}

bool parse_int_strict(std::string_view s, int& out) {
  if (s.empty()) return false;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

bool parse_double_strict(std::string_view s, double& out) {
  if (s.empty()) return false;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> tokens;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    std::size_t start = i;
    while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    if (i > start) tokens.push_back(s.substr(start, i - start));
  }
  return tokens;
}

void pad_features(Dataset& ds, int feature_dim) {
  for (auto& q : ds.queries)
    for (auto& d : q.documents)
      if (static_cast<int>(d.features.size()) < feature_dim)
        d.features.resize(feature_dim, 0.0);
  ds.feature_dim = feature_dim;
}

}  // namespace

std::vector<int> QueryGroup::labels() const {
  std::vector<int> out;
  out.reserve(documents.size());
  for (const auto& d : documents) out.push_back(d.label);
  return out;
}

bool QueryGroup::has_relevant() const {
  for (const auto& d : documents)
    if (d.label >= 1) return true;
  return false;
}

int Dataset::total_documents() const {
  int n = 0;
  for (const auto& q : queries) n += q.size();
  return n;
}

ParseError::ParseError(const std::string& what, int line_no)
    : std::runtime_error(with_line(what, line_no)), line_(line_no) {}

ParsedLine parse_letor_line(std::string_view line, int line_no) {
  ParsedLine out;

  std::string_view content = line;
  if (const auto hash = line.find('#'); hash != std::string_view::npos) {
    out.comment = std::string(line.substr(hash + 1));
    content = line.substr(0, hash);
  }

  const auto tokens = split_ws(content);
  if (tokens.empty()) throw ParseError("empty line", line_no);

  if (!parse_int_strict(tokens[0], out.label))
    throw ParseError("label is not an integer: '" + std::string(tokens[0]) + "'",
                     line_no);
  if (out.label < 0)
    throw ParseError("negative label: " + std::string(tokens[0]), line_no);

  if (tokens.size() < 2 || !tokens[1].starts_with("qid:"))
    throw ParseError("missing qid: token", line_no);
  out.qid = std::string(tokens[1].substr(4));
  if (out.qid.empty()) throw ParseError("empty qid", line_no);

  std::unordered_set<int> seen;
  for (std::size_t t = 2; t < tokens.size(); ++t) {
    const std::string_view tok = tokens[t];
    const auto colon = tok.find(':');
    if (colon == std::string_view::npos)
      throw ParseError("malformed feature pair: '" + std::string(tok) + "'",
                       line_no);
    int index = 0;
    if (!parse_int_strict(tok.substr(0, colon), index) || index < 1)
      throw ParseError(
          "feature index is not a positive integer: '" + std::string(tok) + "'",
          line_no);
    double value = 0.0;
    if (!parse_double_strict(tok.substr(colon + 1), value))
      throw ParseError("non-numeric feature value: '" + std::string(tok) + "'",
                       line_no);
    if (!seen.insert(index).second)
      throw ParseError("duplicate feature index " + std::to_string(index),
                       line_no);
    out.features.emplace_back(index, value);
    out.max_feature_index = std::max(out.max_feature_index, index);
  }
  return out;
}

Document make_document(const ParsedLine& parsed, int feature_dim,
                       int doc_index) {
  if (parsed.max_feature_index > feature_dim)
    throw std::invalid_argument(
        "feature index " + std::to_string(parsed.max_feature_index) +
        " exceeds feature_dim " + std::to_string(feature_dim));
  Document doc;
  doc.label = parsed.label;
  doc.doc_index = doc_index;
  doc.comment = parsed.comment;
  doc.features.assign(feature_dim, 0.0);
  for (const auto& [index, value] : parsed.features)
    doc.features[index - 1] = value;
  return doc;
}

std::string serialize_document(const Document& doc, const std::string& qid) {
  std::string out = std::to_string(doc.label) + " qid:" + qid;
  char buf[40];
  for (std::size_t i = 0; i < doc.features.size(); ++i) {
    std::snprintf(buf, sizeof(buf), " %zu:%.17g", i + 1, doc.features[i]);
    out += buf;
  }
  if (!doc.comment.empty()) out += " #" + doc.comment;
  return out;
}

Dataset load_dataset(std::istream& in, const std::string& name) {
  std::vector<ParsedLine> lines;
  std::string raw;
  int line_no = 0;
  int feature_dim = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    bool blank = true;
    for (char ch : raw)
      if (!std::isspace(static_cast<unsigned char>(ch))) {
        blank = false;
        break;
      }
    if (blank) continue;
    lines.push_back(parse_letor_line(raw, line_no));
    feature_dim = std::max(feature_dim, lines.back().max_feature_index);
  }
  if (lines.empty()) throw std::runtime_error("empty dataset: " + name);

  Dataset ds;
  ds.feature_dim = feature_dim;
  std::unordered_map<std::string, std::size_t> group_of;
  int max_label = 0;
  int file_order = 0;
  for (const auto& parsed : lines) {
    auto [it, inserted] = group_of.try_emplace(parsed.qid, ds.queries.size());
    if (inserted) {
      ds.queries.emplace_back();
      ds.queries.back().qid = parsed.qid;
    }
    QueryGroup& group = ds.queries[it->second];
    Document doc = make_document(parsed, feature_dim, group.size());
    doc.file_order = file_order++;
    group.documents.push_back(std::move(doc));
    max_label = std::max(max_label, parsed.label);
  }
  ds.num_grades = max_label + 1;
  return ds;
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open file: " + path.string());
  return load_dataset(in, path.string());
}

Dataset normalize_per_query(Dataset ds) {
  for (auto& q : ds.queries) {
    for (int d = 0; d < ds.feature_dim; ++d) {
      double lo = q.documents.front().features[d];
      double hi = lo;
      for (const auto& doc : q.documents) {
        lo = std::min(lo, doc.features[d]);
        hi = std::max(hi, doc.features[d]);
      }
      const double span = hi - lo;
      for (auto& doc : q.documents)
        doc.features[d] = span > 0.0 ? (doc.features[d] - lo) / span : 0.0;
    }
  }
  return ds;
}

FoldSplit load_fold(const std::filesystem::path& dir, int fold_id,
                    bool normalize) {
  FoldSplit fold;
  fold.fold_id = fold_id;

  const std::filesystem::path files[3] = {dir / "train.txt", dir / "vali.txt",
                                          dir / "test.txt"};
  Dataset* subsets[3] = {&fold.train, &fold.validation, &fold.test};
  for (int i = 0; i < 3; ++i) {
    if (!std::filesystem::exists(files[i]))
      throw std::runtime_error("missing file: " + files[i].string());
    *subsets[i] = load_dataset(files[i]);
  }

  // one scorer serves all three subsets, so align their dimensions
  int feature_dim = 0;
  int num_grades = 0;
  for (auto* ds : subsets) {
    feature_dim = std::max(feature_dim, ds->feature_dim);
    num_grades = std::max(num_grades, ds->num_grades);
  }
  for (auto* ds : subsets) {
    pad_features(*ds, feature_dim);
    ds->num_grades = num_grades;
  }

  const char* names[3] = {"train", "vali", "test"};
  for (int a = 0; a < 3; ++a) {
    std::unordered_set<std::string> qids;
    for (const auto& q : subsets[a]->queries) qids.insert(q.qid);
    for (int b = a + 1; b < 3; ++b) {
      int shared = 0;
      for (const auto& q : subsets[b]->queries) shared += qids.count(q.qid);
      if (shared > 0)
        fold.warnings.push_back(std::to_string(shared) +
                                " qid(s) shared between " + names[a] + " and " +
                                names[b]);
    }
  }

  if (normalize)
    for (auto* ds : subsets) *ds = normalize_per_query(std::move(*ds));

  return fold;
}

}  // namespace l2r
