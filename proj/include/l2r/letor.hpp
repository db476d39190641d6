#ifndef L2R_LETOR_HPP_
#define L2R_LETOR_HPP_

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace l2r {

struct Document {
  int label = 0;                  // relevance grade, >= 0
  std::vector<double> features;   // dense, length = dataset feature_dim
  int doc_index = 0;              // 0-based position within its query
  int file_order = 0;             // 0-based position within the source file
  std::string comment;            // text after '#', verbatim

  bool operator==(const Document&) const = default;
};

struct QueryGroup {
  std::string qid;
  std::vector<Document> documents;

  int size() const { return static_cast<int>(documents.size()); }
  std::vector<int> labels() const;
  bool has_relevant() const;  // any label >= 1
};

struct Dataset {
  std::vector<QueryGroup> queries;
  int feature_dim = 0;
  int num_grades = 0;  // max observed label + 1

  int total_documents() const;
};

// One cross-validation fold. qid overlap between subsets is reported via
// `warnings` rather than rejected; some LETOR releases share qids.
struct FoldSplit {
  Dataset train;
  Dataset validation;
  Dataset test;
  int fold_id = 0;
  std::vector<std::string> warnings;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, int line_no);
  int line() const { return line_; }

 private:
  int line_;
};

// One parsed line: `<label> qid:<id> <k>:<v> ... [# comment]`.
// Feature pairs keep their 1-based file indices until the dataset-wide
// dimensionality is known.
struct ParsedLine {
  int label = 0;
  std::string qid;
  std::vector<std::pair<int, double>> features;  // (1-based index, value)
  std::string comment;
  int max_feature_index = 0;
};

ParsedLine parse_letor_line(std::string_view line, int line_no = 0);

// Densify a parsed line; indices beyond feature_dim are an error.
Document make_document(const ParsedLine& parsed, int feature_dim,
                       int doc_index);

// Inverse of parsing: emits every feature pair densely with enough digits
// to round-trip.
std::string serialize_document(const Document& doc, const std::string& qid);

Dataset load_dataset(const std::filesystem::path& path);
Dataset load_dataset(std::istream& in, const std::string& name = "<stream>");

// Per-query min-max scaling of each feature column to [0,1]; columns that
// are constant within a query map to 0. Idempotent; labels untouched.
Dataset normalize_per_query(Dataset ds);

// Loads `train.txt`, `vali.txt`, `test.txt` from a fold directory. The
// three subsets are padded to a common feature_dim (max of the three) so
// one scorer can serve them all.
FoldSplit load_fold(const std::filesystem::path& dir, int fold_id,
                    bool normalize = true);

}  // namespace l2r

#endif  // L2R_LETOR_HPP_
