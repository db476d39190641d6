#ifndef L2R_SYNTHETIC_HPP_
#define L2R_SYNTHETIC_HPP_

#include <cstdint>
#include <filesystem>

#include "l2r/letor.hpp"

namespace l2r {

// Linearly separable ranking data: a hidden weight vector w is drawn once,
// document features are uniform on [0,1]^P, and labels come from binning
// w.x into `grades` per-query quantile buckets. A scorer that recovers
// w.x ranks every query perfectly.
struct SyntheticConfig {
  int feature_dim = 10;
  int train_queries = 50;
  int validation_queries = 20;
  int test_queries = 20;
  int docs_per_query = 20;
  int grades = 3;
  std::uint64_t seed = 1;
};

FoldSplit make_synthetic_fold(const SyntheticConfig& config);

// Writes train.txt / vali.txt / test.txt in LETOR format.
void write_fold_files(const std::filesystem::path& dir, const FoldSplit& fold);

}  // namespace l2r

#endif  // L2R_SYNTHETIC_HPP_
