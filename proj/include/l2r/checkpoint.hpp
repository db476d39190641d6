#ifndef L2R_CHECKPOINT_HPP_
#define L2R_CHECKPOINT_HPP_

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>

#include "l2r/scoring_net.hpp"

namespace l2r {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CheckpointMeta {
  std::uint32_t epoch = 0;          // best validation epoch
  std::uint64_t config_hash = 0;    // hash of the training configuration
  std::uint8_t normalized_features = 1;  // whether inputs were normalized
};

struct Checkpoint {
  ScoringNet net;
  AdamState adam;
  CheckpointMeta meta;
};

// Self-describing binary container, little-endian:
//   magic "L2RCKPT1" | u32 version | u32 input_dim | u32 hidden_dim
//   | u32 num_levels | f64 lr, beta1, beta2, epsilon | u64 adam_step
//   | u32 epoch | u64 config_hash | u8 normalized_features
//   | f64 arrays, row-major: w1, b1, w2, b2, then Adam m and v in the
//     same block order.
// Round-trips are exact at the bit level.
std::string serialize_checkpoint(const ScoringNet& net, const AdamState& adam,
                                 const CheckpointMeta& meta);
Checkpoint deserialize_checkpoint(const std::string& bytes);

void save_checkpoint(const std::filesystem::path& path, const ScoringNet& net,
                     const AdamState& adam, const CheckpointMeta& meta);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace l2r

#endif  // L2R_CHECKPOINT_HPP_
