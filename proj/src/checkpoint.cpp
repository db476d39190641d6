#include "l2r/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <limits>

namespace l2r {

namespace {

static_assert(std::numeric_limits<double>::is_iec559,
              "checkpoint format requires IEEE-754 doubles");
static_assert(std::endian::native == std::endian::little,
              "checkpoint writer assumes a little-endian host");

constexpr char kMagic[8] = {'L', '2', 'R', 'C', 'K', 'P', 'T', '1'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::string& out, T value) {
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.append(buf, sizeof(T));
}

void put_block(std::string& out, const double* p, std::size_t n) {
  out.append(reinterpret_cast<const char*>(p), n * sizeof(double));
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  template <typename T>
  T get() {
    T value;
    need(sizeof(T));
    std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }

  void get_block(double* p, std::size_t n) {
    need(n * sizeof(double));
    std::memcpy(p, bytes_.data() + pos_, n * sizeof(double));
    pos_ += n * sizeof(double);
  }

  void skip_magic() {
    need(sizeof(kMagic));
    if (std::memcmp(bytes_.data(), kMagic, sizeof(kMagic)) != 0)
      throw CheckpointError("not a checkpoint file (bad magic)");
    pos_ += sizeof(kMagic);
  }

  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size())
      throw CheckpointError("truncated checkpoint file");
  }

  const std::string& bytes_;
  std::size_t pos_ = 0;
};

void put_net(std::string& out, const ScoringNet& net) {
  put_block(out, net.w1.data(), net.w1.size());
  put_block(out, net.b1.data(), net.b1.size());
  put_block(out, net.w2.data(), net.w2.size());
  put_block(out, net.b2.data(), net.b2.size());
}

void get_net(Reader& r, ScoringNet& net) {
  r.get_block(net.w1.data(), net.w1.size());
  r.get_block(net.b1.data(), net.b1.size());
  r.get_block(net.w2.data(), net.w2.size());
  r.get_block(net.b2.data(), net.b2.size());
}

}  // namespace

std::string serialize_checkpoint(const ScoringNet& net, const AdamState& adam,
                                 const CheckpointMeta& meta) {
  std::string out;
  out.append(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(net.input_dim()));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(net.hidden_dim()));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(net.num_levels()));
  put<double>(out, adam.config.learning_rate);
  put<double>(out, adam.config.beta1);
  put<double>(out, adam.config.beta2);
  put<double>(out, adam.config.epsilon);
  put<std::uint64_t>(out, static_cast<std::uint64_t>(adam.step));
  put<std::uint32_t>(out, meta.epoch);
  put<std::uint64_t>(out, meta.config_hash);
  put<std::uint8_t>(out, meta.normalized_features);
  put_net(out, net);
  put_net(out, adam.m);
  put_net(out, adam.v);
  return out;
}

Checkpoint deserialize_checkpoint(const std::string& bytes) {
  Reader r(bytes);
  r.skip_magic();
  const auto version = r.get<std::uint32_t>();
  if (version != kVersion)
    throw CheckpointError("unsupported checkpoint version " +
                          std::to_string(version));
  const auto input_dim = r.get<std::uint32_t>();
  const auto hidden_dim = r.get<std::uint32_t>();
  const auto num_levels = r.get<std::uint32_t>();
  if (input_dim < 1 || hidden_dim < 1 || num_levels < 1 ||
      input_dim > (1u << 24) || hidden_dim > (1u << 24) ||
      num_levels > (1u << 24))
    throw CheckpointError("checkpoint dimensions are inconsistent");

  Checkpoint ckpt;
  ckpt.net = make_net(static_cast<int>(input_dim), static_cast<int>(hidden_dim),
                      static_cast<int>(num_levels));
  AdamConfig cfg;
  cfg.learning_rate = r.get<double>();
  cfg.beta1 = r.get<double>();
  cfg.beta2 = r.get<double>();
  cfg.epsilon = r.get<double>();
  ckpt.adam = make_adam_state(ckpt.net, cfg);
  ckpt.adam.step = static_cast<std::int64_t>(r.get<std::uint64_t>());
  ckpt.meta.epoch = r.get<std::uint32_t>();
  ckpt.meta.config_hash = r.get<std::uint64_t>();
  ckpt.meta.normalized_features = r.get<std::uint8_t>();

  get_net(r, ckpt.net);
  get_net(r, ckpt.adam.m);
  get_net(r, ckpt.adam.v);
  if (r.remaining() != 0)
    throw CheckpointError("checkpoint size does not match its dimensions");
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const ScoringNet& net,
                     const AdamState& adam, const CheckpointMeta& meta) {
  const std::string bytes = serialize_checkpoint(net, adam, meta);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError("cannot write checkpoint: " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw CheckpointError("write failed: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint: " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  return deserialize_checkpoint(bytes);
}

}  // namespace l2r
