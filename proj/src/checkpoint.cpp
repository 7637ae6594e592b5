#include "spdnet/checkpoint.hpp"

#include <fstream>

#include "spdnet/binary_io.hpp"
#include "spdnet/errors.hpp"

namespace spdnet {

using namespace binio;

void write_checkpoint(std::ostream& os, const Checkpoint& ckpt) {
  const NetworkConfig& c = ckpt.config;
  const NetworkParams& p = ckpt.params;
  write_magic(os, "SPDN");
  write_u32(os, kCheckpointVersion);
  write_u32(os, static_cast<std::uint32_t>(c.channels));
  write_u32(os, static_cast<std::uint32_t>(c.pyramid_levels));
  write_f64(os, c.rectify_eps);
  write_u32(os, static_cast<std::uint32_t>(c.spat_out_dim));
  write_u32(os, static_cast<std::uint32_t>(c.num_classes));
  write_u32(os, static_cast<std::uint32_t>(c.sequence_length));
  write_f64(os, c.temporal_regularizer);
  write_u32(os, static_cast<std::uint32_t>(c.num_fingers));
  write_u32(os, static_cast<std::uint32_t>(c.joints_per_finger));
  write_u32(os, static_cast<std::uint32_t>(ckpt.epoch));
  for (const auto& w : p.conv.label_weights) write_matrix(os, w);
  for (const auto& w : p.spat.weights) write_matrix(os, w);
  write_matrix(os, p.fc_weight);
  for (Eigen::Index i = 0; i < p.fc_bias.size(); ++i) write_f64(os, p.fc_bias(i));
  if (!os) throw Error("write_checkpoint: stream write failed");
}

Checkpoint read_checkpoint(std::istream& is, const std::string& source) {
  expect_magic(is, "SPDN", source);
  const std::uint32_t version = read_u32(is, source);
  if (version != kCheckpointVersion)
    throw ParseError(source, 0, "unsupported checkpoint version " + std::to_string(version));
  Checkpoint ck;
  NetworkConfig& c = ck.config;
  c.channels = static_cast<int>(read_u32(is, source));
  c.pyramid_levels = static_cast<int>(read_u32(is, source));
  c.rectify_eps = read_f64(is, source);
  c.spat_out_dim = static_cast<int>(read_u32(is, source));
  c.num_classes = static_cast<int>(read_u32(is, source));
  c.sequence_length = static_cast<int>(read_u32(is, source));
  c.temporal_regularizer = read_f64(is, source);
  c.num_fingers = static_cast<int>(read_u32(is, source));
  c.joints_per_finger = static_cast<int>(read_u32(is, source));
  ck.epoch = static_cast<int>(read_u32(is, source));
  c.validate();

  NetworkParams& p = ck.params;
  for (auto& w : p.conv.label_weights) w = read_matrix(is, c.channels, 3, source);
  for (int i = 0; i < c.num_spat_inputs(); ++i)
    p.spat.weights.push_back(read_matrix(is, c.spat_out_dim, c.temporal_dim(), source));
  p.fc_weight = read_matrix(is, c.num_classes, c.feature_dim(), source);
  p.fc_bias.resize(c.num_classes);
  for (int i = 0; i < c.num_classes; ++i) p.fc_bias(i) = read_f64(is, source);
  return ck;
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot open checkpoint for writing: " + path);
  write_checkpoint(os, ckpt);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot open checkpoint: " + path);
  return read_checkpoint(is, path);
}

}  // namespace spdnet
