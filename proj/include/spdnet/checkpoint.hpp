#pragma once

#include <iosfwd>
#include <string>

#include "spdnet/network.hpp"

namespace spdnet {

struct Checkpoint {
  NetworkConfig config;
  NetworkParams params;
  int epoch = 0;
};

// Layout is documented in docs/formats.md.
inline constexpr std::uint32_t kCheckpointVersion = 1;

void write_checkpoint(std::ostream& os, const Checkpoint& ckpt);
Checkpoint read_checkpoint(std::istream& is, const std::string& source = "<stream>");

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace spdnet
