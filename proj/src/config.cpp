#include "spdnet/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include "spdnet/errors.hpp"

namespace spdnet {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

int to_int(const std::string& key, const std::string& v) {
  int out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size())
    throw ConfigError("config: " + key + ": expected an integer, got '" + v + "'");
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size())
    throw ConfigError("config: " + key + ": expected a number, got '" + v + "'");
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("config: " + key + ": expected a boolean, got '" + v + "'");
}

}  // namespace

std::map<std::string, std::string> parse_config_text(const std::string& text,
                                                     const std::string& source) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  std::string line;
  std::string section;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find_first_of("#;");
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ParseError(source, line_no, "unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(source, line_no, "expected key = value");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ParseError(source, line_no, "empty key");
    out[section.empty() ? key : section + "." + key] = trim(line.substr(eq + 1));
  }
  return out;
}

std::map<std::string, std::string> parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path);
}

void apply_config(const std::map<std::string, std::string>& kv, RunConfig& cfg) {
  using Setter = std::function<void(const std::string&, const std::string&)>;
  const std::map<std::string, Setter> setters = {
      {"network.channels", [&](auto& k, auto& v) { cfg.network.channels = to_int(k, v); }},
      {"network.pyramid_levels",
       [&](auto& k, auto& v) { cfg.network.pyramid_levels = to_int(k, v); }},
      {"network.rectify_eps", [&](auto& k, auto& v) { cfg.network.rectify_eps = to_double(k, v); }},
      {"network.spat_out_dim", [&](auto& k, auto& v) { cfg.network.spat_out_dim = to_int(k, v); }},
      {"network.sequence_length",
       [&](auto& k, auto& v) { cfg.network.sequence_length = to_int(k, v); }},
      {"network.temporal_regularizer",
       [&](auto& k, auto& v) { cfg.network.temporal_regularizer = to_double(k, v); }},
      {"train.batch_size", [&](auto& k, auto& v) { cfg.train.batch_size = to_int(k, v); }},
      {"train.learning_rate", [&](auto& k, auto& v) { cfg.train.learning_rate = to_double(k, v); }},
      {"train.epochs", [&](auto& k, auto& v) { cfg.train.epochs = to_int(k, v); }},
      {"train.seed",
       [&](auto& k, auto& v) { cfg.train.seed = static_cast<std::uint64_t>(to_int(k, v)); }},
      {"train.shuffle", [&](auto& k, auto& v) { cfg.train.shuffle = to_bool(k, v); }},
      {"train.threads", [&](auto& k, auto& v) { cfg.train.threads = to_int(k, v); }},
      {"svm.C", [&](auto& k, auto& v) { cfg.svm.C = to_double(k, v); }},
      {"svm.tol", [&](auto& k, auto& v) { cfg.svm.tol = to_double(k, v); }},
      {"svm.standardize", [&](auto& k, auto& v) { cfg.svm.standardize = to_bool(k, v); }},
      {"data.dhg_root", [&](auto&, auto& v) { cfg.dhg_root = v; }},
      {"data.train", [&](auto&, auto& v) { cfg.train_data = v; }},
      {"data.test", [&](auto&, auto& v) { cfg.test_data = v; }},
      {"data.synthetic", [&](auto& k, auto& v) { cfg.synthetic = to_bool(k, v); }},
      {"data.synth_classes", [&](auto& k, auto& v) { cfg.synth_classes = to_int(k, v); }},
      {"data.synth_noise", [&](auto& k, auto& v) { cfg.synth_noise = to_double(k, v); }},
      {"data.mode", [&](auto& k, auto& v) { cfg.mode = to_int(k, v); }},
      {"data.wrist_center", [&](auto& k, auto& v) { cfg.wrist_center = to_bool(k, v); }},
      {"data.resample",
       [&](auto& k, auto& v) {
         if (v == "interpolate") cfg.resample = ResampleMode::kInterpolate;
         else if (v == "pad-last") cfg.resample = ResampleMode::kPadLast;
         else throw ConfigError("config: " + k + ": expected interpolate or pad-last");
       }},
      {"output.dir", [&](auto&, auto& v) { cfg.output_dir = v; }},
  };
  for (const auto& [key, value] : kv) {
    const auto it = setters.find(key);
    if (it == setters.end()) throw ConfigError("config: unknown key '" + key + "'");
    it->second(key, value);
  }
}

}  // namespace spdnet
