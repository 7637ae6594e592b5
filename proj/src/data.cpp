#include "spdnet/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "spdnet/binary_io.hpp"
#include "spdnet/errors.hpp"
#include "spdnet/parallel.hpp"

namespace fs = std::filesystem;

namespace spdnet {

std::vector<Frame> parse_skeleton_file(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot open skeleton file: " + file.string());
  std::vector<Frame> frames;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::vector<double> values;
    values.reserve(3 * kNumJoints);
    const char* p = line.data();
    const char* end = line.data() + line.size();
    while (p < end) {
      while (p < end && (*p == ' ' || *p == '\t' || *p == '\r')) ++p;
      if (p == end) break;
      double v = 0.0;
      auto [next, ec] = std::from_chars(p, end, v);
      if (ec != std::errc{} || !std::isfinite(v))
        throw ParseError(file.string(), line_no, "invalid number");
      values.push_back(v);
      p = next;
    }
    if (values.size() != 3 * kNumJoints) {
      std::ostringstream os;
      os << "expected " << 3 * kNumJoints << " values, got " << values.size();
      throw ParseError(file.string(), line_no, os.str());
    }
    Frame f(kNumJoints, 3);
    for (int j = 0; j < kNumJoints; ++j)
      for (int k = 0; k < 3; ++k) f(j, k) = values[static_cast<std::size_t>(3 * j + k)];
    frames.push_back(std::move(f));
  }
  if (frames.size() < 2)
    throw ParseError(file.string(), line_no, "a sequence needs at least 2 frames");
  return frames;
}

int dhg_label_28(int gesture, int finger) { return 2 * (gesture - 1) + finger; }

namespace {

struct DhgEntry {
  int gesture;
  int finger;
  int subject;
  int trial;
};

fs::path entry_dir(const fs::path& root, const DhgEntry& e) {
  return root / ("gesture_" + std::to_string(e.gesture)) / ("finger_" + std::to_string(e.finger)) /
         ("subject_" + std::to_string(e.subject)) / ("essai_" + std::to_string(e.trial));
}

bool parse_prefixed(const std::string& name, const std::string& prefix, int& out) {
  if (name.rfind(prefix, 0) != 0) return false;
  const char* b = name.data() + prefix.size();
  const char* e = name.data() + name.size();
  auto [p, ec] = std::from_chars(b, e, out);
  return ec == std::errc{} && p == e;
}

std::vector<fs::path> sorted_children(const fs::path& dir) {
  std::vector<fs::path> out;
  for (const auto& d : fs::directory_iterator(dir))
    if (d.is_directory()) out.push_back(d.path());
  std::sort(out.begin(), out.end());
  return out;
}

GestureSequence load_entry(const fs::path& root, const DhgEntry& e, const DhgOptions& opts) {
  if (e.gesture < 1 || e.gesture > 14 || e.finger < 1 || e.finger > 2)
    throw ConfigError("DHG entry outside gesture 1..14 / finger 1..2");
  GestureSequence seq;
  seq.frames = parse_skeleton_file(entry_dir(root, e) / opts.skeleton_file);
  seq.label_14 = e.gesture;
  seq.label_28 = dhg_label_28(e.gesture, e.finger);
  seq.subject = e.subject;
  seq.trial = e.trial;
  return seq;
}

std::vector<GestureSequence> load_entries(const fs::path& root, const std::vector<DhgEntry>& es,
                                          const DhgOptions& opts) {
  std::vector<GestureSequence> out(es.size());
  parallel_for(static_cast<int>(es.size()), opts.threads,
               [&](int i) { out[static_cast<std::size_t>(i)] = load_entry(root, es[i], opts); });
  return out;
}

std::vector<DhgEntry> read_split_list(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("missing split file: " + file.string());
  std::vector<DhgEntry> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    DhgEntry e{};
    if (!(ls >> e.gesture >> e.finger >> e.subject >> e.trial))
      throw ParseError(file.string(), line_no, "expected 'gesture finger subject essai ...'");
    out.push_back(e);
  }
  return out;
}

}  // namespace

std::vector<GestureSequence> load_dhg(const fs::path& root, const DhgOptions& opts) {
  if (!fs::is_directory(root)) throw ConfigError("DHG root is not a directory: " + root.string());
  std::vector<DhgEntry> entries;
  for (const auto& gdir : sorted_children(root)) {
    DhgEntry e{};
    if (!parse_prefixed(gdir.filename().string(), "gesture_", e.gesture)) continue;
    for (const auto& fdir : sorted_children(gdir)) {
      if (!parse_prefixed(fdir.filename().string(), "finger_", e.finger)) continue;
      for (const auto& sdir : sorted_children(fdir)) {
        if (!parse_prefixed(sdir.filename().string(), "subject_", e.subject)) continue;
        for (const auto& edir : sorted_children(sdir)) {
          if (!parse_prefixed(edir.filename().string(), "essai_", e.trial)) continue;
          if (fs::exists(edir / opts.skeleton_file)) entries.push_back(e);
        }
      }
    }
  }
  return load_entries(root, entries, opts);
}

DatasetSplit load_dhg_split(const fs::path& root, const DhgOptions& opts) {
  if (!fs::is_directory(root)) throw ConfigError("DHG root is not a directory: " + root.string());
  const auto train = read_split_list(root / opts.train_list);
  const auto test = read_split_list(root / opts.test_list);
  return {load_entries(root, train, opts), load_entries(root, test, opts)};
}

std::vector<int> class_histogram(const std::vector<GestureSequence>& seqs, int num_classes) {
  std::vector<int> h(static_cast<std::size_t>(num_classes) + 1, 0);
  for (const auto& s : seqs) {
    const int l = s.label(num_classes);
    if (l < 1 || l > num_classes)
      throw InvalidInput("class_histogram: label " + std::to_string(l) + " out of range");
    ++h[static_cast<std::size_t>(l)];
  }
  return h;
}

GestureSequence resample(const GestureSequence& seq, int target_len, ResampleMode mode) {
  const int n = seq.num_frames();
  if (n < 2) throw InvalidInput("resample: sequence needs at least 2 frames");
  if (target_len < 2) throw InvalidInput("resample: target length must be >= 2");
  GestureSequence out = seq;
  if (n == target_len) return out;

  out.frames.clear();
  out.frames.reserve(static_cast<std::size_t>(target_len));
  if (mode == ResampleMode::kPadLast) {
    if (n > target_len)
      throw InvalidInput("resample: pad-last cannot shorten a sequence of " + std::to_string(n) +
                         " frames");
    out.frames = seq.frames;
    while (out.num_frames() < target_len) out.frames.push_back(seq.frames.back());
    return out;
  }
  for (int k = 0; k < target_len; ++k) {
    const double u = static_cast<double>(k) * (n - 1) / (target_len - 1);
    const int i0 = std::min(static_cast<int>(std::floor(u)), n - 1);
    const double frac = u - i0;
    if (i0 == n - 1 || frac == 0.0) {
      out.frames.push_back(seq.frames[static_cast<std::size_t>(i0)]);
    } else {
      out.frames.push_back((1.0 - frac) * seq.frames[static_cast<std::size_t>(i0)] +
                           frac * seq.frames[static_cast<std::size_t>(i0) + 1]);
    }
  }
  return out;
}

GestureSequence center_on_wrist(const GestureSequence& seq) {
  GestureSequence out = seq;
  for (auto& f : out.frames) {
    const Eigen::RowVector3d wrist = f.row(0);
    f.rowwise() -= wrist;
  }
  return out;
}

// ---- synthetic prototypes ----

namespace {

struct FingerShape {
  Eigen::Vector3d base;
  Eigen::Vector3d dir;
};

constexpr std::array<double, 3> kSegments = {0.025, 0.02, 0.018};

std::array<FingerShape, kNumFingers> rest_fingers() {
  return {{
      {{-0.030, 0.030, 0.0}, Eigen::Vector3d(-0.6, 0.8, 0.0)},
      {{-0.020, 0.080, 0.0}, Eigen::Vector3d(0.0, 1.0, 0.0)},
      {{0.000, 0.085, 0.0}, Eigen::Vector3d(0.0, 1.0, 0.0)},
      {{0.020, 0.080, 0.0}, Eigen::Vector3d(0.0, 1.0, 0.0)},
      {{0.038, 0.070, 0.0}, Eigen::Vector3d(0.1, 1.0, 0.0)},
  }};
}

// Hand pose with per-finger curl angles (radians per joint, bending the
// finger towards -z).
Frame hand_pose(const std::array<double, kNumFingers>& curl, double spread) {
  Frame f = Matrix::Zero(kNumJoints, 3);
  f.row(1) = Eigen::RowVector3d(0.0, 0.04, 0.0);
  const auto fingers = rest_fingers();
  for (int s = 0; s < kNumFingers; ++s) {
    const auto joints = finger_joints(s);
    Eigen::Vector3d p = fingers[s].base;
    p.x() *= spread;
    const Eigen::Vector3d d0 = fingers[s].dir.normalized();
    f.row(joints[0] - 1) = p.transpose();
    for (int k = 1; k < kJointsPerFinger; ++k) {
      const double a = curl[s] * k;
      const Eigen::Vector3d d(d0.x() * spread, d0.y() * std::cos(a), -std::sin(a));
      p += kSegments[k - 1] * d;
      f.row(joints[k] - 1) = p.transpose();
    }
  }
  return f;
}

Frame prototype_frame(int cls, double tau) {
  using std::numbers::pi;
  std::array<double, kNumFingers> curl{};
  double spread = 1.0;
  Eigen::RowVector3d shift(0.0, 0.0, 0.4);
  double yaw = 0.0;
  switch (cls) {
    case 0:  // swipe right
      shift.x() += -0.1 + 0.2 * tau;
      break;
    case 1:  // swipe up
      shift.y() += -0.1 + 0.2 * tau;
      break;
    case 2:  // grab
      curl.fill(0.5 * tau);
      break;
    case 3:  // shake
      shift.x() += 0.05 * std::sin(6.0 * pi * tau);
      break;
    case 4:  // pinch
      curl[0] = 0.6 * tau;
      curl[1] = 0.6 * tau;
      break;
    case 5:  // rotate clockwise
      yaw = -0.5 * pi * tau;
      break;
    case 6:  // expand
      spread = 1.0 + tau;
      break;
    case 7: {  // tap
      const double s = std::sin(2.0 * pi * tau);
      curl[1] = 0.8 * s * s;
      break;
    }
    default:
      throw InvalidInput("synth: unknown class id " + std::to_string(cls));
  }
  Frame f = hand_pose(curl, spread);
  if (yaw != 0.0) {
    Eigen::Matrix3d rot = Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitZ()).toRotationMatrix();
    f = (f * rot.transpose()).eval();
  }
  f.rowwise() += shift;
  return f;
}

}  // namespace

GestureSequence synth_prototype(int cls, int num_frames) {
  if (cls < 0 || cls >= kNumSyntheticPrototypes)
    throw InvalidInput("synth: unknown class id " + std::to_string(cls));
  if (num_frames < 2) throw InvalidInput("synth: need at least 2 frames");
  GestureSequence seq;
  for (int t = 0; t < num_frames; ++t)
    seq.frames.push_back(prototype_frame(cls, static_cast<double>(t) / (num_frames - 1)));
  seq.label_14 = cls + 1;
  seq.label_28 = cls + 1;
  return seq;
}

std::vector<GestureSequence> synth_generate(int n_per_class, int n_classes, double noise_sigma,
                                            std::uint64_t seed) {
  if (n_classes < 1 || n_classes > kNumSyntheticPrototypes)
    throw InvalidInput("synth: n_classes must be in [1, " +
                       std::to_string(kNumSyntheticPrototypes) + "]");
  if (n_per_class < 0 || noise_sigma < 0.0) throw InvalidInput("synth: negative size or noise");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<GestureSequence> out;
  out.reserve(static_cast<std::size_t>(n_per_class * n_classes));
  for (int c = 0; c < n_classes; ++c) {
    const GestureSequence proto = synth_prototype(c);
    for (int i = 0; i < n_per_class; ++i) {
      GestureSequence seq = proto;
      seq.subject = i;
      if (noise_sigma > 0.0)
        for (auto& f : seq.frames)
          for (Eigen::Index k = 0; k < f.size(); ++k) f(k) += noise_sigma * noise(rng);
      out.push_back(std::move(seq));
    }
  }
  return out;
}

// ---- dataset cache ----

void write_dataset(std::ostream& os, const std::vector<GestureSequence>& seqs) {
  using namespace binio;
  write_magic(os, "SPDS");
  write_u32(os, 1);
  write_u32(os, static_cast<std::uint32_t>(seqs.size()));
  for (const auto& s : seqs) {
    write_u32(os, static_cast<std::uint32_t>(s.label_14));
    write_u32(os, static_cast<std::uint32_t>(s.label_28));
    write_u32(os, static_cast<std::uint32_t>(s.subject));
    write_u32(os, static_cast<std::uint32_t>(s.trial));
    write_u32(os, static_cast<std::uint32_t>(s.frames.size()));
    for (const auto& f : s.frames) write_matrix(os, f);
  }
  if (!os) throw Error("write_dataset: stream write failed");
}

std::vector<GestureSequence> read_dataset(std::istream& is, const std::string& source) {
  using namespace binio;
  expect_magic(is, "SPDS", source);
  const auto version = read_u32(is, source);
  if (version != 1) throw ParseError(source, 0, "unsupported dataset version");
  const auto count = read_u32(is, source);
  std::vector<GestureSequence> out(count);
  for (auto& s : out) {
    s.label_14 = static_cast<int>(read_u32(is, source));
    s.label_28 = static_cast<int>(read_u32(is, source));
    s.subject = static_cast<int>(read_u32(is, source));
    s.trial = static_cast<int>(read_u32(is, source));
    const auto frames = read_u32(is, source);
    for (std::uint32_t t = 0; t < frames; ++t) s.frames.push_back(read_matrix(is, kNumJoints, 3, source));
  }
  return out;
}

void save_dataset(const std::string& path, const std::vector<GestureSequence>& seqs) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot open dataset file for writing: " + path);
  write_dataset(os, seqs);
}

std::vector<GestureSequence> load_dataset(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot open dataset file: " + path);
  return read_dataset(is, path);
}

}  // namespace spdnet
