#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "spdnet/sequence.hpp"

namespace spdnet {

struct DatasetSplit {
  std::vector<GestureSequence> train;
  std::vector<GestureSequence> test;
};

// ---- DHG / SHREC'17 layout ----
//
//   root/gesture_G/finger_F/subject_S/essai_E/<skeleton_file>
//
// with one frame per line (66 whitespace-separated floats, 22 joints x xyz)
// and the protocol split lists root/train_gestures.txt and
// root/test_gestures.txt, whose lines start with "G F S E".

struct DhgOptions {
  std::string skeleton_file = "skeletons_world.txt";
  std::string train_list = "train_gestures.txt";
  std::string test_list = "test_gestures.txt";
  int threads = 1;
};

/// Parses one skeleton text file. Throws ParseError naming the line on any
/// row without exactly 66 finite numbers.
std::vector<Frame> parse_skeleton_file(const std::filesystem::path& file);

/// 28-class label of gesture g (1..14) performed with finger mode f (1..2).
int dhg_label_28(int gesture, int finger);

/// Every sequence under root, in path-sorted order.
std::vector<GestureSequence> load_dhg(const std::filesystem::path& root,
                                      const DhgOptions& opts = {});

/// Sequences named by the protocol split lists. Throws ConfigError if a
/// list is missing.
DatasetSplit load_dhg_split(const std::filesystem::path& root, const DhgOptions& opts = {});

/// Counts per 1-based class label; index 0 is unused.
std::vector<int> class_histogram(const std::vector<GestureSequence>& seqs, int num_classes);

// ---- length normalization ----

enum class ResampleMode { kInterpolate, kPadLast };

/// Piecewise-linear interpolation at `target_len` evenly spaced parameters
/// over [0, 1]. Endpoints are preserved exactly and a sequence that already
/// has `target_len` frames is returned unchanged.
GestureSequence resample(const GestureSequence& seq, int target_len = 171,
                         ResampleMode mode = ResampleMode::kInterpolate);

/// Subtracts the wrist position from every joint of every frame.
GestureSequence center_on_wrist(const GestureSequence& seq);

// ---- synthetic gestures ----

inline constexpr int kNumSyntheticPrototypes = 8;

/// `n_per_class` noisy copies of each of the first `n_classes` motion
/// prototypes (171 frames, labels 1..n_classes), class-major order.
std::vector<GestureSequence> synth_generate(int n_per_class, int n_classes, double noise_sigma,
                                            std::uint64_t seed);

/// Noise-free trajectory of prototype `cls` (0-based).
GestureSequence synth_prototype(int cls, int num_frames = 171);

// ---- dataset cache ----

void write_dataset(std::ostream& os, const std::vector<GestureSequence>& seqs);
std::vector<GestureSequence> read_dataset(std::istream& is, const std::string& source = "<stream>");
void save_dataset(const std::string& path, const std::vector<GestureSequence>& seqs);
std::vector<GestureSequence> load_dataset(const std::string& path);

}  // namespace spdnet
