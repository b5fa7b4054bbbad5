#pragma once

#include <array>
#include <stdexcept>
#include <string>
#include <vector>

#include "budtrack/types.hpp"

namespace budtrack {

// Invariant checks over a frame sequence. Returns human-readable
// diagnostics; an empty list means the sequence is valid.
std::vector<std::string> validate_sequence(const std::vector<Frame>& frames);

struct SplitRatios {
  double train = 0.70;
  double val = 0.15;
  double test = 0.15;
};

struct Split {
  std::vector<Frame> train, val, test;
};

// Contiguous chronological partition. Counts: train = floor(r_train*n),
// val = floor(r_val*n), test = remainder; an empty split then takes one
// frame from the largest split so every split is non-empty.
Split chronological_split(const std::vector<Frame>& frames,
                          SplitRatios ratios = {});

// Count-only version of the rule above, exposed for tests.
std::array<std::size_t, 3> split_counts(std::size_t n, SplitRatios ratios = {});

}  // namespace budtrack
