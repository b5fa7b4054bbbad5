#pragma once

#include "budtrack/types.hpp"

namespace budtrack {

// Globally optimal one-to-one bud -> branch assignment maximizing total
// score. When the matrix carries an unmatched column, each bud may take
// its own unmatched option at that score instead of a branch.
Assignment hungarian_assign(const ScoreMatrix& scores);

// Exhaustive oracle; throws for more than 8 rows.
Assignment brute_force_assign(const ScoreMatrix& scores);

}  // namespace budtrack
