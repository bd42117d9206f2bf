#pragma once

#include <random>

#include "seqchart/content_model.hpp"

namespace seqchart::testkit {

struct TreeBounds {
  int max_depth = 4;  // nodes on a root-to-item path, root and item included
  int max_items = 8;
  int max_units = 4;
  double assessment_ratio = 0.4;
  double timed_ratio = 0.3;  // share of assessments with a time limit
};

/// Random valid activity tree. Time limits are drawn from [2, 5] so that a
/// learner who submits immediately is never preempted by a timeout.
ActivityTree random_tree(std::mt19937_64& rng, const TreeBounds& bounds);

/// Number of assessment units in the tree.
int assessment_count(const ActivityTree& tree);

}  // namespace seqchart::testkit
