#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "kkpert/linalg.hpp"

namespace kkpert {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Certified lower / upper bounds for a norm, with the methods that produced them.
struct NormInterval {
  double lower = 0.0;
  double upper = kInf;
  std::vector<std::string> method_tags;
  /// False when an iterative solver stopped on its iteration budget (bounds remain valid).
  bool converged = true;
  /// Feasible points achieving the lower bound (one matrix, or a pair for bilinear maps).
  std::vector<Matrix> witnesses;
  /// Lower bounds at matrix levels 1, 2, … when a level sweep was run.
  std::vector<double> level_lower;

  double width() const { return upper - lower; }
  double mid() const { return std::isfinite(upper) ? 0.5 * (lower + upper) : lower; }
  bool contains(double v, double tol = 0.0) const { return v >= lower - tol && v <= upper + tol; }
  bool has_tag(const std::string& tag) const {
    return std::find(method_tags.begin(), method_tags.end(), tag) != method_tags.end();
  }
  void tag(const std::string& t) {
    if (!has_tag(t)) method_tags.push_back(t);
  }
};

}  // namespace kkpert
