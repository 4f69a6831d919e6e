#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace levyruin {

struct Interval {
  double lo;
  double hi;
};

// Finite union of disjoint closed intervals, stored in increasing order.
class Domain {
 public:
  explicit Domain(std::vector<Interval> intervals);

  const std::vector<Interval>& intervals() const { return intervals_; }
  std::size_t size() const { return intervals_.size(); }
  double lower() const { return intervals_.front().lo; }
  double upper() const { return intervals_.back().hi; }
  double span() const { return upper() - lower(); }

  bool contains(double x) const;
  // Index of the interval holding x, or -1.
  int locate(double x) const;

  // Stable textual identity, e.g. "[-1,1]u[2,3]" with round-trip precision.
  std::string canonical() const;
  // 64-bit FNV-1a of canonical(), as 16 hex digits.
  std::string hash() const;

 private:
  std::vector<Interval> intervals_;
};

}  // namespace levyruin
