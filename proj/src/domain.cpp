#include "levyruin/domain.hpp"

#include <cmath>
#include <cstdio>

#include "levyruin/error.hpp"

namespace levyruin {

Domain::Domain(std::vector<Interval> intervals) : intervals_(std::move(intervals)) {
  if (intervals_.empty()) throw Error(ErrorKind::InvalidArgument, "domain has no intervals");
  for (std::size_t k = 0; k < intervals_.size(); ++k) {
    const auto& iv = intervals_[k];
    if (!std::isfinite(iv.lo) || !std::isfinite(iv.hi) || !(iv.hi > iv.lo)) {
      throw Error(ErrorKind::InvalidArgument, "domain interval must satisfy lo < hi");
    }
    if (k > 0 && !(iv.lo > intervals_[k - 1].hi)) {
      throw Error(ErrorKind::InvalidArgument, "domain intervals must be ordered and disjoint");
    }
  }
}

bool Domain::contains(double x) const { return locate(x) >= 0; }

int Domain::locate(double x) const {
  for (std::size_t k = 0; k < intervals_.size(); ++k) {
    if (x >= intervals_[k].lo && x <= intervals_[k].hi) return static_cast<int>(k);
  }
  return -1;
}

std::string Domain::canonical() const {
  std::string out;
  char buf[64];
  for (std::size_t k = 0; k < intervals_.size(); ++k) {
    if (k > 0) out += "u";
    std::snprintf(buf, sizeof buf, "[%.17g,%.17g]", intervals_[k].lo, intervals_[k].hi);
    out += buf;
  }
  return out;
}

std::string Domain::hash() const {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : canonical()) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace levyruin
