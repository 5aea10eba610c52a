#pragma once

// Suboptimality factor with exact rational arithmetic and the OPEN/FOCAL
// queue shared by the low-level and high-level searches.

#include <cassert>
#include <charconv>
#include <cstdint>
#include <numeric>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

namespace decbs {

/// w >= 1 stored as num/den so that FOCAL membership never depends on
/// floating-point rounding.
class SuboptimalityFactor {
 public:
  constexpr SuboptimalityFactor() = default;

  SuboptimalityFactor(std::int64_t num, std::int64_t den) : num_(num), den_(den) {
    if (den <= 0 || num < den) throw std::invalid_argument("suboptimality factor must be >= 1");
    const auto g = std::gcd(num_, den_);
    num_ /= g;
    den_ /= g;
  }

  // Decimal text such as "1", "1.1", "1.025".
  static SuboptimalityFactor parse(std::string_view text) {
    std::int64_t num = 0;
    std::int64_t den = 1;
    bool seen_dot = false;
    bool seen_digit = false;
    for (char ch : text) {
      if (ch == '.' && !seen_dot) {
        seen_dot = true;
      } else if (ch >= '0' && ch <= '9') {
        seen_digit = true;
        if (num > (std::int64_t{1} << 40)) throw std::invalid_argument("suboptimality factor too precise");
        num = num * 10 + (ch - '0');
        if (seen_dot) den *= 10;
      } else {
        throw std::invalid_argument("malformed suboptimality factor '" + std::string(text) + "'");
      }
    }
    if (!seen_digit) throw std::invalid_argument("malformed suboptimality factor '" + std::string(text) + "'");
    return SuboptimalityFactor(num, den);
  }

  std::int64_t num() const { return num_; }
  std::int64_t den() const { return den_; }
  double value() const { return static_cast<double>(num_) / static_cast<double>(den_); }

  // floor(w * base) for base >= 0.
  std::int64_t scaled_floor(std::int64_t base) const { return num_ * base / den_; }

  // value <= w * base
  bool admits(std::int64_t value, std::int64_t base) const { return value * den_ <= num_ * base; }

  // Decimal rendering that parses back to the same factor.
  std::string to_string() const {
    std::int64_t scaled = num_;
    int digits = 0;
    while (scaled % den_ != 0 && digits < 15) {
      scaled *= 10;
      ++digits;
    }
    if (scaled % den_ != 0) return std::to_string(value());
    return decimal(scaled / den_, digits);
  }

  friend bool operator==(const SuboptimalityFactor&, const SuboptimalityFactor&) = default;

 private:
  static std::string decimal(std::int64_t scaled, int digits) {
    std::string s = std::to_string(scaled);
    if (digits == 0) return s;
    if (static_cast<int>(s.size()) <= digits) s.insert(0, digits - s.size() + 1, '0');
    s.insert(s.size() - digits, ".");
    return s;
  }

  std::int64_t num_ = 1;
  std::int64_t den_ = 1;
};

enum class TieBreak { Fifo, Lifo };

/// OPEN/FOCAL pair.
///
/// Every entry carries a `lower` key (OPEN is ordered by it, and its minimum
/// is the current lower bound), a `cost` used for the FOCAL admission test
/// cost <= w * min(lower), and a `secondary` key ordering FOCAL
/// (smaller first, ties by cost, then insertion order per TieBreak).
///
/// In fixed-bound mode the lower bound is given up front: entries whose cost
/// exceeds w * bound are rejected on push and everything else lives in FOCAL.
template <class Payload>
class FocalQueue {
 public:
  using Handle = std::size_t;

  struct Popped {
    Payload payload;
    Handle handle;
    std::int64_t lower_bound;  // min lower in OPEN when the entry was popped
    std::int64_t cost;
    std::int64_t secondary;
  };

  FocalQueue(SuboptimalityFactor w, TieBreak tie) : w_(w), tie_(tie) {}

  static FocalQueue with_fixed_bound(SuboptimalityFactor w, std::int64_t lower_bound, TieBreak tie) {
    FocalQueue q(w, tie);
    q.fixed_bound_ = lower_bound;
    q.threshold_ = w.scaled_floor(lower_bound);
    return q;
  }

  std::optional<Handle> push(Payload payload, std::int64_t lower, std::int64_t cost, std::int64_t secondary) {
    if (fixed_bound_ && cost > *threshold_) return std::nullopt;
    const Handle h = entries_.size();
    entries_.push_back(Entry{std::move(payload), lower, cost, secondary, false, true});
    by_lower_.emplace(lower, h);
    if (fixed_bound_ || (threshold_ && cost <= *threshold_)) {
      add_to_focal(h);
    } else {
      pending_.emplace(cost, h);
    }
    ++live_;
    return h;
  }

  bool empty() const { return live_ == 0; }
  std::size_t size() const { return live_; }
  std::size_t focal_size() const { return focal_.size(); }
  bool in_focal(Handle h) const { return entries_[h].in_focal; }
  bool contains(Handle h) const { return h < entries_.size() && entries_[h].alive; }

  std::int64_t min_lower() const {
    if (fixed_bound_) return *fixed_bound_;
    assert(!by_lower_.empty());
    return by_lower_.begin()->first;
  }

  std::optional<std::int64_t> threshold() const { return threshold_; }

  /// Re-derives the admission threshold from the current OPEN front and moves
  /// newly eligible entries into FOCAL.
  void refresh() {
    if (fixed_bound_ || empty()) return;
    const std::int64_t t = w_.scaled_floor(min_lower());
    if (threshold_ && t < *threshold_) {
      // Only reachable if lower keys are not monotone; demote to keep FOCAL exact.
      for (auto it = focal_.begin(); it != focal_.end();) {
        const Handle h = handle_of(*it);
        if (entries_[h].cost > t) {
          entries_[h].in_focal = false;
          pending_.emplace(entries_[h].cost, h);
          it = focal_.erase(it);
        } else {
          ++it;
        }
      }
    }
    threshold_ = t;
    for (auto it = pending_.begin(); it != pending_.end() && it->first <= t;) {
      add_to_focal(it->second);
      it = pending_.erase(it);
    }
  }

  /// Pops the FOCAL front after a refresh. If FOCAL is empty (possible only when
  /// an entry's cost exceeds w times its own lower key), the OPEN front is taken.
  Popped pop() {
    assert(!empty());
    refresh();
    const std::int64_t lb = min_lower();
    Handle h;
    if (!focal_.empty()) {
      h = handle_of(*focal_.begin());
    } else {
      h = by_lower_.begin()->second;
    }
    remove(h);
    Entry& e = entries_[h];
    return Popped{std::move(e.payload), h, lb, e.cost, e.secondary};
  }

  // Members of FOCAL front to back; for tests and diagnostics.
  std::vector<Handle> focal_order() const {
    std::vector<Handle> out;
    for (const auto& k : focal_) out.push_back(handle_of(k));
    return out;
  }

 private:
  struct Entry {
    Payload payload;
    std::int64_t lower;
    std::int64_t cost;
    std::int64_t secondary;
    bool in_focal;
    bool alive;
  };
  using FocalKey = std::tuple<std::int64_t, std::int64_t, std::int64_t>;

  FocalKey focal_key(Handle h) const {
    const auto order = static_cast<std::int64_t>(h);
    return {entries_[h].secondary, entries_[h].cost, tie_ == TieBreak::Fifo ? order : -order};
  }
  Handle handle_of(const FocalKey& k) const {
    const auto order = std::get<2>(k);
    return static_cast<Handle>(tie_ == TieBreak::Fifo ? order : -order);
  }

  void add_to_focal(Handle h) {
    entries_[h].in_focal = true;
    focal_.insert(focal_key(h));
  }

  void remove(Handle h) {
    Entry& e = entries_[h];
    by_lower_.erase({e.lower, h});
    if (e.in_focal) {
      focal_.erase(focal_key(h));
      e.in_focal = false;
    } else {
      pending_.erase({e.cost, h});
    }
    e.alive = false;
    --live_;
  }

  SuboptimalityFactor w_;
  TieBreak tie_;
  std::optional<std::int64_t> fixed_bound_;
  std::optional<std::int64_t> threshold_;
  std::vector<Entry> entries_;
  std::set<std::pair<std::int64_t, Handle>> by_lower_;
  std::set<std::pair<std::int64_t, Handle>> pending_;
  std::set<FocalKey> focal_;
  std::size_t live_ = 0;
};

}  // namespace decbs
