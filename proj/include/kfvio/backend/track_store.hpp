#pragma once

#include <cstdint>
#include <optional>
#include <unordered_map>
#include <vector>

#include "kfvio/geometry/so3.hpp"

namespace kfvio {

/// One keyframe observation of a landmark in the rectified stereo frame:
/// coords = (u_left, u_right, v). Mono observations carry NaN in u_right.
struct TrackObservation {
  std::int64_t kf = -1;
  Vec3 coords = Vec3::Zero();

  bool has_right() const { return coords.y() == coords.y(); }
};

/// Two-stage feature-track memory. Stage 1 is a fixed table of rows (one per
/// live landmark) by age slots; each slot holds a 5-bit keyframe tag and a
/// 12-bit pointer into stage 2, the dense payload table.
class TrackStore {
 public:
  static constexpr int kPointerBits = 12;
  static constexpr int kKfTagBits = 5;

  struct Slot {
    std::uint8_t kf_tag = 0;     // kf id mod 32
    std::uint16_t pointer = 0;   // index into the dense table
    bool live = false;
  };

  explicit TrackStore(int rows = 4000, int age_slots = 10, int dense_capacity = 4000);

  /// Appends an observation to the landmark's track, registering the track on
  /// first use. Throws kCapacity if the dense table, the row table or the
  /// track's age slots are exhausted.
  void insert(std::uint32_t landmark, const TrackObservation& obs);

  /// Frees every payload of the track. Throws kNotFound for unknown ids.
  int evict(std::uint32_t landmark);

  /// Evicts every track with an observation in keyframe `kf`; returns the ids.
  std::vector<std::uint32_t> evict_touching(std::int64_t kf);

  bool contains(std::uint32_t landmark) const { return rows_.count(landmark) != 0; }
  std::vector<TrackObservation> observations(std::uint32_t landmark) const;
  /// Live landmark ids in ascending order.
  std::vector<std::uint32_t> landmarks() const;

  /// Stage-1 slots of a landmark's row (throws kNotFound).
  const std::vector<Slot>& slots(std::uint32_t landmark) const;
  const TrackObservation& payload(std::uint16_t pointer) const;

  int occupancy() const { return dense_capacity_ - static_cast<int>(free_.size()); }
  int track_count() const { return static_cast<int>(rows_.size()); }
  int dense_capacity() const { return dense_capacity_; }
  int age_slots() const { return age_slots_; }
  int row_capacity() const { return row_capacity_; }

  /// Checks that live pointers and the free list partition the dense table.
  bool audit() const;

 private:
  int row_capacity_;
  int age_slots_;
  int dense_capacity_;
  std::unordered_map<std::uint32_t, std::vector<Slot>> rows_;
  std::vector<TrackObservation> dense_;
  std::vector<std::uint16_t> free_;  // LIFO: the most recently freed slot is reused first
};

}  // namespace kfvio
