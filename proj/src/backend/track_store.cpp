#include "kfvio/backend/track_store.hpp"

#include <algorithm>
#include <string>

#include "kfvio/core/error.hpp"

namespace kfvio {

TrackStore::TrackStore(int rows, int age_slots, int dense_capacity)
    : row_capacity_(rows), age_slots_(age_slots), dense_capacity_(dense_capacity) {
  if (rows <= 0 || age_slots <= 0 || dense_capacity <= 0 || dense_capacity > (1 << kPointerBits))
    fail(ErrorCode::kInvalidArgument, "TrackStore: invalid geometry");
  dense_.resize(static_cast<std::size_t>(dense_capacity));
  free_.reserve(dense_.size());
  for (int p = dense_capacity - 1; p >= 0; --p) free_.push_back(static_cast<std::uint16_t>(p));
}

void TrackStore::insert(std::uint32_t landmark, const TrackObservation& obs) {
  auto it = rows_.find(landmark);
  if (it == rows_.end()) {
    if (static_cast<int>(rows_.size()) >= row_capacity_)
      fail(ErrorCode::kCapacity, "TrackStore: no free track row");
  } else if (static_cast<int>(it->second.size()) >= age_slots_) {
    fail(ErrorCode::kCapacity, "TrackStore: track " + std::to_string(landmark) + " has no free age slot");
  }
  if (free_.empty()) fail(ErrorCode::kCapacity, "TrackStore: dense stage full");
  if (it == rows_.end()) it = rows_.emplace(landmark, std::vector<Slot>{}).first;

  const std::uint16_t ptr = free_.back();
  free_.pop_back();
  dense_[ptr] = obs;
  it->second.push_back({static_cast<std::uint8_t>(obs.kf & 0x1f), ptr, true});
}

int TrackStore::evict(std::uint32_t landmark) {
  auto it = rows_.find(landmark);
  if (it == rows_.end()) fail(ErrorCode::kNotFound, "TrackStore: unknown landmark " + std::to_string(landmark));
  int freed = 0;
  for (Slot& s : it->second) {
    free_.push_back(s.pointer);
    s.live = false;
    ++freed;
  }
  rows_.erase(it);
  return freed;
}

std::vector<std::uint32_t> TrackStore::evict_touching(std::int64_t kf) {
  std::vector<std::uint32_t> hit;
  for (const auto& [id, row] : rows_) {
    if (std::any_of(row.begin(), row.end(), [&](const Slot& s) { return dense_[s.pointer].kf == kf; }))
      hit.push_back(id);
  }
  std::sort(hit.begin(), hit.end());
  for (std::uint32_t id : hit) evict(id);
  return hit;
}

std::vector<TrackObservation> TrackStore::observations(std::uint32_t landmark) const {
  std::vector<TrackObservation> out;
  for (const Slot& s : slots(landmark)) out.push_back(dense_[s.pointer]);
  return out;
}

std::vector<std::uint32_t> TrackStore::landmarks() const {
  std::vector<std::uint32_t> ids;
  ids.reserve(rows_.size());
  for (const auto& kv : rows_) ids.push_back(kv.first);
  std::sort(ids.begin(), ids.end());
  return ids;
}

const std::vector<TrackStore::Slot>& TrackStore::slots(std::uint32_t landmark) const {
  auto it = rows_.find(landmark);
  if (it == rows_.end()) fail(ErrorCode::kNotFound, "TrackStore: unknown landmark " + std::to_string(landmark));
  return it->second;
}

const TrackObservation& TrackStore::payload(std::uint16_t pointer) const {
  if (pointer >= dense_.size()) fail(ErrorCode::kOutOfRange, "TrackStore: pointer out of range");
  return dense_[pointer];
}

bool TrackStore::audit() const {
  std::vector<int> owner(dense_.size(), 0);
  for (std::uint16_t p : free_) {
    if (p >= dense_.size()) return false;
    ++owner[p];
  }
  for (const auto& kv : rows_) {
    if (static_cast<int>(kv.second.size()) > age_slots_) return false;
    for (const Slot& s : kv.second) {
      if (!s.live || s.pointer >= dense_.size()) return false;
      if (s.kf_tag != (dense_[s.pointer].kf & 0x1f)) return false;
      ++owner[s.pointer];
    }
  }
  return std::all_of(owner.begin(), owner.end(), [](int n) { return n == 1; });
}

}  // namespace kfvio
