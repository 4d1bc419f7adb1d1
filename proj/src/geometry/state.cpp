#include "kfvio/geometry/state.hpp"

#include "kfvio/core/error.hpp"

namespace kfvio {

using namespace state_index;

KFState retract(const KFState& x, const Vec15& delta) {
  if (!delta.allFinite()) fail(ErrorCode::kInvalidArgument, "retract: non-finite update");
  KFState out;
  out.rotation = x.rotation * so3_exp(delta.segment<3>(kRot));
  out.position = x.position + delta.segment<3>(kPos);
  out.velocity = x.velocity + delta.segment<3>(kVel);
  out.gyro_bias = x.gyro_bias + delta.segment<3>(kGyroBias);
  out.accel_bias = x.accel_bias + delta.segment<3>(kAccelBias);
  return out;
}

Vec15 state_difference(const KFState& from, const KFState& to) {
  Vec15 d;
  d.segment<3>(kRot) = so3_log(from.rotation.transpose() * to.rotation);
  d.segment<3>(kPos) = to.position - from.position;
  d.segment<3>(kVel) = to.velocity - from.velocity;
  d.segment<3>(kGyroBias) = to.gyro_bias - from.gyro_bias;
  d.segment<3>(kAccelBias) = to.accel_bias - from.accel_bias;
  return d;
}

}  // namespace kfvio
