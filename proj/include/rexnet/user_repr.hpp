#pragma once

#include "rexnet/dataset.hpp"
#include "rexnet/vector_table.hpp"

namespace rexnet {

// u_i = sum over the user's TRAIN ratings of (rating - user mean) * item
// vector. Deterministic profile-order summation; throws ValidationError
// naming any item missing from the embedding table.
VectorTable derive_user_vectors(const RatingDataset& train,
                                const UserAverages& averages,
                                const VectorTable& items);

}  // namespace rexnet
