#include "rexnet/user_repr.hpp"

#include "rexnet/errors.hpp"

namespace rexnet {

VectorTable derive_user_vectors(const RatingDataset& train,
                                const UserAverages& averages,
                                const VectorTable& items) {
  VectorTable users(items.dim());
  for (std::size_t u = 0; u < train.user_count(); ++u) {
    const std::string& user = train.user_id(static_cast<int>(u));
    const double lambda = averages.at(user);
    const int row = users.add(user);
    auto dest = users.row(row);
    for (const auto& [item, rating] : train.profile(static_cast<int>(u))) {
      const auto v = items.vector_of(train.item_id(item));
      const float coeff = static_cast<float>(rating - lambda);
      for (int c = 0; c < items.dim(); ++c) dest[c] += coeff * v[c];
    }
  }
  return users;
}

}  // namespace rexnet
