#include "crrl/meta.hpp"

#include <cmath>

#include "crrl/errors.hpp"

namespace crrl {

void check_meta_params(const MetaParams& params) {
  if (params.episodes < 1) throw DomainError("episode count T must be at least 1");
  if (!(params.delta > 0.0 && params.delta < 1.0)) throw DomainError("delta must lie in (0, 1)");
  if (!(params.scale_f > 0.0 && params.scale_f <= 1.0)) throw DomainError("scale_f must lie in (0, 1]");
  if (params.tau < 6) throw DomainError("tau must be at least 6");
}

unsigned max_epochs(std::uint64_t T) {
  unsigned m = 0;
  while (m < 64 && (std::uint64_t{1} << m) < T) ++m;
  return m == 0 ? 1 : m;
}

}  // namespace crrl
