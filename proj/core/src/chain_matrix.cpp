#include "chainlab/chain_matrix.hpp"

#include <algorithm>
#include <set>

#include "chainlab/errors.hpp"

namespace chainlab {

DrawMatrix::DrawMatrix(std::size_t chains, std::size_t iterations)
    : chains_(chains), iterations_(iterations), values_(chains * iterations, 0.0) {}

DrawMatrix::DrawMatrix(std::size_t chains, std::size_t iterations, std::vector<double> values)
    : chains_(chains), iterations_(iterations), values_(std::move(values)) {
  if (values_.size() != chains_ * iterations_) {
    throw InvalidArgument("DrawMatrix: value count does not match shape");
  }
}

DrawMatrix DrawMatrix::from_rows(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) return {};
  const std::size_t n = rows.front().size();
  std::vector<double> values;
  values.reserve(rows.size() * n);
  for (const auto& r : rows) {
    if (r.size() != n) throw InvalidArgument("DrawMatrix: chains must have equal length");
    values.insert(values.end(), r.begin(), r.end());
  }
  return DrawMatrix(rows.size(), n, std::move(values));
}

ChainMatrix::ChainMatrix(std::size_t chains, std::size_t warmup, std::size_t sampling,
                         std::size_t dimension, std::vector<std::size_t> group_of_chain)
    : chains_(chains),
      warmup_(warmup),
      sampling_(sampling),
      dimension_(dimension),
      draws_(chains * (warmup + sampling) * dimension, 0.0),
      group_of_chain_(std::move(group_of_chain)),
      metadata_(chains) {
  if (group_of_chain_.empty()) group_of_chain_.assign(chains, 0);
  if (group_of_chain_.size() != chains) {
    throw InvalidArgument("ChainMatrix: one group id per chain required");
  }
}

std::size_t ChainMatrix::groups() const {
  return std::set<std::size_t>(group_of_chain_.begin(), group_of_chain_.end()).size();
}

DrawMatrix ChainMatrix::sampling_values(const std::function<double(std::span<const double>)>& f) const {
  DrawMatrix out(chains_, sampling_);
  for (std::size_t m = 0; m < chains_; ++m) {
    for (std::size_t n = 0; n < sampling_; ++n) out(m, n) = f(draw(m, warmup_ + n));
  }
  return out;
}

}  // namespace chainlab
