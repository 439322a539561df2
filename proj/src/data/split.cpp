#include <cmath>
#include <numeric>

#include "mlet/data/dataset.hpp"
#include "mlet/error.hpp"
#include "mlet/linalg/rng.hpp"

namespace mlet {

namespace {

std::vector<std::size_t> permutation(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  return order;
}

}  // namespace

SplitIndices split_indices(std::size_t n, const SplitSpec& spec) {
  if (n == 0) throw Error(ErrorKind::kInvalidArgument, "split: empty dataset");
  if (!(spec.train > 0.0 && spec.val > 0.0 && spec.test > 0.0) ||
      std::abs(spec.train + spec.val + spec.test - 1.0) > 1e-9) {
    throw Error(ErrorKind::kInvalidArgument, "split fractions must be positive and sum to 1");
  }
  const auto n_train = static_cast<std::size_t>(std::llround(spec.train * static_cast<double>(n)));
  const auto n_val = static_cast<std::size_t>(std::llround(spec.val * static_cast<double>(n)));
  if (n_train == 0 || n_val == 0 || n_train + n_val >= n) {
    throw Error(ErrorKind::kInvalidArgument,
                "split of " + std::to_string(n) + " examples leaves an empty partition");
  }
  std::vector<std::size_t> order;
  if (spec.mode == SplitMode::kRandom) {
    order = permutation(n, spec.seed);
  } else {
    order.resize(n);
    std::iota(order.begin(), order.end(), 0);
  }
  SplitIndices out;
  const auto mid = order.begin() + static_cast<std::ptrdiff_t>(n_train);
  const auto tail = mid + static_cast<std::ptrdiff_t>(n_val);
  out.train.assign(order.begin(), mid);
  out.val.assign(mid, tail);
  out.test.assign(tail, order.end());
  return out;
}

Splits split(const Dataset& ds, const SplitSpec& spec) {
  const SplitIndices idx = split_indices(ds.size(), spec);
  return Splits{subset(ds, idx.train), subset(ds, idx.val), subset(ds, idx.test)};
}

BatchIterator::BatchIterator(const Dataset& ds, std::size_t batch_size,
                             std::optional<std::uint64_t> order_seed)
    : ds_(&ds), batch_size_(batch_size) {
  if (batch_size == 0) throw Error(ErrorKind::kInvalidArgument, "batch size must be >= 1");
  if (order_seed) {
    order_ = permutation(ds.size(), *order_seed);
  } else {
    order_.resize(ds.size());
    std::iota(order_.begin(), order_.end(), 0);
  }
}

std::span<const std::size_t> BatchIterator::peek_ids() const {
  const std::size_t count = std::min(batch_size_, order_.size() - cursor_);
  return std::span<const std::size_t>(order_).subspan(cursor_, count);
}

bool BatchIterator::next(MiniBatch& out) {
  const auto ids = peek_ids();
  if (ids.empty()) return false;
  out = make_batch(*ds_, ids);
  cursor_ += ids.size();
  return true;
}

std::size_t BatchIterator::batches_per_epoch() const noexcept {
  return (order_.size() + batch_size_ - 1) / batch_size_;
}

}  // namespace mlet
