#include "palmkit/problem/quadratic.hpp"

#include "palmkit/errors.hpp"

namespace palmkit {

BlockVec FiniteSumProblem::grad_all_batch(
    const BlockVec& point, std::span<const std::int64_t> batch) const {
  BlockVec out;
  const auto& specs = block_specs();
  for (std::size_t j = 0; j < specs.size(); ++j)
    out.add_block(specs[j].name, grad_block_batch(point, j, batch));
  return out;
}

double FiniteSumProblem::eval_with_grad_all(const BlockVec& point,
                                            std::span<const std::int64_t> batch,
                                            BlockVec& grad_out) const {
  grad_out = grad_all_batch(point, batch);
  return eval_batch(point, batch);
}

BlockVec FiniteSumProblem::make_point() const {
  BlockVec out;
  for (const BlockSpec& s : block_specs()) out.add_block(s.name, Tensor(s.shape));
  return out;
}

std::vector<std::int64_t> all_indices(std::int64_t n) {
  std::vector<std::int64_t> idx(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
  return idx;
}

QuadraticFiniteSum::QuadraticFiniteSum(std::int64_t n,
                                       const std::vector<std::int64_t>& sizes,
                                       std::uint64_t seed, double spread)
    : n_(n) {
  if (n <= 0) throw ConfigError("QuadraticFiniteSum: n must be positive");
  Rng root(seed, "quadratic");
  for (std::size_t j = 0; j < sizes.size(); ++j) {
    BlockSpec spec;
    spec.name = "q" + std::to_string(j);
    spec.shape = {sizes[j]};
    specs_.push_back(spec);
    Rng rc = root.stream("curv" + std::to_string(j));
    Rng rz = root.stream("cent" + std::to_string(j));
    Tensor curv = Tensor::matrix(n, sizes[j]);
    Tensor cent = Tensor::matrix(n, sizes[j]);
    for (std::int64_t i = 0; i < curv.size(); ++i) {
      curv[i] = 0.5 + 2.0 * rc.uniform();
      cent[i] = spread * rz.normal();
    }
    curv_.push_back(std::move(curv));
    cent_.push_back(std::move(cent));
  }
}

double QuadraticFiniteSum::eval_batch(
    const BlockVec& point, std::span<const std::int64_t> batch) const {
  if (batch.empty()) throw ConfigError("eval_batch: empty batch");
  double acc = 0.0;
  for (std::int64_t i : batch) {
    double hi = 0.0;
    for (std::size_t j = 0; j < specs_.size(); ++j) {
      const Tensor& x = point.value(j);
      const std::int64_t m = x.size();
      for (std::int64_t k = 0; k < m; ++k) {
        const double r = x[k] - cent_[j](i, k);
        hi += 0.5 * curv_[j](i, k) * r * r;
      }
    }
    acc += hi;
  }
  return acc / static_cast<double>(batch.size());
}

Tensor QuadraticFiniteSum::grad_block_batch(
    const BlockVec& point, std::size_t block,
    std::span<const std::int64_t> batch) const {
  if (batch.empty()) throw ConfigError("grad_block_batch: empty batch");
  const Tensor& x = point.value(block);
  Tensor g(x.shape());
  const std::int64_t m = x.size();
  for (std::int64_t i : batch) {
    for (std::int64_t k = 0; k < m; ++k)
      g[k] += curv_[block](i, k) * (x[k] - cent_[block](i, k));
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  for (std::int64_t k = 0; k < m; ++k) g[k] *= inv;
  return g;
}

BlockVec QuadraticFiniteSum::minimizer() const {
  BlockVec out;
  for (std::size_t j = 0; j < specs_.size(); ++j) {
    Tensor x(specs_[j].shape);
    for (std::int64_t k = 0; k < x.size(); ++k) {
      double num = 0.0, den = 0.0;
      for (std::int64_t i = 0; i < n_; ++i) {
        num += curv_[j](i, k) * cent_[j](i, k);
        den += curv_[j](i, k);
      }
      x[k] = num / den;
    }
    out.add_block(specs_[j].name, std::move(x));
  }
  return out;
}

double QuadraticFiniteSum::min_value() const {
  return eval_batch(minimizer(), all_indices(n_));
}

double QuadraticFiniteSum::block_lipschitz(std::size_t block) const {
  double best = 0.0;
  const std::int64_t m = specs_[block].shape[0];
  for (std::int64_t k = 0; k < m; ++k) {
    double mean = 0.0;
    for (std::int64_t i = 0; i < n_; ++i) mean += curv_[block](i, k);
    mean /= static_cast<double>(n_);
    best = std::max(best, mean);
  }
  return best;
}

double QuadraticFiniteSum::curvature(std::int64_t i, std::size_t block,
                                     std::int64_t k) const {
  return curv_[block](i, k);
}

double QuadraticFiniteSum::center(std::int64_t i, std::size_t block,
                                  std::int64_t k) const {
  return cent_[block](i, k);
}

}  // namespace palmkit
