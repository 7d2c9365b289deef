#include "palmkit/pnn/data.hpp"

#include <algorithm>
#include <string>

#include "palmkit/errors.hpp"

namespace palmkit {

PnnWeights init_weights(const Rng& rng, std::int64_t d,
                        std::vector<std::int64_t> widths) {
  PnnWeights u = PnnWeights::zeros(d, std::move(widths));
  for (std::size_t i = 0; i < 3; ++i) {
    Rng s = rng.stream("T" + std::to_string(i + 1));
    Tensor g = Tensor::matrix(d, u.widths[i]);
    for (std::int64_t j = 0; j < g.size(); ++j) g[j] = s.normal();
    u.T[i] = stiefel_project(g);
  }
  Rng head = rng.stream("T4");
  for (std::int64_t j = 0; j < u.T[3].size(); ++j)
    u.T[3][j] = std::clamp(0.1 * head.normal(), -kPnnBox, kPnnBox);
  return u;
}

namespace {

LabeledBatch draw_split(const Rng& rng, const std::string& name,
                        const Tensor& protos, std::int64_t n, std::int64_t d,
                        double noise_sigma) {
  Rng labels = rng.stream(name + "/labels");
  Rng noise = rng.stream(name + "/noise");
  LabeledBatch out;
  out.inputs = Tensor::matrix(n, d);
  out.targets = Tensor::matrix(n, kPnnClasses);
  for (std::int64_t i = 0; i < n; ++i) {
    const std::int64_t k = labels.uniform_int(kPnnClasses);
    out.targets(i, k) = 1.0;
    for (std::int64_t j = 0; j < d; ++j)
      out.inputs(i, j) = std::clamp(
          protos(k, j) + noise_sigma * noise.normal(), 0.0, 1.0);
  }
  return out;
}

}  // namespace

PnnDataset synthetic_digits(const Rng& rng, std::int64_t n_train,
                            std::int64_t n_test, double noise_sigma) {
  if (n_train < 1 || n_test < 1)
    throw ConfigError("synthetic_digits: need at least one sample per split");
  if (!(noise_sigma >= 0.0))
    throw ConfigError("synthetic_digits: noise_sigma must be nonnegative");
  const std::int64_t d = 64;
  Rng proto_stream = rng.stream("prototypes");
  Tensor protos = Tensor::matrix(kPnnClasses, d);
  for (std::int64_t i = 0; i < protos.size(); ++i)
    protos[i] = proto_stream.uniform();
  PnnDataset out;
  out.train = draw_split(rng, "train", protos, n_train, d, noise_sigma);
  out.test = draw_split(rng, "test", protos, n_test, d, noise_sigma);
  return out;
}

}  // namespace palmkit
