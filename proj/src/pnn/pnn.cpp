#include "palmkit/pnn/pnn.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "palmkit/errors.hpp"
#include "palmkit/rng/philox.hpp"

namespace palmkit {

namespace {

constexpr int kLayers = 3;

void check_weights(const PnnWeights& u) {
  if (u.d <= 0) throw ConfigError("pnn: input dimension must be positive");
  if (u.widths.size() != kLayers)
    throw ShapeError("pnn: expected exactly three layer widths");
  if (u.T.size() != kLayers + 1 || u.b.size() != kLayers + 1)
    throw ShapeError("pnn: expected four T and four b tensors");
  for (int i = 0; i < kLayers; ++i) {
    const std::int64_t n = u.widths[static_cast<std::size_t>(i)];
    if (n <= 0 || n > u.d)
      throw ShapeError("pnn: layer width must lie in [1, d]");
    const Tensor& t = u.T[static_cast<std::size_t>(i)];
    if (t.rank() != 2 || t.rows() != u.d || t.cols() != n)
      throw ShapeError("pnn: T" + std::to_string(i + 1) + " must be d x n_i");
    if (u.b[static_cast<std::size_t>(i)].size() != n)
      throw ShapeError("pnn: b" + std::to_string(i + 1) + " must have n_i entries");
  }
  const Tensor& head = u.T[kLayers];
  if (head.rank() != 2 || head.rows() != kPnnClasses || head.cols() != u.d)
    throw ShapeError("pnn: T4 must be classes x d");
  if (u.b[kLayers].size() != kPnnClasses)
    throw ShapeError("pnn: b4 must have one entry per class");
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Per-sample forward storage sized once per batch loop.
struct Workspace {
  std::vector<double> a;   // (kLayers + 1) x d, post-layer states
  std::vector<double> u;   // kLayers x max_width, pre-activations
  std::vector<double> h;   // kLayers x max_width, activations
  std::vector<double> p;   // classes, sigmoid outputs
  std::vector<double> dl;  // classes
  std::vector<double> da;  // d
  std::vector<double> du;  // max_width

  Workspace(std::int64_t d, std::int64_t max_width)
      : a(static_cast<std::size_t>((kLayers + 1) * d)),
        u(static_cast<std::size_t>(kLayers * max_width)),
        h(static_cast<std::size_t>(kLayers * max_width)),
        p(static_cast<std::size_t>(kPnnClasses)),
        dl(static_cast<std::size_t>(kPnnClasses)),
        da(static_cast<std::size_t>(d)),
        du(static_cast<std::size_t>(max_width)) {}
};

// Forward pass for one sample; leaves states in ws and returns the squared
// error against `target` (or just fills ws.p when target is null).
double forward_sample(const PnnWeights& w, const double* x,
                      const double* target, Workspace& ws) {
  const std::int64_t d = w.d;
  const std::int64_t mw =
      *std::max_element(w.widths.begin(), w.widths.end());
  std::copy(x, x + d, ws.a.begin());
  for (int L = 0; L < kLayers; ++L) {
    const std::int64_t n = w.widths[static_cast<std::size_t>(L)];
    const Tensor& t = w.T[static_cast<std::size_t>(L)];
    const double* bias = w.b[static_cast<std::size_t>(L)].data();
    const double* aprev = ws.a.data() + L * d;
    double* uL = ws.u.data() + L * mw;
    double* hL = ws.h.data() + L * mw;
    double* anext = ws.a.data() + (L + 1) * d;
    for (std::int64_t j = 0; j < n; ++j) {
      double acc = bias[j];
      for (std::int64_t r = 0; r < d; ++r) acc += t(r, j) * aprev[r];
      uL[j] = acc;
      hL[j] = elu(acc);
    }
    for (std::int64_t r = 0; r < d; ++r) {
      double acc = 0.0;
      for (std::int64_t j = 0; j < n; ++j) acc += t(r, j) * hL[j];
      anext[r] = acc;
    }
  }
  const Tensor& head = w.T[kLayers];
  const double* bias = w.b[kLayers].data();
  const double* a3 = ws.a.data() + kLayers * d;
  double err = 0.0;
  for (std::int64_t c = 0; c < kPnnClasses; ++c) {
    double acc = bias[c];
    for (std::int64_t r = 0; r < d; ++r) acc += head(c, r) * a3[r];
    ws.p[static_cast<std::size_t>(c)] = sigmoid(acc);
    if (target) {
      const double diff = ws.p[static_cast<std::size_t>(c)] - target[c];
      err += diff * diff;
    }
  }
  return err;
}

// Reverse pass for one sample; adds the unscaled gradient contribution.
void backward_sample(const PnnWeights& w, const double* target, Workspace& ws,
                     PnnWeights& g) {
  const std::int64_t d = w.d;
  const std::int64_t mw =
      *std::max_element(w.widths.begin(), w.widths.end());
  const Tensor& head = w.T[kLayers];
  Tensor& ghead = g.T[kLayers];
  double* gb4 = g.b[kLayers].data();
  const double* a3 = ws.a.data() + kLayers * d;
  for (std::int64_t c = 0; c < kPnnClasses; ++c) {
    const double p = ws.p[static_cast<std::size_t>(c)];
    const double v = 2.0 * (p - target[c]) * p * (1.0 - p);
    ws.dl[static_cast<std::size_t>(c)] = v;
    gb4[c] += v;
    for (std::int64_t r = 0; r < d; ++r) ghead(c, r) += v * a3[r];
  }
  for (std::int64_t r = 0; r < d; ++r) {
    double acc = 0.0;
    for (std::int64_t c = 0; c < kPnnClasses; ++c)
      acc += head(c, r) * ws.dl[static_cast<std::size_t>(c)];
    ws.da[static_cast<std::size_t>(r)] = acc;
  }
  for (int L = kLayers - 1; L >= 0; --L) {
    const std::int64_t n = w.widths[static_cast<std::size_t>(L)];
    const Tensor& t = w.T[static_cast<std::size_t>(L)];
    Tensor& gt = g.T[static_cast<std::size_t>(L)];
    double* gb = g.b[static_cast<std::size_t>(L)].data();
    const double* aprev = ws.a.data() + L * d;
    const double* uL = ws.u.data() + L * mw;
    const double* hL = ws.h.data() + L * mw;
    // du = elu'(u) .* (T^T da); both T occurrences contribute to gT
    for (std::int64_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::int64_t r = 0; r < d; ++r)
        acc += t(r, j) * ws.da[static_cast<std::size_t>(r)];
      const double duj = acc * elu_prime(uL[j]);
      ws.du[static_cast<std::size_t>(j)] = duj;
      gb[j] += duj;
    }
    for (std::int64_t r = 0; r < d; ++r) {
      const double dar = ws.da[static_cast<std::size_t>(r)];
      const double ar = aprev[r];
      double acc = 0.0;
      for (std::int64_t j = 0; j < n; ++j) {
        const double duj = ws.du[static_cast<std::size_t>(j)];
        gt(r, j) += dar * hL[j] + ar * duj;
        acc += t(r, j) * duj;
      }
      // da for the next (shallower) layer; safe to overwrite da[r] only
      // after the row above is done with it
      ws.da[static_cast<std::size_t>(r)] = acc;
    }
  }
}

// Projection with the documented singular-input fallback: perturb by 1e-6
// Gaussian noise (fixed stream, deterministic) and retry once.
Tensor project_with_retry(const Tensor& a) {
  try {
    return stiefel_project(a);
  } catch (const SingularProjectionError&) {
    Rng noise(0x57f1e7u, "stiefel/retry");
    Tensor jig = a;
    for (std::int64_t i = 0; i < jig.size(); ++i)
      jig[i] += 1e-6 * noise.normal();
    return stiefel_project(jig);
  }
}

}  // namespace

double elu(double x) { return x < 0.0 ? std::expm1(x) : x; }
double elu_prime(double x) { return x < 0.0 ? std::exp(x) : 1.0; }

PnnWeights PnnWeights::zeros(std::int64_t d, std::vector<std::int64_t> widths) {
  PnnWeights u;
  u.d = d;
  u.widths = std::move(widths);
  if (u.widths.size() != kLayers)
    throw ShapeError("pnn: expected exactly three layer widths");
  for (int i = 0; i < kLayers; ++i) {
    u.T.push_back(Tensor::matrix(d, u.widths[static_cast<std::size_t>(i)]));
    u.b.push_back(Tensor::vector(u.widths[static_cast<std::size_t>(i)]));
  }
  u.T.push_back(Tensor::matrix(kPnnClasses, d));
  u.b.push_back(Tensor::vector(kPnnClasses));
  check_weights(u);
  return u;
}

Tensor pnn_core(const PnnWeights& u, const Tensor& x) {
  check_weights(u);
  if (x.size() != u.d) throw ShapeError("pnn: input size must equal d");
  const std::int64_t mw =
      *std::max_element(u.widths.begin(), u.widths.end());
  Workspace ws(u.d, mw);
  forward_sample(u, x.data(), nullptr, ws);
  Tensor out = Tensor::vector(u.d);
  std::copy(ws.a.data() + kLayers * u.d, ws.a.data() + (kLayers + 1) * u.d,
            out.data());
  return out;
}

Tensor pnn_forward(const PnnWeights& u, const Tensor& x) {
  check_weights(u);
  if (x.size() != u.d) throw ShapeError("pnn: input size must equal d");
  const std::int64_t mw =
      *std::max_element(u.widths.begin(), u.widths.end());
  Workspace ws(u.d, mw);
  forward_sample(u, x.data(), nullptr, ws);
  Tensor out = Tensor::vector(kPnnClasses);
  std::copy(ws.p.begin(), ws.p.end(), out.data());
  return out;
}

double pnn_loss_grad(const PnnWeights& u, const LabeledBatch& data,
                     std::span<const std::int64_t> batch, PnnWeights* grad) {
  check_weights(u);
  const std::int64_t m = data.inputs.rows();
  if (data.inputs.rank() != 2 || data.inputs.cols() != u.d)
    throw ShapeError("pnn: inputs must be m x d");
  if (data.targets.rank() != 2 || data.targets.rows() != m ||
      data.targets.cols() != kPnnClasses)
    throw ShapeError("pnn: targets must be m x classes");
  if (batch.empty()) throw ConfigError("pnn: batch must be nonempty");
  for (const std::int64_t i : batch)
    if (i < 0 || i >= m) throw ConfigError("pnn: batch index out of range");

  const std::int64_t mw =
      *std::max_element(u.widths.begin(), u.widths.end());
  Workspace ws(u.d, mw);
  if (grad) *grad = PnnWeights::zeros(u.d, u.widths);
  double loss = 0.0;
  for (const std::int64_t i : batch) {
    const double* x = data.inputs.data() + i * u.d;
    const double* y = data.targets.data() + i * kPnnClasses;
    loss += forward_sample(u, x, y, ws);
    if (grad) backward_sample(u, y, ws, *grad);
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  if (grad) {
    for (Tensor& t : grad->T)
      for (std::int64_t i = 0; i < t.size(); ++i) t[i] *= inv;
    for (Tensor& t : grad->b)
      for (std::int64_t i = 0; i < t.size(); ++i) t[i] *= inv;
  }
  return loss * inv;
}

Tensor stiefel_project(const Tensor& a, double tol, int max_iter) {
  if (a.rank() != 2) throw ShapeError("stiefel: expected a matrix");
  const std::int64_t d = a.rows(), n = a.cols();
  if (n > d) throw ShapeError("stiefel: need cols <= rows");
  if (tol <= 0.0 || max_iter < 1)
    throw ConfigError("stiefel: tol and max_iter must be positive");

  {
    const SymEigen e = sym_eigen(matmul_tn(a, a));
    const double lam_min = e.values[n - 1];
    if (!(lam_min > 0.0) || std::sqrt(lam_min) < 1e-8)
      throw SingularProjectionError(
          "stiefel: input is numerically singular (smallest singular value "
          "below 1e-8)");
  }

  const auto ortho_error = [n](const Tensor& gram) {
    double acc = 0.0;
    for (std::int64_t r = 0; r < n; ++r)
      for (std::int64_t c = 0; c < n; ++c) {
        const double v = gram(r, c) - (r == c ? 1.0 : 0.0);
        acc += v * v;
      }
    return std::sqrt(acc);
  };

  Tensor y = a;
  std::vector<double> row(static_cast<std::size_t>(n));
  for (int it = 0; it <= max_iter; ++it) {
    Tensor gram = matmul_tn(y, y);
    if (ortho_error(gram) <= tol) return y;
    if (it == max_iter) break;
    for (std::int64_t r = 0; r < n; ++r) gram(r, r) += 1.0;
    const SpdFactor f = cholesky_spd(gram);
    Tensor next = Tensor::matrix(d, n);
    for (std::int64_t r = 0; r < d; ++r) {
      for (std::int64_t c = 0; c < n; ++c)
        row[static_cast<std::size_t>(c)] = y(r, c);
      solve_lower_inplace(f, row.data());
      solve_lower_t_inplace(f, row.data());
      for (std::int64_t c = 0; c < n; ++c)
        next(r, c) = 2.0 * row[static_cast<std::size_t>(c)];
    }
    y = std::move(next);
  }
  if (ortho_error(matmul_tn(y, y)) <= 10.0 * tol) return y;
  throw NumericalError("stiefel: projection did not converge");
}

PnnWeights pnn_prox(const PnnWeights& u, double tau) {
  (void)tau;  // prox of an indicator is the plain projection
  check_weights(u);
  PnnWeights out = u;
  for (int i = 0; i < kLayers; ++i)
    out.T[static_cast<std::size_t>(i)] =
        project_with_retry(u.T[static_cast<std::size_t>(i)]);
  Tensor& head = out.T[kLayers];
  for (std::int64_t i = 0; i < head.size(); ++i)
    head[i] = std::clamp(head[i], -kPnnBox, kPnnBox);
  return out;
}

BlockVec pnn_to_blockvec(const PnnWeights& u) {
  check_weights(u);
  BlockVec x;
  for (int i = 0; i < kLayers + 1; ++i)
    x.add_block("T" + std::to_string(i + 1),
                u.T[static_cast<std::size_t>(i)]);
  for (int i = 0; i < kLayers + 1; ++i)
    x.add_block("b" + std::to_string(i + 1),
                u.b[static_cast<std::size_t>(i)]);
  return x;
}

PnnWeights pnn_from_blockvec(const BlockVec& x) {
  if (x.block_count() != 2 * (kLayers + 1))
    throw ShapeError("pnn: expected eight blocks");
  PnnWeights u;
  u.d = x.value(0).rows();
  for (int i = 0; i < kLayers; ++i)
    u.widths.push_back(x.value(static_cast<std::size_t>(i)).cols());
  for (int i = 0; i < kLayers + 1; ++i)
    u.T.push_back(x.value(static_cast<std::size_t>(i)));
  for (int i = 0; i < kLayers + 1; ++i)
    u.b.push_back(x.value(static_cast<std::size_t>(kLayers + 1 + i)));
  check_weights(u);
  return u;
}

std::vector<ProxOp> pnn_prox_ops() {
  ProxOp stiefel;
  stiefel.is_identity = false;
  stiefel.apply = [](const Tensor& v, double) { return project_with_retry(v); };
  stiefel.value = [](const Tensor&) { return 0.0; };

  std::vector<ProxOp> ops;
  for (int i = 0; i < kLayers; ++i) ops.push_back(stiefel);
  ops.push_back(box_prox(-kPnnBox, kPnnBox));
  for (int i = 0; i < kLayers + 1; ++i) ops.push_back(identity_prox());
  return ops;
}

PnnProblem::PnnProblem(LabeledBatch data, std::int64_t d,
                       std::vector<std::int64_t> widths)
    : data_(std::move(data)), d_(d), widths_(std::move(widths)) {
  if (d_ <= 0) throw ConfigError("pnn: input dimension must be positive");
  if (widths_.size() != kLayers)
    throw ShapeError("pnn: expected exactly three layer widths");
  for (const std::int64_t n : widths_)
    if (n <= 0 || n > d_) throw ShapeError("pnn: layer width must lie in [1, d]");
  if (data_.inputs.rank() != 2 || data_.inputs.cols() != d_)
    throw ShapeError("pnn: inputs must be m x d");
  const std::int64_t m = data_.inputs.rows();
  if (m < 1) throw ConfigError("pnn: need at least one sample");
  if (data_.targets.rank() != 2 || data_.targets.rows() != m ||
      data_.targets.cols() != kPnnClasses)
    throw ShapeError("pnn: targets must be m x classes");
  for (std::int64_t i = 0; i < m; ++i) {
    double sum = 0.0;
    for (std::int64_t c = 0; c < kPnnClasses; ++c) {
      const double v = data_.targets(i, c);
      if (v != 0.0 && v != 1.0)
        throw ConfigError("pnn: targets must be one-hot");
      sum += v;
    }
    if (sum != 1.0) throw ConfigError("pnn: targets must be one-hot");
  }
  for (int i = 0; i < kLayers; ++i)
    specs_.push_back({"T" + std::to_string(i + 1),
                      {d_, widths_[static_cast<std::size_t>(i)]},
                      false});
  specs_.push_back({"T4", {kPnnClasses, d_}, false});
  for (int i = 0; i < kLayers; ++i)
    specs_.push_back({"b" + std::to_string(i + 1),
                      {widths_[static_cast<std::size_t>(i)]},
                      false});
  specs_.push_back({"b4", {kPnnClasses}, false});
}

double PnnProblem::eval_batch(const BlockVec& point,
                              std::span<const std::int64_t> batch) const {
  return pnn_loss_grad(pnn_from_blockvec(point), data_, batch, nullptr);
}

Tensor PnnProblem::grad_block_batch(const BlockVec& point, std::size_t block,
                                    std::span<const std::int64_t> batch) const {
  if (block >= 2 * (kLayers + 1))
    throw ShapeError("pnn: block index out of range");
  PnnWeights g;
  pnn_loss_grad(pnn_from_blockvec(point), data_, batch, &g);
  if (block <= kLayers) return g.T[block];
  return g.b[block - (kLayers + 1)];
}

BlockVec PnnProblem::grad_all_batch(const BlockVec& point,
                                    std::span<const std::int64_t> batch) const {
  PnnWeights g;
  pnn_loss_grad(pnn_from_blockvec(point), data_, batch, &g);
  return pnn_to_blockvec(g);
}

double PnnProblem::eval_with_grad_all(const BlockVec& point,
                                      std::span<const std::int64_t> batch,
                                      BlockVec& grad_out) const {
  PnnWeights g;
  const double loss = pnn_loss_grad(pnn_from_blockvec(point), data_, batch, &g);
  grad_out = pnn_to_blockvec(g);
  return loss;
}

double pnn_accuracy(const PnnWeights& u, const LabeledBatch& data) {
  check_weights(u);
  const std::int64_t m = data.inputs.rows();
  if (m < 1) throw ConfigError("pnn: need at least one sample");
  const std::int64_t mw =
      *std::max_element(u.widths.begin(), u.widths.end());
  Workspace ws(u.d, mw);
  std::int64_t hits = 0;
  for (std::int64_t i = 0; i < m; ++i) {
    forward_sample(u, data.inputs.data() + i * u.d, nullptr, ws);
    std::int64_t best = 0, want = 0;
    for (std::int64_t c = 1; c < kPnnClasses; ++c) {
      if (ws.p[static_cast<std::size_t>(c)] >
          ws.p[static_cast<std::size_t>(best)])
        best = c;
      if (data.targets(i, c) > data.targets(i, want)) want = c;
    }
    if (best == want) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(m);
}

}  // namespace palmkit
