#include "edkit/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace edkit {

namespace {

int64_t numel(const std::vector<int>& shape) {
  int64_t n = 1;
  for (int d : shape) {
    if (d < 0) throw std::invalid_argument("tensor: negative dimension in " + shape_str(shape));
    n *= d;
  }
  return n;
}

double gelu_exact(double x) {
  return 0.5 * x * (1.0 + std::erf(x / std::sqrt(2.0)));
}

double gelu_grad(double x) {
  constexpr double inv_sqrt_2pi = 0.3989422804014327;
  double cdf = 0.5 * (1.0 + std::erf(x / std::sqrt(2.0)));
  double pdf = inv_sqrt_2pi * std::exp(-0.5 * x * x);
  return cdf + x * pdf;
}

}  // namespace

std::string shape_str(const std::vector<int>& shape) {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) os << "x";
    os << shape[i];
  }
  os << "]";
  return os.str();
}

Tensor Tensor::zeros(std::vector<int> shape) {
  auto impl = std::make_shared<Impl>();
  int64_t n = numel(shape);
  impl->shape = std::move(shape);
  impl->data.assign(static_cast<size_t>(n), 0.0f);
  return Tensor(std::move(impl));
}

Tensor Tensor::full(std::vector<int> shape, float value) {
  Tensor t = zeros(std::move(shape));
  std::fill(t.impl_->data.begin(), t.impl_->data.end(), value);
  return t;
}

Tensor Tensor::from_data(std::vector<int> shape, std::vector<float> data) {
  if (numel(shape) != static_cast<int64_t>(data.size())) {
    throw std::invalid_argument("tensor: " + shape_str(shape) + " does not hold " +
                                std::to_string(data.size()) + " values");
  }
  auto impl = std::make_shared<Impl>();
  impl->shape = std::move(shape);
  impl->data = std::move(data);
  return Tensor(std::move(impl));
}

Tensor Tensor::scalar(float value) { return from_data({1}, {value}); }

const std::vector<int>& Tensor::shape() const { return impl_->shape; }
int Tensor::rank() const { return static_cast<int>(impl_->shape.size()); }
int Tensor::dim(int i) const { return impl_->shape.at(static_cast<size_t>(i)); }
int64_t Tensor::size() const { return static_cast<int64_t>(impl_->data.size()); }

float* Tensor::data() { return impl_->data.data(); }
const float* Tensor::data() const { return impl_->data.data(); }

float& Tensor::at(int i) { return impl_->data.at(static_cast<size_t>(i)); }
float& Tensor::at(int i, int j) {
  return impl_->data.at(static_cast<size_t>(i) * impl_->shape.at(1) + j);
}
float Tensor::at(int i) const { return impl_->data.at(static_cast<size_t>(i)); }
float Tensor::at(int i, int j) const {
  return impl_->data.at(static_cast<size_t>(i) * impl_->shape.at(1) + j);
}

bool Tensor::has_grad() const { return impl_ && !impl_->grad.empty(); }

float* Tensor::grad() {
  ensure_grad();
  return impl_->grad.data();
}

const float* Tensor::grad() const {
  return impl_->grad.empty() ? nullptr : impl_->grad.data();
}

void Tensor::ensure_grad() {
  if (impl_->grad.empty()) impl_->grad.assign(impl_->data.size(), 0.0f);
}

void Tensor::zero_grad() {
  std::fill(impl_->grad.begin(), impl_->grad.end(), 0.0f);
}

bool Tensor::requires_grad() const { return impl_ && impl_->requires_grad; }
void Tensor::set_requires_grad(bool value) { impl_->requires_grad = value; }

std::vector<float> Tensor::to_vector() const { return impl_->data; }

void Tape::record(Tensor& out, std::initializer_list<Tensor> inputs,
                  std::function<void()> fn) {
  if (!grad_enabled_) return;
  bool needed = false;
  for (const Tensor& in : inputs) needed = needed || in.requires_grad();
  if (!needed) return;
  out.set_requires_grad(true);
  nodes_.push_back({std::move(fn)});
}

void Tape::backward(const Tensor& loss) {
  if (loss.size() != 1) {
    throw std::invalid_argument("backward: loss must hold a single value, got " +
                                shape_str(loss.shape()));
  }
  Tensor seed = loss;
  seed.ensure_grad();
  seed.grad()[0] += 1.0f;
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    it->backprop();
  }
}

Tensor Tape::matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
    throw std::invalid_argument("matmul: incompatible shapes " + shape_str(a.shape()) +
                                " and " + shape_str(b.shape()));
  }
  const int m = a.dim(0), k = a.dim(1), n = b.dim(1);
  Tensor out = Tensor::zeros({m, n});
  const float* pa = a.data();
  const float* pb = b.data();
  float* po = out.data();
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      double acc = 0.0;
      for (int l = 0; l < k; ++l) acc += double(pa[i * k + l]) * double(pb[l * n + j]);
      po[i * n + j] = static_cast<float>(acc);
    }
  }
  record(out, {a, b}, [a = a, b = b, out]() mutable {
    if (!out.has_grad()) return;
    const int m = a.dim(0), k = a.dim(1), n = b.dim(1);
    const float* go = out.grad();
    if (a.requires_grad()) {
      float* ga = a.grad();
      const float* pb = b.data();
      for (int i = 0; i < m; ++i)
        for (int l = 0; l < k; ++l) {
          double acc = 0.0;
          for (int j = 0; j < n; ++j) acc += double(go[i * n + j]) * double(pb[l * n + j]);
          ga[i * k + l] += static_cast<float>(acc);
        }
    }
    if (b.requires_grad()) {
      float* gb = b.grad();
      const float* pa = a.data();
      for (int l = 0; l < k; ++l)
        for (int j = 0; j < n; ++j) {
          double acc = 0.0;
          for (int i = 0; i < m; ++i) acc += double(pa[i * k + l]) * double(go[i * n + j]);
          gb[l * n + j] += static_cast<float>(acc);
        }
    }
  });
  return out;
}

Tensor Tape::matmul_nt(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(1)) {
    throw std::invalid_argument("matmul_nt: incompatible shapes " + shape_str(a.shape()) +
                                " and " + shape_str(b.shape()));
  }
  const int m = a.dim(0), k = a.dim(1), n = b.dim(0);
  Tensor out = Tensor::zeros({m, n});
  const float* pa = a.data();
  const float* pb = b.data();
  float* po = out.data();
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      double acc = 0.0;
      for (int l = 0; l < k; ++l) acc += double(pa[i * k + l]) * double(pb[j * k + l]);
      po[i * n + j] = static_cast<float>(acc);
    }
  }
  record(out, {a, b}, [a = a, b = b, out]() mutable {
    if (!out.has_grad()) return;
    const int m = a.dim(0), k = a.dim(1), n = b.dim(0);
    const float* go = out.grad();
    if (a.requires_grad()) {
      float* ga = a.grad();
      const float* pb = b.data();
      for (int i = 0; i < m; ++i)
        for (int l = 0; l < k; ++l) {
          double acc = 0.0;
          for (int j = 0; j < n; ++j) acc += double(go[i * n + j]) * double(pb[j * k + l]);
          ga[i * k + l] += static_cast<float>(acc);
        }
    }
    if (b.requires_grad()) {
      float* gb = b.grad();
      const float* pa = a.data();
      for (int j = 0; j < n; ++j)
        for (int l = 0; l < k; ++l) {
          double acc = 0.0;
          for (int i = 0; i < m; ++i) acc += double(go[i * n + j]) * double(pa[i * k + l]);
          gb[j * k + l] += static_cast<float>(acc);
        }
    }
  });
  return out;
}

Tensor Tape::add(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw std::invalid_argument("add: shape mismatch " + shape_str(a.shape()) + " vs " +
                                shape_str(b.shape()));
  }
  Tensor out = Tensor::zeros(a.shape());
  const float* pa = a.data();
  const float* pb = b.data();
  float* po = out.data();
  for (int64_t i = 0; i < a.size(); ++i) po[i] = pa[i] + pb[i];
  record(out, {a, b}, [a = a, b = b, out]() mutable {
    if (!out.has_grad()) return;
    const float* go = out.grad();
    if (a.requires_grad()) {
      float* ga = a.grad();
      for (int64_t i = 0; i < a.size(); ++i) ga[i] += go[i];
    }
    if (b.requires_grad()) {
      float* gb = b.grad();
      for (int64_t i = 0; i < b.size(); ++i) gb[i] += go[i];
    }
  });
  return out;
}

Tensor Tape::add_row_bias(const Tensor& x, const Tensor& bias) {
  if (x.rank() != 2 || bias.rank() != 1 || x.dim(1) != bias.dim(0)) {
    throw std::invalid_argument("add_row_bias: shape mismatch " + shape_str(x.shape()) +
                                " vs " + shape_str(bias.shape()));
  }
  const int n = x.dim(0), d = x.dim(1);
  Tensor out = Tensor::zeros({n, d});
  const float* px = x.data();
  const float* pb = bias.data();
  float* po = out.data();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) po[i * d + j] = px[i * d + j] + pb[j];
  record(out, {x, bias}, [x = x, bias = bias, out]() mutable {
    if (!out.has_grad()) return;
    const int n = x.dim(0), d = x.dim(1);
    const float* go = out.grad();
    if (x.requires_grad()) {
      float* gx = x.grad();
      for (int64_t i = 0; i < x.size(); ++i) gx[i] += go[i];
    }
    if (bias.requires_grad()) {
      float* gb = bias.grad();
      for (int j = 0; j < d; ++j) {
        double acc = 0.0;
        for (int i = 0; i < n; ++i) acc += double(go[i * d + j]);
        gb[j] += static_cast<float>(acc);
      }
    }
  });
  return out;
}

Tensor Tape::scale(const Tensor& x, float c) {
  Tensor out = Tensor::zeros(x.shape());
  const float* px = x.data();
  float* po = out.data();
  for (int64_t i = 0; i < x.size(); ++i) po[i] = px[i] * c;
  record(out, {x}, [x = x, out, c]() mutable {
    if (!out.has_grad() || !x.requires_grad()) return;
    const float* go = out.grad();
    float* gx = x.grad();
    for (int64_t i = 0; i < x.size(); ++i) gx[i] += go[i] * c;
  });
  return out;
}

Tensor Tape::gelu(const Tensor& x) {
  Tensor out = Tensor::zeros(x.shape());
  const float* px = x.data();
  float* po = out.data();
  for (int64_t i = 0; i < x.size(); ++i) po[i] = static_cast<float>(gelu_exact(px[i]));
  record(out, {x}, [x = x, out]() mutable {
    if (!out.has_grad() || !x.requires_grad()) return;
    const float* go = out.grad();
    const float* px = x.data();
    float* gx = x.grad();
    for (int64_t i = 0; i < x.size(); ++i)
      gx[i] += static_cast<float>(double(go[i]) * gelu_grad(px[i]));
  });
  return out;
}

Tensor Tape::softmax_rows(const Tensor& x) {
  if (x.rank() < 1 || x.rank() > 2) {
    throw std::invalid_argument("softmax: expected rank 1 or 2, got " + shape_str(x.shape()));
  }
  const int n = x.rank() == 2 ? x.dim(0) : 1;
  const int d = x.rank() == 2 ? x.dim(1) : x.dim(0);
  if (d < 1) throw std::invalid_argument("softmax: empty row in " + shape_str(x.shape()));
  const float* px = x.data();
  for (int64_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(px[i])) throw std::domain_error("softmax: non-finite input");
  }
  Tensor out = Tensor::zeros(x.shape());
  float* po = out.data();
  for (int i = 0; i < n; ++i) {
    const float* row = px + int64_t(i) * d;
    float mx = row[0];
    for (int j = 1; j < d; ++j) mx = std::max(mx, row[j]);
    double sum = 0.0;
    for (int j = 0; j < d; ++j) sum += std::exp(double(row[j]) - double(mx));
    for (int j = 0; j < d; ++j)
      po[int64_t(i) * d + j] = static_cast<float>(std::exp(double(row[j]) - double(mx)) / sum);
  }
  record(out, {x}, [x = x, out, n, d]() mutable {
    if (!out.has_grad() || !x.requires_grad()) return;
    const float* go = out.grad();
    const float* py = out.data();
    float* gx = x.grad();
    for (int i = 0; i < n; ++i) {
      const float* y = py + int64_t(i) * d;
      const float* g = go + int64_t(i) * d;
      double dot = 0.0;
      for (int j = 0; j < d; ++j) dot += double(g[j]) * double(y[j]);
      for (int j = 0; j < d; ++j)
        gx[int64_t(i) * d + j] += static_cast<float>(double(y[j]) * (double(g[j]) - dot));
    }
  });
  return out;
}

Tensor Tape::layer_norm_rows(const Tensor& x, const Tensor& gain, const Tensor& bias) {
  const int n = x.rank() == 2 ? x.dim(0) : 1;
  const int d = x.rank() == 2 ? x.dim(1) : x.dim(0);
  if (d < 2) {
    throw std::invalid_argument("layer_norm: degenerate input of width " + std::to_string(d));
  }
  if (gain.size() != d || bias.size() != d) {
    throw std::invalid_argument("layer_norm: gain/bias " + shape_str(gain.shape()) + "/" +
                                shape_str(bias.shape()) + " do not match width " +
                                std::to_string(d));
  }
  Tensor out = Tensor::zeros(x.shape());
  // normalized rows and per-row 1/stddev, kept for the adjoint
  auto xhat = std::make_shared<std::vector<double>>(size_t(n) * d);
  auto inv_std = std::make_shared<std::vector<double>>(n);
  const float* px = x.data();
  const float* pg = gain.data();
  const float* pb = bias.data();
  float* po = out.data();
  for (int i = 0; i < n; ++i) {
    const float* row = px + int64_t(i) * d;
    double mean = 0.0;
    for (int j = 0; j < d; ++j) mean += row[j];
    mean /= d;
    double var = 0.0;
    for (int j = 0; j < d; ++j) {
      double c = row[j] - mean;
      var += c * c;
    }
    var /= d;
    double inv = 1.0 / std::sqrt(var + double(kLayerNormEps));
    (*inv_std)[i] = inv;
    for (int j = 0; j < d; ++j) {
      double h = (row[j] - mean) * inv;
      (*xhat)[size_t(i) * d + j] = h;
      po[int64_t(i) * d + j] = static_cast<float>(h * pg[j] + pb[j]);
    }
  }
  record(out, {x, gain, bias}, [x = x, gain = gain, bias = bias, out, xhat, inv_std, n, d]() mutable {
    if (!out.has_grad()) return;
    const float* go = out.grad();
    const float* pg = gain.data();
    if (x.requires_grad()) {
      float* gx = x.grad();
      for (int i = 0; i < n; ++i) {
        double m1 = 0.0, m2 = 0.0;
        for (int j = 0; j < d; ++j) {
          double g = double(go[int64_t(i) * d + j]) * double(pg[j]);
          m1 += g;
          m2 += g * (*xhat)[size_t(i) * d + j];
        }
        m1 /= d;
        m2 /= d;
        for (int j = 0; j < d; ++j) {
          double g = double(go[int64_t(i) * d + j]) * double(pg[j]);
          double h = (*xhat)[size_t(i) * d + j];
          gx[int64_t(i) * d + j] += static_cast<float>((g - m1 - h * m2) * (*inv_std)[i]);
        }
      }
    }
    if (gain.requires_grad()) {
      float* gg = gain.grad();
      for (int j = 0; j < d; ++j) {
        double acc = 0.0;
        for (int i = 0; i < n; ++i)
          acc += double(go[int64_t(i) * d + j]) * (*xhat)[size_t(i) * d + j];
        gg[j] += static_cast<float>(acc);
      }
    }
    if (bias.requires_grad()) {
      float* gb = bias.grad();
      for (int j = 0; j < d; ++j) {
        double acc = 0.0;
        for (int i = 0; i < n; ++i) acc += double(go[int64_t(i) * d + j]);
        gb[j] += static_cast<float>(acc);
      }
    }
  });
  return out;
}

Tensor Tape::slice_cols(const Tensor& x, int start, int len) {
  if (x.rank() != 2 || start < 0 || len < 1 || start + len > x.dim(1)) {
    throw std::invalid_argument("slice_cols: [" + std::to_string(start) + "," +
                                std::to_string(start + len) + ") out of range for " +
                                shape_str(x.shape()));
  }
  const int n = x.dim(0), d = x.dim(1);
  Tensor out = Tensor::zeros({n, len});
  const float* px = x.data();
  float* po = out.data();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < len; ++j) po[i * len + j] = px[i * d + start + j];
  record(out, {x}, [x = x, out, start, len]() mutable {
    if (!out.has_grad() || !x.requires_grad()) return;
    const int n = x.dim(0), d = x.dim(1);
    const float* go = out.grad();
    float* gx = x.grad();
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < len; ++j) gx[i * d + start + j] += go[i * len + j];
  });
  return out;
}

Tensor Tape::concat_cols(const std::vector<Tensor>& xs) {
  if (xs.empty()) throw std::invalid_argument("concat_cols: no inputs");
  const int n = xs[0].dim(0);
  int total = 0;
  for (const Tensor& t : xs) {
    if (t.rank() != 2 || t.dim(0) != n) {
      throw std::invalid_argument("concat_cols: row mismatch " + shape_str(t.shape()));
    }
    total += t.dim(1);
  }
  Tensor out = Tensor::zeros({n, total});
  float* po = out.data();
  int off = 0;
  for (const Tensor& t : xs) {
    const int d = t.dim(1);
    const float* px = t.data();
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < d; ++j) po[i * total + off + j] = px[i * d + j];
    off += d;
  }
  Tensor out_h = out;
  bool needed = false;
  for (const Tensor& t : xs) needed = needed || t.requires_grad();
  if (grad_enabled_ && needed) {
    out_h.set_requires_grad(true);
    std::vector<Tensor> ins = xs;
    nodes_.push_back({[ins, out_h, n, total]() mutable {
      if (!out_h.has_grad()) return;
      const float* go = out_h.grad();
      int off = 0;
      for (Tensor& t : ins) {
        const int d = t.dim(1);
        if (t.requires_grad()) {
          float* gx = t.grad();
          for (int i = 0; i < n; ++i)
            for (int j = 0; j < d; ++j) gx[i * d + j] += go[i * total + off + j];
        }
        off += d;
      }
    }});
  }
  return out_h;
}

Tensor Tape::concat_rows(const std::vector<Tensor>& xs) {
  if (xs.empty()) throw std::invalid_argument("concat_rows: no inputs");
  const int d = xs[0].dim(1);
  int total = 0;
  for (const Tensor& t : xs) {
    if (t.rank() != 2 || t.dim(1) != d) {
      throw std::invalid_argument("concat_rows: column mismatch " + shape_str(t.shape()));
    }
    total += t.dim(0);
  }
  Tensor out = Tensor::zeros({total, d});
  float* po = out.data();
  int off = 0;
  for (const Tensor& t : xs) {
    std::copy(t.data(), t.data() + t.size(), po + int64_t(off) * d);
    off += t.dim(0);
  }
  Tensor out_h = out;
  bool needed = false;
  for (const Tensor& t : xs) needed = needed || t.requires_grad();
  if (grad_enabled_ && needed) {
    out_h.set_requires_grad(true);
    std::vector<Tensor> ins = xs;
    nodes_.push_back({[ins, out_h, d]() mutable {
      if (!out_h.has_grad()) return;
      const float* go = out_h.grad();
      int off = 0;
      for (Tensor& t : ins) {
        const int rows = t.dim(0);
        if (t.requires_grad()) {
          float* gx = t.grad();
          for (int64_t i = 0; i < int64_t(rows) * d; ++i) gx[i] += go[int64_t(off) * d + i];
        }
        off += rows;
      }
    }});
  }
  return out_h;
}

Tensor Tape::gather_rows(const Tensor& table, std::vector<int> idx) {
  if (table.rank() < 1 || table.rank() > 2) {
    throw std::invalid_argument("gather_rows: expected rank 1 or 2 table, got " +
                                shape_str(table.shape()));
  }
  const int rows = table.dim(0);
  const int width = table.rank() == 2 ? table.dim(1) : 1;
  for (int i : idx) {
    if (i < 0 || i >= rows) {
      throw std::out_of_range("gather_rows: index " + std::to_string(i) +
                              " out of range for " + shape_str(table.shape()));
    }
  }
  const int k = static_cast<int>(idx.size());
  Tensor out = table.rank() == 2 ? Tensor::zeros({k, width}) : Tensor::zeros({k});
  const float* pt = table.data();
  float* po = out.data();
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < width; ++j) po[i * width + j] = pt[int64_t(idx[i]) * width + j];
  record(out, {table}, [table = table, out, idx = std::move(idx), width]() mutable {
    if (!out.has_grad() || !table.requires_grad()) return;
    const float* go = out.grad();
    float* gt = table.grad();
    for (size_t i = 0; i < idx.size(); ++i)
      for (int j = 0; j < width; ++j)
        gt[int64_t(idx[i]) * width + j] += go[i * width + j];
  });
  return out;
}

Tensor Tape::gather_mean_rows(const Tensor& table, std::vector<std::vector<int>> groups) {
  if (table.rank() != 2) {
    throw std::invalid_argument("gather_mean_rows: expected rank-2 table, got " +
                                shape_str(table.shape()));
  }
  const int rows = table.dim(0), width = table.dim(1);
  for (const auto& g : groups) {
    if (g.empty()) throw std::invalid_argument("gather_mean_rows: empty position group");
    for (int i : g) {
      if (i < 0 || i >= rows) {
        throw std::out_of_range("gather_mean_rows: position " + std::to_string(i) +
                                " out of range for " + shape_str(table.shape()));
      }
    }
  }
  const int k = static_cast<int>(groups.size());
  Tensor out = Tensor::zeros({k, width});
  const float* pt = table.data();
  float* po = out.data();
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < width; ++j) {
      double acc = 0.0;
      for (int r : groups[i]) acc += double(pt[int64_t(r) * width + j]);
      po[i * width + j] = static_cast<float>(acc / double(groups[i].size()));
    }
  }
  record(out, {table}, [table = table, out, groups = std::move(groups), width]() mutable {
    if (!out.has_grad() || !table.requires_grad()) return;
    const float* go = out.grad();
    float* gt = table.grad();
    for (size_t i = 0; i < groups.size(); ++i) {
      const float w = 1.0f / float(groups[i].size());
      for (int r : groups[i])
        for (int j = 0; j < width; ++j)
          gt[int64_t(r) * width + j] += go[i * width + j] * w;
    }
  });
  return out;
}

Tensor Tape::dropout(const Tensor& x, float rate, std::mt19937_64& rng, bool train) {
  if (rate < 0.0f || rate >= 1.0f) {
    throw std::invalid_argument("dropout: rate " + std::to_string(rate) + " outside [0,1)");
  }
  if (!train || rate == 0.0f) return x;
  Tensor out = Tensor::zeros(x.shape());
  auto mask = std::make_shared<std::vector<float>>(x.size());
  std::uniform_real_distribution<float> uni(0.0f, 1.0f);
  const float keep_scale = 1.0f / (1.0f - rate);
  const float* px = x.data();
  float* po = out.data();
  for (int64_t i = 0; i < x.size(); ++i) {
    (*mask)[i] = uni(rng) < rate ? 0.0f : keep_scale;
    po[i] = px[i] * (*mask)[i];
  }
  record(out, {x}, [x = x, out, mask]() mutable {
    if (!out.has_grad() || !x.requires_grad()) return;
    const float* go = out.grad();
    float* gx = x.grad();
    for (int64_t i = 0; i < x.size(); ++i) gx[i] += go[i] * (*mask)[i];
  });
  return out;
}

Tensor Tape::sum(const Tensor& x) {
  double acc = 0.0;
  const float* px = x.data();
  for (int64_t i = 0; i < x.size(); ++i) acc += double(px[i]);
  Tensor out = Tensor::scalar(static_cast<float>(acc));
  record(out, {x}, [x = x, out]() mutable {
    if (!out.has_grad() || !x.requires_grad()) return;
    const float g = out.grad()[0];
    float* gx = x.grad();
    for (int64_t i = 0; i < x.size(); ++i) gx[i] += g;
  });
  return out;
}

Tensor Tape::cross_entropy_sum(const Tensor& logits, std::vector<int> targets) {
  if (logits.rank() != 2 || static_cast<int>(targets.size()) != logits.dim(0)) {
    throw std::invalid_argument("cross_entropy: " + std::to_string(targets.size()) +
                                " targets for logits " + shape_str(logits.shape()));
  }
  const int n = logits.dim(0), v = logits.dim(1);
  for (int t : targets) {
    if (t < 0 || t >= v) {
      throw std::out_of_range("cross_entropy: target " + std::to_string(t) +
                              " out of range for " + shape_str(logits.shape()));
    }
  }
  // keep the row softmax for the adjoint
  auto probs = std::make_shared<std::vector<float>>(size_t(n) * v);
  const float* pl = logits.data();
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    const float* row = pl + int64_t(i) * v;
    float mx = row[0];
    for (int j = 1; j < v; ++j) mx = std::max(mx, row[j]);
    double sum = 0.0;
    for (int j = 0; j < v; ++j) sum += std::exp(double(row[j]) - double(mx));
    for (int j = 0; j < v; ++j)
      (*probs)[size_t(i) * v + j] =
          static_cast<float>(std::exp(double(row[j]) - double(mx)) / sum);
    total += double(mx) + std::log(sum) - double(row[targets[size_t(i)]]);
  }
  Tensor out = Tensor::scalar(static_cast<float>(total));
  record(out, {logits}, [logits = logits, out, probs, targets = std::move(targets), n, v]() mutable {
    if (!out.has_grad() || !logits.requires_grad()) return;
    const float g = out.grad()[0];
    float* gl = logits.grad();
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < v; ++j) {
        float p = (*probs)[size_t(i) * v + j];
        float onehot = (j == targets[size_t(i)]) ? 1.0f : 0.0f;
        gl[int64_t(i) * v + j] += g * (p - onehot);
      }
    }
  });
  return out;
}

}  // namespace edkit
