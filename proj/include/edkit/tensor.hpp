#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <vector>

namespace edkit {

// Dense float32 tensor in row-major order with an optional gradient buffer
// of the same shape. Copies are shallow: they share storage, so a Tensor
// behaves as a handle to one logical parameter or activation.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(std::vector<int> shape);
  static Tensor full(std::vector<int> shape, float value);
  static Tensor from_data(std::vector<int> shape, std::vector<float> data);
  static Tensor scalar(float value);

  bool defined() const { return impl_ != nullptr; }
  const std::vector<int>& shape() const;
  int rank() const;
  int dim(int i) const;
  int64_t size() const;

  float* data();
  const float* data() const;
  float& at(int i);
  float& at(int i, int j);
  float at(int i) const;
  float at(int i, int j) const;

  // Gradient accumulator. Allocated lazily, zero-filled on first use.
  bool has_grad() const;
  float* grad();
  const float* grad() const;
  void ensure_grad();
  void zero_grad();

  bool requires_grad() const;
  void set_requires_grad(bool value);

  bool same_storage(const Tensor& other) const { return impl_ == other.impl_; }

  std::vector<float> to_vector() const;

 private:
  struct Impl {
    std::vector<int> shape;
    std::vector<float> data;
    std::vector<float> grad;  // empty until touched by backward
    bool requires_grad = false;
  };
  std::shared_ptr<Impl> impl_;
  explicit Tensor(std::shared_ptr<Impl> impl) : impl_(std::move(impl)) {}
};

std::string shape_str(const std::vector<int>& shape);

// Records primitive operations so that adjoints can be replayed in reverse
// order. One tape per forward pass; backward() visits every recorded node
// exactly once. Construct with grad_enabled=false for inference-only work:
// nothing is recorded and outputs do not require grad.
class Tape {
 public:
  explicit Tape(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}

  bool grad_enabled() const { return grad_enabled_; }
  size_t node_count() const { return nodes_.size(); }

  // [m,k] x [k,n] -> [m,n]
  Tensor matmul(const Tensor& a, const Tensor& b);
  // [m,k] x [n,k]^T -> [m,n]
  Tensor matmul_nt(const Tensor& a, const Tensor& b);
  // same-shape elementwise sum
  Tensor add(const Tensor& a, const Tensor& b);
  // [n,d] + [d], bias added to every row
  Tensor add_row_bias(const Tensor& x, const Tensor& bias);
  Tensor scale(const Tensor& x, float c);
  Tensor gelu(const Tensor& x);
  // row-wise softmax, stabilized by subtracting the row maximum
  Tensor softmax_rows(const Tensor& x);
  // row-wise layer norm with elementwise gain and bias; epsilon 1e-5
  Tensor layer_norm_rows(const Tensor& x, const Tensor& gain, const Tensor& bias);
  Tensor slice_cols(const Tensor& x, int start, int len);
  Tensor concat_cols(const std::vector<Tensor>& xs);
  Tensor concat_rows(const std::vector<Tensor>& xs);
  // rank-1 or rank-2 table; selects rows (elements for rank 1)
  Tensor gather_rows(const Tensor& table, std::vector<int> idx);
  // one output row per group: the mean of the table rows named by the group
  Tensor gather_mean_rows(const Tensor& table, std::vector<std::vector<int>> groups);
  // inverted dropout; identity (and no rng draw) when !train or rate == 0
  Tensor dropout(const Tensor& x, float rate, std::mt19937_64& rng, bool train);
  Tensor sum(const Tensor& x);
  // sum over rows of -log softmax(logits)[target]; logits [n,v] -> [1]
  Tensor cross_entropy_sum(const Tensor& logits, std::vector<int> targets);

  // Seeds d(loss)/d(loss) = 1 and replays all recorded adjoints in reverse.
  void backward(const Tensor& loss);

  static constexpr float kLayerNormEps = 1e-5f;

 private:
  struct Node {
    std::function<void()> backprop;
  };
  std::vector<Node> nodes_;
  bool grad_enabled_;

  void record(Tensor& out, std::initializer_list<Tensor> inputs,
              std::function<void()> fn);
};

}  // namespace edkit
