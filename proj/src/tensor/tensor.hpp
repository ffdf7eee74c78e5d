#pragma once
// Dense 64-bit tensors with a recording tape for reverse-mode
// differentiation. Kernels cover exactly what two small transformer stacks
// and the closed-form baseline need; everything is row-major and at most
// rank 2. A tape is single-owner during forward/backward; tensors not
// created through a tape act as constants and receive no gradient.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "common/error.hpp"
#include "common/rng.hpp"

namespace hypercqa::tensor {

struct Tensor {
    std::vector<std::size_t> shape;
    std::shared_ptr<std::vector<double>> data;
    int node = -1;  // tape node id; -1 when untracked

    Tensor() : data(std::make_shared<std::vector<double>>()) {}

    static Tensor zeros(std::vector<std::size_t> shape);
    static Tensor full(std::vector<std::size_t> shape, double value);
    static Tensor from(std::vector<std::size_t> shape, std::vector<double> values);
    static Tensor row(std::vector<double> values);  // 1 x n
    static Tensor scalar(double value);
    static Tensor gaussian(std::vector<std::size_t> shape, double stddev, Rng& rng);

    std::size_t numel() const;
    // 2-D view: rank-1 tensors read as a single row.
    std::size_t rows() const;
    std::size_t cols() const;

    double& at(std::size_t r, std::size_t c) { return (*data)[r * cols() + c]; }
    double at(std::size_t r, std::size_t c) const { return (*data)[r * cols() + c]; }
    double& operator[](std::size_t i) { return (*data)[i]; }
    double operator[](std::size_t i) const { return (*data)[i]; }
    double value() const;  // scalar tensors only

    bool same_shape(const Tensor& other) const { return shape == other.shape; }
};

using GradMap = std::map<std::string, Tensor>;

class ParamStore;

class Tape {
public:
    Tape() = default;
    explicit Tape(ParamStore* store) : store_(store) {}

    // Tracks a tensor as a differentiable leaf.
    Tensor watch(const Tensor& value);

    // Tracks a named parameter of the attached store (once per tape).
    Tensor param(const std::string& name);

    std::size_t size() const { return nodes_.size(); }

    Tensor matmul(const Tensor& a, const Tensor& b);
    Tensor matmul_nt(const Tensor& a, const Tensor& b);  // a * b^T
    Tensor add(const Tensor& a, const Tensor& b);
    Tensor sub(const Tensor& a, const Tensor& b);
    Tensor mul(const Tensor& a, const Tensor& b);  // elementwise
    Tensor affine(const Tensor& a, double scale, double shift);
    Tensor add_rowvec(const Tensor& a, const Tensor& row);
    Tensor mul_rowvec(const Tensor& a, const Tensor& row);
    Tensor softmax_rows(const Tensor& a);
    Tensor layer_norm(const Tensor& a);  // per row, zero mean unit variance, no affine
    Tensor gelu(const Tensor& a);
    Tensor sigmoid(const Tensor& a);
    Tensor logit(const Tensor& a);  // inverse of sigmoid on (0,1)
    Tensor gather_rows(const Tensor& a, std::vector<std::size_t> rows);
    Tensor concat_rows(const std::vector<Tensor>& parts);
    Tensor concat_cols(const std::vector<Tensor>& parts);
    Tensor slice_cols(const Tensor& a, std::size_t start, std::size_t count);
    Tensor roll_cols(const Tensor& a, std::size_t left_shift);
    Tensor mean(const Tensor& a);  // scalar
    // e[i][j] = dot(q row i, b row i*n+j) with n = rows(q); the key-side bias
    // term of type-aware attention.
    Tensor pair_dot_rows(const Tensor& q, const Tensor& b);
    // out row i = x row i times square block blocks[i] of w, where w stacks
    // per-block (in_cols x out_cols) matrices vertically. Applies per-type
    // projections in a single node.
    Tensor block_matmul(const Tensor& x, std::vector<std::size_t> blocks, const Tensor& w);
    // Inverted dropout; identity when rate is zero.
    Tensor dropout(const Tensor& a, double rate, Rng& rng);
    // -log softmax(logits)[answer]; log-sum-exp stabilized scalar.
    Tensor cross_entropy_logits(const Tensor& logits, std::size_t answer);

    // Reverse pass from a scalar; fills gradients for every node reachable
    // from `loss`. Returns per-name gradients covering the whole attached
    // store (zeros for parameters the loss never touched).
    GradMap backward(const Tensor& loss);

    // Gradient of a watched tensor after backward().
    Tensor grad(const Tensor& leaf) const;

private:
    struct Node {
        Tensor value;
        std::function<void()> backprop;  // adds into parent grads
        std::vector<double> grad;
    };

    int alloc(Tensor& out);
    void set_backprop(int node, std::function<void()> backprop);
    std::vector<double>* grad_buffer(int node);

    std::vector<Node> nodes_;
    ParamStore* store_ = nullptr;
    std::map<std::string, int> param_nodes_;
    bool ran_backward_ = false;
};

class ParamStore {
public:
    // Gaussian init scaled by stddev; registration order is retained.
    Tensor& create(const std::string& name, std::vector<std::size_t> shape, double stddev,
                   Rng& rng);
    Tensor& create_zeros(const std::string& name, std::vector<std::size_t> shape);
    Tensor& create_full(const std::string& name, std::vector<std::size_t> shape, double value);

    bool has(const std::string& name) const { return params_.count(name) != 0; }
    Tensor& get(const std::string& name);
    const Tensor& get(const std::string& name) const;
    const std::vector<std::string>& names() const { return order_; }
    std::size_t total_parameters() const;

private:
    friend class Tape;
    std::vector<std::string> order_;
    std::map<std::string, Tensor> params_;
};

struct AdamState {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::uint64_t step = 0;
    std::map<std::string, std::vector<double>> first_moment;
    std::map<std::string, std::vector<double>> second_moment;
};

// Standard Adam with bias correction; moments are lazily shaped on first use.
void adam_step(ParamStore& params, const GradMap& grads, AdamState& state);

}  // namespace hypercqa::tensor
