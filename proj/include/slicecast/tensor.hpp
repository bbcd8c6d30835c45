#pragma once

#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "slicecast/matrix.hpp"
#include "slicecast/rng.hpp"

namespace slicecast::nn {

class ShapeError : public std::runtime_error {
public:
    explicit ShapeError(const std::string& what) : std::runtime_error(what) {}
};

class NonFiniteError : public std::runtime_error {
public:
    explicit NonFiniteError(const std::string& what) : std::runtime_error(what) {}
};

class GraphError : public std::runtime_error {
public:
    explicit GraphError(const std::string& what) : std::runtime_error(what) {}
};

// When enabled every op scans its output for NaN/Inf and throws
// NonFiniteError. Defaults to on in debug builds.
void set_finite_checks(bool enabled);
bool finite_checks_enabled();

struct TensorNode {
    int rows = 0;
    int cols = 0;
    std::vector<double> value;
    std::vector<double> grad;  // sized lazily during backward
    bool requires_grad = false;
    bool backward_done = false;
    std::vector<std::shared_ptr<TensorNode>> parents;
    std::function<void(TensorNode&)> backprop;  // empty for leaves

    std::size_t size() const { return value.size(); }
};

// Value-semantics handle onto a node of the recorded computation graph.
// All tensors are two-dimensional; scalars are (1,1).
class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(int rows, int cols, bool requires_grad = false);
    static Tensor full(int rows, int cols, double value);
    static Tensor from(int rows, int cols, std::vector<double> data, bool requires_grad = false);
    static Tensor scalar(double value);
    static Tensor from_matrix(const Matrix& m, bool requires_grad = false);

    bool defined() const { return node_ != nullptr; }
    int rows() const { return node_->rows; }
    int cols() const { return node_->cols; }
    std::size_t size() const { return node_->value.size(); }
    bool requires_grad() const { return node_->requires_grad; }

    const std::vector<double>& data() const { return node_->value; }
    std::vector<double>& mutable_data() { return node_->value; }
    const std::vector<double>& grad() const;
    void zero_grad();

    double item() const;
    double at(int r, int c) const { return node_->value[static_cast<std::size_t>(r) * node_->cols + c]; }
    Matrix to_matrix() const;

    std::shared_ptr<TensorNode> node() const { return node_; }
    explicit Tensor(std::shared_ptr<TensorNode> n) : node_(std::move(n)) {}

private:
    std::shared_ptr<TensorNode> node_;
};

// Elementwise ops broadcast (numpy rules, per axis: equal or 1).
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor neg(const Tensor& a);
Tensor scale(const Tensor& a, double c);
Tensor add_scalar(const Tensor& a, double c);
Tensor relu(const Tensor& a);

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);

Tensor softmax(const Tensor& a, int axis);
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps = 1e-5);

Tensor mean_all(const Tensor& a);
Tensor mean_axis0(const Tensor& a);  // (T,C) -> (1,C)
Tensor mse_loss(const Tensor& pred, const Tensor& target);

Tensor concat(const std::vector<Tensor>& parts, int axis);
Tensor slice(const Tensor& a, int axis, int begin, int end);
Tensor roll(const Tensor& a, int shift, int axis);

// Centered moving average over rows with edge replication; kernel odd >= 1.
Tensor moving_average_rows(const Tensor& a, int kernel);

// Inverted dropout; identity when training is false or p == 0.
Tensor dropout(const Tensor& a, double p, Rng& rng, bool training);

// Reverse-mode sweep from a scalar loss. Visits each recorded node once in
// reverse topological order; gradients accumulate additively over fan-out.
// Calling twice on the same graph throws GraphError.
void backward(const Tensor& loss);

}  // namespace slicecast::nn
