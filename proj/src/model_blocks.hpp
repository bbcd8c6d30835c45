#pragma once

#include <functional>
#include <vector>

#include "slicecast/tensor.hpp"

namespace slicecast::blocks {

using nn::Tensor;

// Single-head attention body: (q, k, v) head slices -> mixed head output.
using HeadFn = std::function<Tensor(const Tensor&, const Tensor&, const Tensor&)>;

// Projects q/k/v, splits the model width into heads, applies `head` to each,
// concatenates and applies the output projection.
inline Tensor multi_head(const Tensor& q_in, const Tensor& k_in, const Tensor& v_in,
                         const Tensor& wq, const Tensor& wk, const Tensor& wv, const Tensor& wo,
                         int n_heads, const HeadFn& head) {
    const Tensor q = nn::matmul(q_in, wq);
    const Tensor k = nn::matmul(k_in, wk);
    const Tensor v = nn::matmul(v_in, wv);
    const int d_head = q.cols() / n_heads;
    std::vector<Tensor> outs;
    outs.reserve(static_cast<std::size_t>(n_heads));
    for (int h = 0; h < n_heads; ++h) {
        const int lo = h * d_head;
        const int hi = lo + d_head;
        outs.push_back(head(nn::slice(q, 1, lo, hi), nn::slice(k, 1, lo, hi),
                            nn::slice(v, 1, lo, hi)));
    }
    return nn::matmul(nn::concat(outs, 1), wo);
}

inline Tensor feed_forward(const Tensor& x, const Tensor& w1, const Tensor& b1, const Tensor& w2,
                           const Tensor& b2) {
    return nn::add(nn::matmul(nn::relu(nn::add(nn::matmul(x, w1), b1)), w2), b2);
}

// Pads with zero rows or truncates so `x` has exactly `rows` rows.
inline Tensor resize_rows(const Tensor& x, int rows) {
    if (x.rows() == rows) return x;
    if (x.rows() > rows) return nn::slice(x, 0, 0, rows);
    return nn::concat({x, Tensor::zeros(rows - x.rows(), x.cols())}, 0);
}

}  // namespace slicecast::blocks
