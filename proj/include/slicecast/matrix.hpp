#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace slicecast {

// Dense row-major matrix of 64-bit reals. Shared value type for series
// frames, model inputs and forecasts.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> a;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), a(r * c, fill) {}

    double& at(std::size_t r, std::size_t c) {
        return a[r * cols + c];
    }
    double at(std::size_t r, std::size_t c) const {
        return a[r * cols + c];
    }

    std::size_t size() const { return a.size(); }
    bool empty() const { return a.empty(); }

    // Copy of one column.
    std::vector<double> column(std::size_t c) const {
        std::vector<double> out(rows);
        for (std::size_t r = 0; r < rows; ++r) out[r] = a[r * cols + c];
        return out;
    }

    // Rows [begin, end) as a new matrix.
    Matrix row_slice(std::size_t begin, std::size_t end) const {
        if (begin > end || end > rows) throw std::out_of_range("Matrix::row_slice: bad range");
        Matrix out(end - begin, cols);
        std::copy(a.begin() + static_cast<std::ptrdiff_t>(begin * cols),
                  a.begin() + static_cast<std::ptrdiff_t>(end * cols), out.a.begin());
        return out;
    }

    bool operator==(const Matrix& o) const { return rows == o.rows && cols == o.cols && a == o.a; }
};

}  // namespace slicecast
