#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace dpdp::nn {

class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Dense row-major matrix of doubles.
class Matrix {
public:
    Matrix() = default;
    Matrix(int rows, int cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows) * cols, fill) {}
    Matrix(int rows, int cols, std::vector<double> data);

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }

    double& operator()(int r, int c) { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
    double operator()(int r, int c) const { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
    std::span<double> row(int r) { return {data_.data() + static_cast<std::size_t>(r) * cols_, static_cast<std::size_t>(cols_)}; }
    std::span<const double> row(int r) const {
        return {data_.data() + static_cast<std::size_t>(r) * cols_, static_cast<std::size_t>(cols_)};
    }
    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    void fill(double v) { std::fill(data_.begin(), data_.end(), v); }
    bool all_finite() const;

    bool operator==(const Matrix&) const = default;

private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<double> data_;
};

Matrix matmul(const Matrix& a, const Matrix& b);     // a * b
Matrix matmul_tn(const Matrix& a, const Matrix& b);  // a^T * b
Matrix matmul_nt(const Matrix& a, const Matrix& b);  // a * b^T
Matrix hconcat(const Matrix& a, const Matrix& b);
Matrix gather_rows(const Matrix& m, std::span<const int> rows);

struct Param {
    std::string name;
    Matrix value;
    Matrix grad;

    Param() = default;
    Param(std::string n, int rows, int cols) : name(std::move(n)), value(rows, cols), grad(rows, cols) {}
};

// Uniform in +-sqrt(6 / (fan_in + fan_out)).
void glorot_uniform(Matrix& w, std::mt19937_64& rng);

class Linear {
public:
    Linear() = default;
    Linear(const std::string& name, int in, int out, std::mt19937_64& rng);

    int in() const { return weight.value.rows(); }
    int out() const { return weight.value.cols(); }

    Matrix forward(const Matrix& x) const;
    // Accumulates parameter gradients and returns d loss / d x.
    Matrix backward(const Matrix& x, const Matrix& dy);
    void collect(std::vector<Param*>& out);
    void collect(std::vector<const Param*>& out) const;

    Param weight;  // in x out
    Param bias;    // 1 x out
};

struct MlpCache {
    std::vector<Matrix> inputs;  // input of each layer
    std::vector<Matrix> pre;     // pre-activation of each layer
};

// Affine + ReLU per hidden layer; the last layer is linear unless relu_output.
class Mlp {
public:
    Mlp() = default;
    Mlp(const std::string& name, std::span<const int> widths, bool relu_output, std::mt19937_64& rng);

    int in() const { return layers_.front().in(); }
    int out() const { return layers_.back().out(); }

    Matrix forward(const Matrix& x, MlpCache* cache = nullptr) const;
    Matrix backward(const MlpCache& cache, const Matrix& dy);
    void collect(std::vector<Param*>& out);
    void collect(std::vector<const Param*>& out) const;

    std::vector<Linear>& layers() { return layers_; }

private:
    std::vector<Linear> layers_;
    bool relu_output_ = false;
};

// Multi-head scaled dot-product attention of each node over itself and its
// neighbours (the self row is the query), followed by a dense block that
// concatenates the node's input with the attention output and applies
// affine + ReLU.
class AttentionBlock {
public:
    struct Cache {
        Matrix input;                          // m x in
        Matrix q, k, v;                        // m x heads*head_dim
        std::vector<std::vector<int>> neighbors;
        std::vector<std::vector<std::vector<double>>> weights;  // [node][head][j]
        Matrix concat;                         // m x (in + heads*head_dim)
        Matrix pre;                            // m x out
    };

    AttentionBlock() = default;
    AttentionBlock(const std::string& name, int in, int heads, int head_dim, int out, std::mt19937_64& rng);

    int heads() const { return heads_; }
    int head_dim() const { return head_dim_; }
    int out() const { return dense_.out(); }

    // neighbors[i] lists the rows node i attends to; the first entry must be i.
    Matrix forward(const Matrix& h, const std::vector<std::vector<int>>& neighbors, Cache* cache = nullptr) const;
    Matrix backward(const Cache& cache, const Matrix& dy);

    // Single node: row 0 of `rows` is the node itself, the rest its neighbours.
    Matrix forward_one(const Matrix& rows, Cache* cache = nullptr) const;

    void collect(std::vector<Param*>& out);
    void collect(std::vector<const Param*>& out) const;

private:
    int heads_ = 0;
    int head_dim_ = 0;
    Linear query_, key_, value_, dense_;
};

class Adam {
public:
    Adam(double lr = 1e-3, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
        : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

    // Descends along each param's grad, then leaves grads untouched.
    void step(std::span<Param* const> params);
    std::int64_t steps() const { return t_; }

private:
    double lr_, beta1_, beta2_, eps_;
    std::int64_t t_ = 0;
    std::vector<std::vector<double>> m_, v_;
};

void zero_grad(std::span<Param* const> params);

// Named-tensor archive: "DPDPNN01", u32 count, then per tensor u32 name
// length, name bytes, u32 rows, u32 cols and rows*cols little-endian f64.
std::vector<std::uint8_t> encode_archive(std::span<const Param* const> params);
void decode_archive(std::span<const std::uint8_t> bytes, std::span<Param* const> params);
void save_archive(const std::filesystem::path& path, std::span<const Param* const> params);
void load_archive(const std::filesystem::path& path, std::span<Param* const> params);

std::string sha256_hex(std::span<const std::uint8_t> bytes);

}  // namespace dpdp::nn
