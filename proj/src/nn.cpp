#include "dpdp/nn.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include <openssl/evp.h>

namespace dpdp::nn {

Matrix::Matrix(int rows, int cols, std::vector<double> data) : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != static_cast<std::size_t>(rows) * cols) throw ShapeError("matrix data does not match shape");
}

bool Matrix::all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
}

namespace {

std::string shape(const Matrix& m) { return std::to_string(m.rows()) + "x" + std::to_string(m.cols()); }

}  // namespace

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) throw ShapeError("matmul " + shape(a) + " * " + shape(b));
    Matrix c(a.rows(), b.cols());
    for (int i = 0; i < a.rows(); ++i) {
        auto ci = c.row(i);
        for (int k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            const auto bk = b.row(k);
            for (int j = 0; j < b.cols(); ++j) ci[j] += aik * bk[j];
        }
    }
    return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows()) throw ShapeError("matmul_tn " + shape(a) + " * " + shape(b));
    Matrix c(a.cols(), b.cols());
    for (int r = 0; r < a.rows(); ++r) {
        const auto ar = a.row(r);
        const auto br = b.row(r);
        for (int i = 0; i < a.cols(); ++i) {
            const double ari = ar[i];
            if (ari == 0.0) continue;
            auto ci = c.row(i);
            for (int j = 0; j < b.cols(); ++j) ci[j] += ari * br[j];
        }
    }
    return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.cols()) throw ShapeError("matmul_nt " + shape(a) + " * " + shape(b));
    Matrix c(a.rows(), b.rows());
    for (int i = 0; i < a.rows(); ++i) {
        const auto ai = a.row(i);
        for (int j = 0; j < b.rows(); ++j) {
            const auto bj = b.row(j);
            double s = 0.0;
            for (int k = 0; k < a.cols(); ++k) s += ai[k] * bj[k];
            c(i, j) = s;
        }
    }
    return c;
}

Matrix hconcat(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows()) throw ShapeError("hconcat " + shape(a) + " | " + shape(b));
    Matrix c(a.rows(), a.cols() + b.cols());
    for (int i = 0; i < a.rows(); ++i) {
        std::copy(a.row(i).begin(), a.row(i).end(), c.row(i).begin());
        std::copy(b.row(i).begin(), b.row(i).end(), c.row(i).begin() + a.cols());
    }
    return c;
}

Matrix gather_rows(const Matrix& m, std::span<const int> rows) {
    Matrix out(static_cast<int>(rows.size()), m.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto src = m.row(rows[i]);
        std::copy(src.begin(), src.end(), out.row(static_cast<int>(i)).begin());
    }
    return out;
}

void glorot_uniform(Matrix& w, std::mt19937_64& rng) {
    const double limit = std::sqrt(6.0 / (w.rows() + w.cols()));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (auto& x : w.data()) x = dist(rng);
}

Linear::Linear(const std::string& name, int in, int out, std::mt19937_64& rng)
    : weight(name + ".weight", in, out), bias(name + ".bias", 1, out) {
    glorot_uniform(weight.value, rng);
}

Matrix Linear::forward(const Matrix& x) const {
    if (x.cols() != in()) throw ShapeError(weight.name + ": input " + shape(x) + " vs weight " + shape(weight.value));
    Matrix y = matmul(x, weight.value);
    for (int i = 0; i < y.rows(); ++i) {
        auto yi = y.row(i);
        for (int j = 0; j < y.cols(); ++j) yi[j] += bias.value(0, j);
    }
    return y;
}

Matrix Linear::backward(const Matrix& x, const Matrix& dy) {
    if (dy.cols() != out() || dy.rows() != x.rows()) throw ShapeError(weight.name + ": bad upstream gradient " + shape(dy));
    const Matrix dw = matmul_tn(x, dy);
    for (std::size_t i = 0; i < dw.size(); ++i) weight.grad.data()[i] += dw.data()[i];
    for (int i = 0; i < dy.rows(); ++i) {
        for (int j = 0; j < dy.cols(); ++j) bias.grad(0, j) += dy(i, j);
    }
    return matmul_nt(dy, weight.value);
}

void Linear::collect(std::vector<Param*>& out) {
    out.push_back(&weight);
    out.push_back(&bias);
}

void Linear::collect(std::vector<const Param*>& out) const {
    out.push_back(&weight);
    out.push_back(&bias);
}

Mlp::Mlp(const std::string& name, std::span<const int> widths, bool relu_output, std::mt19937_64& rng)
    : relu_output_(relu_output) {
    if (widths.size() < 2) throw ShapeError(name + ": an MLP needs at least input and output widths");
    for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
        layers_.emplace_back(name + "." + std::to_string(i), widths[i], widths[i + 1], rng);
    }
}

Matrix Mlp::forward(const Matrix& x, MlpCache* cache) const {
    if (cache) {
        cache->inputs.clear();
        cache->pre.clear();
    }
    Matrix h = x;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        Matrix pre = layers_[l].forward(h);
        if (cache) {
            cache->inputs.push_back(std::move(h));
            cache->pre.push_back(pre);
        }
        const bool relu = l + 1 < layers_.size() || relu_output_;
        if (relu) {
            for (auto& v : pre.data()) v = std::max(v, 0.0);
        }
        h = std::move(pre);
    }
    return h;
}

Matrix Mlp::backward(const MlpCache& cache, const Matrix& dy) {
    if (cache.pre.size() != layers_.size()) throw std::logic_error("MLP backward without a recorded forward pass");
    Matrix grad = dy;
    for (std::size_t l = layers_.size(); l-- > 0;) {
        const bool relu = l + 1 < layers_.size() || relu_output_;
        if (relu) {
            const Matrix& pre = cache.pre[l];
            for (std::size_t i = 0; i < grad.size(); ++i) {
                if (pre.data()[i] <= 0.0) grad.data()[i] = 0.0;
            }
        }
        grad = layers_[l].backward(cache.inputs[l], grad);
    }
    return grad;
}

void Mlp::collect(std::vector<Param*>& out) {
    for (auto& l : layers_) l.collect(out);
}

void Mlp::collect(std::vector<const Param*>& out) const {
    for (const auto& l : layers_) l.collect(out);
}

AttentionBlock::AttentionBlock(const std::string& name, int in, int heads, int head_dim, int out, std::mt19937_64& rng)
    : heads_(heads),
      head_dim_(head_dim),
      query_(name + ".query", in, heads * head_dim, rng),
      key_(name + ".key", in, heads * head_dim, rng),
      value_(name + ".value", in, heads * head_dim, rng),
      dense_(name + ".dense", in + heads * head_dim, out, rng) {}

Matrix AttentionBlock::forward(const Matrix& h, const std::vector<std::vector<int>>& neighbors, Cache* cache) const {
    const int m = static_cast<int>(neighbors.size());
    if (m > h.rows()) throw ShapeError("attention: more query nodes than feature rows");
    for (int i = 0; i < m; ++i) {
        if (neighbors[i].empty() || neighbors[i].front() != i) {
            throw ShapeError("attention: neighbour list " + std::to_string(i) + " must start with the node itself");
        }
        for (int j : neighbors[i]) {
            if (j < 0 || j >= h.rows()) throw ShapeError("attention: neighbour index out of range");
        }
    }
    const Matrix q = query_.forward(h);
    const Matrix k = key_.forward(h);
    const Matrix v = value_.forward(h);
    const int width = heads_ * head_dim_;
    const double scale = 1.0 / std::sqrt(static_cast<double>(head_dim_));

    Matrix att(m, width);
    std::vector<std::vector<std::vector<double>>> weights(m, std::vector<std::vector<double>>(heads_));
    for (int i = 0; i < m; ++i) {
        const auto& nb = neighbors[i];
        for (int hd = 0; hd < heads_; ++hd) {
            const int off = hd * head_dim_;
            std::vector<double>& w = weights[i][hd];
            w.resize(nb.size());
            double top = -std::numeric_limits<double>::infinity();
            for (std::size_t j = 0; j < nb.size(); ++j) {
                double s = 0.0;
                for (int d = 0; d < head_dim_; ++d) s += q(i, off + d) * k(nb[j], off + d);
                w[j] = s * scale;
                top = std::max(top, w[j]);
            }
            double z = 0.0;
            for (auto& x : w) {
                x = std::exp(x - top);
                z += x;
            }
            for (auto& x : w) x /= z;
            for (std::size_t j = 0; j < nb.size(); ++j) {
                for (int d = 0; d < head_dim_; ++d) att(i, off + d) += w[j] * v(nb[j], off + d);
            }
        }
    }

    Matrix self(m, h.cols());
    for (int i = 0; i < m; ++i) std::copy(h.row(i).begin(), h.row(i).end(), self.row(i).begin());
    Matrix concat = hconcat(self, att);
    Matrix pre = dense_.forward(concat);
    Matrix out = pre;
    for (auto& x : out.data()) x = std::max(x, 0.0);
    if (cache) {
        cache->input = h;
        cache->q = q;
        cache->k = k;
        cache->v = v;
        cache->neighbors = neighbors;
        cache->weights = std::move(weights);
        cache->concat = std::move(concat);
        cache->pre = std::move(pre);
    }
    return out;
}

Matrix AttentionBlock::forward_one(const Matrix& rows, Cache* cache) const {
    std::vector<int> all(rows.rows());
    for (int i = 0; i < rows.rows(); ++i) all[i] = i;
    return forward(rows, {all}, cache);
}

Matrix AttentionBlock::backward(const Cache& cache, const Matrix& dy) {
    if (cache.pre.rows() != dy.rows() || cache.pre.cols() != dy.cols()) {
        throw std::logic_error("attention backward without a matching forward pass");
    }
    const int m = dy.rows();
    const int in = cache.input.cols();
    const double scale = 1.0 / std::sqrt(static_cast<double>(head_dim_));

    Matrix dpre = dy;
    for (std::size_t i = 0; i < dpre.size(); ++i) {
        if (cache.pre.data()[i] <= 0.0) dpre.data()[i] = 0.0;
    }
    const Matrix dconcat = dense_.backward(cache.concat, dpre);

    Matrix dh(cache.input.rows(), in);
    Matrix dq(cache.q.rows(), cache.q.cols());
    Matrix dk(cache.k.rows(), cache.k.cols());
    Matrix dv(cache.v.rows(), cache.v.cols());
    for (int i = 0; i < m; ++i) {
        for (int c = 0; c < in; ++c) dh(i, c) += dconcat(i, c);
        const auto& nb = cache.neighbors[i];
        for (int hd = 0; hd < heads_; ++hd) {
            const int off = hd * head_dim_;
            const auto& w = cache.weights[i][hd];
            std::vector<double> dw(nb.size(), 0.0);
            double weighted = 0.0;
            for (std::size_t j = 0; j < nb.size(); ++j) {
                for (int d = 0; d < head_dim_; ++d) {
                    const double datt = dconcat(i, in + off + d);
                    dw[j] += datt * cache.v(nb[j], off + d);
                    dv(nb[j], off + d) += w[j] * datt;
                }
                weighted += w[j] * dw[j];
            }
            for (std::size_t j = 0; j < nb.size(); ++j) {
                const double ds = w[j] * (dw[j] - weighted) * scale;
                for (int d = 0; d < head_dim_; ++d) {
                    dq(i, off + d) += ds * cache.k(nb[j], off + d);
                    dk(nb[j], off + d) += ds * cache.q(i, off + d);
                }
            }
        }
    }
    const Matrix from_q = query_.backward(cache.input, dq);
    const Matrix from_k = key_.backward(cache.input, dk);
    const Matrix from_v = value_.backward(cache.input, dv);
    for (std::size_t i = 0; i < dh.size(); ++i) {
        dh.data()[i] += from_q.data()[i] + from_k.data()[i] + from_v.data()[i];
    }
    return dh;
}

void AttentionBlock::collect(std::vector<Param*>& out) {
    query_.collect(out);
    key_.collect(out);
    value_.collect(out);
    dense_.collect(out);
}

void AttentionBlock::collect(std::vector<const Param*>& out) const {
    query_.collect(out);
    key_.collect(out);
    value_.collect(out);
    dense_.collect(out);
}

void Adam::step(std::span<Param* const> params) {
    if (m_.size() != params.size()) {
        m_.assign(params.size(), {});
        v_.assign(params.size(), {});
        for (std::size_t i = 0; i < params.size(); ++i) {
            m_[i].assign(params[i]->value.size(), 0.0);
            v_[i].assign(params[i]->value.size(), 0.0);
        }
    }
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t p = 0; p < params.size(); ++p) {
        auto& value = params[p]->value.data();
        const auto& grad = params[p]->grad.data();
        auto& m = m_[p];
        auto& v = v_[p];
        for (std::size_t i = 0; i < value.size(); ++i) {
            m[i] = beta1_ * m[i] + (1.0 - beta1_) * grad[i];
            v[i] = beta2_ * v[i] + (1.0 - beta2_) * grad[i] * grad[i];
            value[i] -= lr_ * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps_);
        }
    }
}

void zero_grad(std::span<Param* const> params) {
    for (Param* p : params) p->grad.fill(0.0);
}

namespace {

constexpr char kMagic[8] = {'D', 'P', 'D', 'P', 'N', 'N', '0', '1'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_f64(std::vector<std::uint8_t>& out, double d) {
    const auto v = std::bit_cast<std::uint64_t>(d);
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_++]) << (8 * i);
        return v;
    }
    double f64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_++]) << (8 * i);
        return std::bit_cast<double>(v);
    }
    std::string str(std::size_t n) {
        need(n);
        std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
        pos_ += n;
        return s;
    }
    bool done() const { return pos_ == bytes_.size(); }

private:
    void need(std::size_t n) const {
        if (pos_ + n > bytes_.size()) throw std::runtime_error("checkpoint archive truncated");
    }

    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_archive(std::span<const Param* const> params) {
    std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
    put_u32(out, static_cast<std::uint32_t>(params.size()));
    for (const Param* p : params) {
        put_u32(out, static_cast<std::uint32_t>(p->name.size()));
        out.insert(out.end(), p->name.begin(), p->name.end());
        put_u32(out, static_cast<std::uint32_t>(p->value.rows()));
        put_u32(out, static_cast<std::uint32_t>(p->value.cols()));
        for (double d : p->value.data()) put_f64(out, d);
    }
    return out;
}

void decode_archive(std::span<const std::uint8_t> bytes, std::span<Param* const> params) {
    Reader in(bytes);
    if (in.str(sizeof(kMagic)) != std::string(kMagic, sizeof(kMagic))) {
        throw std::runtime_error("not a checkpoint archive");
    }
    const std::uint32_t count = in.u32();
    if (count != params.size()) {
        throw std::runtime_error("checkpoint holds " + std::to_string(count) + " tensors, network expects " +
                                 std::to_string(params.size()));
    }
    for (Param* p : params) {
        const std::string name = in.str(in.u32());
        const int rows = static_cast<int>(in.u32());
        const int cols = static_cast<int>(in.u32());
        if (name != p->name || rows != p->value.rows() || cols != p->value.cols()) {
            throw std::runtime_error("checkpoint tensor " + name + " does not match " + p->name);
        }
        for (auto& d : p->value.data()) d = in.f64();
    }
    if (!in.done()) throw std::runtime_error("trailing bytes in checkpoint archive");
}

void save_archive(const std::filesystem::path& path, std::span<const Param* const> params) {
    const auto bytes = encode_archive(params);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

void load_archive(const std::filesystem::path& path, std::span<Param* const> params) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    decode_archive(bytes, params);
}

std::string sha256_hex(std::span<const std::uint8_t> bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw std::runtime_error("SHA-256 failed");
    }
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xf]);
    }
    return out;
}

}  // namespace dpdp::nn
