#include "tensor/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace hypercqa::tensor {

namespace {

constexpr double kLayerNormEps = 1e-8;
constexpr double kLogitEps = 1e-12;

std::size_t product(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return n;
}

void check(bool condition, const char* what) {
    if (!condition) throw Error(ErrorKind::ShapeMismatch, what);
}

}  // namespace

Tensor Tensor::zeros(std::vector<std::size_t> shape) {
    Tensor t;
    t.shape = std::move(shape);
    t.data = std::make_shared<std::vector<double>>(product(t.shape), 0.0);
    return t;
}

Tensor Tensor::full(std::vector<std::size_t> shape, double value) {
    Tensor t = zeros(std::move(shape));
    std::fill(t.data->begin(), t.data->end(), value);
    return t;
}

Tensor Tensor::from(std::vector<std::size_t> shape, std::vector<double> values) {
    Tensor t;
    t.shape = std::move(shape);
    if (product(t.shape) != values.size()) {
        throw Error(ErrorKind::ShapeMismatch, "value count does not match shape");
    }
    t.data = std::make_shared<std::vector<double>>(std::move(values));
    return t;
}

Tensor Tensor::row(std::vector<double> values) {
    const std::size_t n = values.size();
    return from({1, n}, std::move(values));
}

Tensor Tensor::scalar(double value) { return from({1}, {value}); }

Tensor Tensor::gaussian(std::vector<std::size_t> shape, double stddev, Rng& rng) {
    Tensor t = zeros(std::move(shape));
    for (double& x : *t.data) x = stddev * rng.normal();
    return t;
}

std::size_t Tensor::numel() const { return product(shape); }

std::size_t Tensor::rows() const { return shape.size() >= 2 ? shape[0] : 1; }

std::size_t Tensor::cols() const {
    if (shape.empty()) return 0;
    return shape.size() >= 2 ? shape[1] : shape[0];
}

double Tensor::value() const {
    if (numel() != 1) throw Error(ErrorKind::NotScalar, "tensor has " + std::to_string(numel()) + " elements");
    return (*data)[0];
}

// ---------------------------------------------------------------------------

int Tape::alloc(Tensor& out) {
    const int id = static_cast<int>(nodes_.size());
    out.node = id;
    nodes_.push_back(Node{out, nullptr, {}});
    return id;
}

void Tape::set_backprop(int node, std::function<void()> backprop) {
    nodes_[static_cast<std::size_t>(node)].backprop = std::move(backprop);
}

std::vector<double>* Tape::grad_buffer(int node) {
    if (node < 0) return nullptr;
    return &nodes_[static_cast<std::size_t>(node)].grad;
}

Tensor Tape::watch(const Tensor& value) {
    Tensor out = value;
    alloc(out);
    return out;
}

Tensor Tape::param(const std::string& name) {
    if (store_ == nullptr) throw Error(ErrorKind::ConfigError, "tape has no parameter store");
    auto it = param_nodes_.find(name);
    if (it != param_nodes_.end()) return nodes_[static_cast<std::size_t>(it->second)].value;
    Tensor out = watch(store_->get(name));
    param_nodes_.emplace(name, out.node);
    return out;
}

Tensor Tape::matmul(const Tensor& a, const Tensor& b) {
    const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
    check(b.rows() == k, "matmul inner dimensions");
    Tensor out = Tensor::zeros({m, n});
    const auto& av = *a.data;
    const auto& bv = *b.data;
    auto& ov = *out.data;
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
            const double aip = av[i * k + p];
            if (aip == 0.0) continue;
            for (std::size_t j = 0; j < n; ++j) ov[i * n + j] += aip * bv[p * n + j];
        }
    }
    alloc(out);
    set_backprop(out.node, [this, out, a, b, m, k, n]() {
        const auto& dout = nodes_[static_cast<std::size_t>(out.node)].grad;
        if (auto* da = grad_buffer(a.node)) {
            const auto& bv = *b.data;
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t j = 0; j < n; ++j) {
                    const double d = dout[i * n + j];
                    if (d == 0.0) continue;
                    for (std::size_t p = 0; p < k; ++p) (*da)[i * k + p] += d * bv[p * n + j];
                }
        }
        if (auto* db = grad_buffer(b.node)) {
            const auto& av = *a.data;
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t j = 0; j < n; ++j) {
                    const double d = dout[i * n + j];
                    if (d == 0.0) continue;
                    for (std::size_t p = 0; p < k; ++p) (*db)[p * n + j] += d * av[i * k + p];
                }
        }
    });
    return out;
}

Tensor Tape::matmul_nt(const Tensor& a, const Tensor& b) {
    const std::size_t m = a.rows(), k = a.cols(), n = b.rows();
    check(b.cols() == k, "matmul_nt inner dimensions");
    Tensor out = Tensor::zeros({m, n});
    const auto& av = *a.data;
    const auto& bv = *b.data;
    auto& ov = *out.data;
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            double acc = 0.0;
            for (std::size_t p = 0; p < k; ++p) acc += av[i * k + p] * bv[j * k + p];
            ov[i * n + j] = acc;
        }
    alloc(out);
    set_backprop(out.node, [this, out, a, b, m, k, n]() {
        const auto& dout = nodes_[static_cast<std::size_t>(out.node)].grad;
        if (auto* da = grad_buffer(a.node)) {
            const auto& bv = *b.data;
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t j = 0; j < n; ++j) {
                    const double d = dout[i * n + j];
                    if (d == 0.0) continue;
                    for (std::size_t p = 0; p < k; ++p) (*da)[i * k + p] += d * bv[j * k + p];
                }
        }
        if (auto* db = grad_buffer(b.node)) {
            const auto& av = *a.data;
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t j = 0; j < n; ++j) {
                    const double d = dout[i * n + j];
                    if (d == 0.0) continue;
                    for (std::size_t p = 0; p < k; ++p) (*db)[j * k + p] += d * av[i * k + p];
                }
        }
    });
    return out;
}

Tensor Tape::add(const Tensor& a, const Tensor& b) {
    check(a.same_shape(b), "add shapes");
    Tensor out = Tensor::zeros(a.shape);
    for (std::size_t i = 0; i < out.numel(); ++i) (*out.data)[i] = (*a.data)[i] + (*b.data)[i];
    alloc(out);
    set_backprop(out.node, [this, out, a, b]() {
        const auto& dout = nodes_[static_cast<std::size_t>(out.node)].grad;
        if (auto* da = grad_buffer(a.node))
            for (std::size_t i = 0; i < dout.size(); ++i) (*da)[i] += dout[i];
        if (auto* db = grad_buffer(b.node))
            for (std::size_t i = 0; i < dout.size(); ++i) (*db)[i] += dout[i];
    });
    return out;
}

Tensor Tape::sub(const Tensor& a, const Tensor& b) {
    check(a.same_shape(b), "sub shapes");
    Tensor out = Tensor::zeros(a.shape);
    for (std::size_t i = 0; i < out.numel(); ++i) (*out.data)[i] = (*a.data)[i] - (*b.data)[i];
    alloc(out);
    set_backprop(out.node, [this, out, a, b]() {
        const auto& dout = nodes_[static_cast<std::size_t>(out.node)].grad;
        if (auto* da = grad_buffer(a.node))
            for (std::size_t i = 0; i < dout.size(); ++i) (*da)[i] += dout[i];
        if (auto* db = grad_buffer(b.node))
            for (std::size_t i = 0; i < dout.size(); ++i) (*db)[i] -= dout[i];
    });
    return out;
}

Tensor Tape::mul(const Tensor& a, const Tensor& b) {
    check(a.same_shape(b), "mul shapes");
    Tensor out = Tensor::zeros(a.shape);
    for (std::size_t i = 0; i < out.numel(); ++i) (*out.data)[i] = (*a.data)[i] * (*b.data)[i];
    alloc(out);
    set_backprop(out.node, [this, out, a, b]() {
        const auto& dout = nodes_[static_cast<std::size_t>(out.node)].grad;
        if (auto* da = grad_buffer(a.node))
            for (std::size_t i = 0; i < dout.size(); ++i) (*da)[i] += dout[i] * (*b.data)[i];
        if (auto* db = grad_buffer(b.node))
            for (std::size_t i = 0; i < dout.size(); ++i) (*db)[i] += dout[i] * (*a.data)[i];
    });
    return out;
}

Tensor Tape::affine(const Tensor& a, double scale, double shift) {
    Tensor out = Tensor::zeros(a.shape);
    for (std::size_t i = 0; i < out.numel(); ++i) (*out.data)[i] = scale * (*a.data)[i] + shift;
    alloc(out);
    set_backprop(out.node, [this, out, a, scale]() {
        const auto& dout = nodes_[static_cast<std::size_t>(out.node)].grad;
        if (auto* da = grad_buffer(a.node))
            for (std::size_t i = 0; i < dout.size(); ++i) (*da)[i] += scale * dout[i];
    });
    return out;
}

Tensor Tape::add_rowvec(const Tensor& a, const Tensor& row) {
    const std::size_t m = a.rows(), n = a.cols();
    check(row.numel() == n, "add_rowvec width");
    Tensor out = Tensor::zeros(a.shape);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) (*out.data)[i * n + j] = (*a.data)[i * n + j] + (*row.data)[j];
    alloc(out);
    set_backprop(out.node, [this, out, a, row, m, n]() {
        const auto& dout = nodes_[static_cast<std::size_t>(out.node)].grad;
        if (auto* da = grad_buffer(a.node))
            for (std::size_t i = 0; i < dout.size(); ++i) (*da)[i] += dout[i];
        if (auto* dr = grad_buffer(row.node))
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t j = 0; j < n; ++j) (*dr)[j] += dout[i * n + j];
    });
    return out;
}

Tensor Tape::mul_rowvec(const Tensor& a, const Tensor& row) {
    const std::size_t m = a.rows(), n = a.cols();
    check(row.numel() == n, "mul_rowvec width");
    Tensor out = Tensor::zeros(a.shape);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) (*out.data)[i * n + j] = (*a.data)[i * n + j] * (*row.data)[j];
    alloc(out);
    set_backprop(out.node, [this, out, a, row, m, n]() {
        const auto& dout = nodes_[static_cast<std::size_t>(out.node)].grad;
        if (auto* da = grad_buffer(a.node))
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t j = 0; j < n; ++j) (*da)[i * n + j] += dout[i * n + j] * (*row.data)[j];
        if (auto* dr = grad_buffer(row.node))
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t j = 0; j < n; ++j) (*dr)[j] += dout[i * n + j] * (*a.data)[i * n + j];
    });
    return out;
}

Tensor Tape::softmax_rows(const Tensor& a) {
    const std::size_t m = a.rows(), n = a.cols();
    Tensor out = Tensor::zeros(a.shape);
    for (std::size_t i = 0; i < m; ++i) {
        double mx = (*a.data)[i * n];
        for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, (*a.data)[i * n + j]);
        double denom = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double e = std::exp((*a.data)[i * n + j] - mx);
            (*out.data)[i * n + j] = e;
            denom += e;
        }
        for (std::size_t j = 0; j < n; ++j) (*out.data)[i * n + j] /= denom;
    }
    alloc(out);
    set_backprop(out.node, [this, out, a, m, n]() {
        const auto& dout = nodes_[static_cast<std::size_t>(out.node)].grad;
        auto* da = grad_buffer(a.node);
        if (da == nullptr) return;
        for (std::size_t i = 0; i < m; ++i) {
            double dot = 0.0;
            for (std::size_t j = 0; j < n; ++j) dot += dout[i * n + j] * (*out.data)[i * n + j];
            for (std::size_t j = 0; j < n; ++j) {
                (*da)[i * n + j] += (*out.data)[i * n + j] * (dout[i * n + j] - dot);
            }
        }
    });
    return out;
}

Tensor Tape::layer_norm(const Tensor& a) {
    const std::size_t m = a.rows(), n = a.cols();
    check(n > 0, "layer_norm width");
    Tensor out = Tensor::zeros(a.shape);
    auto inv_sigma = std::make_shared<std::vector<double>>(m);
    for (std::size_t i = 0; i < m; ++i) {
        double mean = 0.0;
        for (std::size_t j = 0; j < n; ++j) mean += (*a.data)[i * n + j];
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double c = (*a.data)[i * n + j] - mean;
            var += c * c;
        }
        var /= static_cast<double>(n);
        const double inv = 1.0 / std::sqrt(var + kLayerNormEps);
        (*inv_sigma)[i] = inv;
        for (std::size_t j = 0; j < n; ++j) (*out.data)[i * n + j] = ((*a.data)[i * n + j] - mean) * inv;
    }
    alloc(out);
    set_backprop(out.node, [this, out, a, inv_sigma, m, n]() {
        const auto& dout = nodes_[static_cast<std::size_t>(out.node)].grad;
        auto* da = grad_buffer(a.node);
        if (da == nullptr) return;
        for (std::size_t i = 0; i < m; ++i) {
            double mean_d = 0.0, mean_dy = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                mean_d += dout[i * n + j];
                mean_dy += dout[i * n + j] * (*out.data)[i * n + j];
            }
            mean_d /= static_cast<double>(n);
            mean_dy /= static_cast<double>(n);
            for (std::size_t j = 0; j < n; ++j) {
                const double y = (*out.data)[i * n + j];
                (*da)[i * n + j] += (*inv_sigma)[i] * (dout[i * n + j] - mean_d - y * mean_dy);
            }
        }
    });
    return out;
}

Tensor Tape::gelu(const Tensor& a) {
    Tensor out = Tensor::zeros(a.shape);
    for (std::size_t i = 0; i < out.numel(); ++i) {
        const double x = (*a.data)[i];
        (*out.data)[i] = 0.5 * x * (1.0 + std::erf(x * M_SQRT1_2));
    }
    alloc(out);
    set_backprop(out.node, [this, out, a]() {
        const auto& dout = nodes_[static_cast<std::size_t>(out.node)].grad;
        auto* da = grad_buffer(a.node);
        if (da == nullptr) return;
        for (std::size_t i = 0; i < dout.size(); ++i) {
            const double x = (*a.data)[i];
            const double cdf = 0.5 * (1.0 + std::erf(x * M_SQRT1_2));
            const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
            (*da)[i] += dout[i] * (cdf + x * pdf);
        }
    });
    return out;
}

Tensor Tape::sigmoid(const Tensor& a) {
    Tensor out = Tensor::zeros(a.shape);
    for (std::size_t i = 0; i < out.numel(); ++i) {
        (*out.data)[i] = 1.0 / (1.0 + std::exp(-(*a.data)[i]));
    }
    alloc(out);
    set_backprop(out.node, [this, out, a]() {
        const auto& dout = nodes_[static_cast<std::size_t>(out.node)].grad;
        auto* da = grad_buffer(a.node);
        if (da == nullptr) return;
        for (std::size_t i = 0; i < dout.size(); ++i) {
            const double s = (*out.data)[i];
            (*da)[i] += dout[i] * s * (1.0 - s);
        }
    });
    return out;
}

Tensor Tape::logit(const Tensor& a) {
    Tensor out = Tensor::zeros(a.shape);
    auto clamped = std::make_shared<std::vector<double>>(a.numel());
    for (std::size_t i = 0; i < out.numel(); ++i) {
        const double p = std::clamp((*a.data)[i], kLogitEps, 1.0 - kLogitEps);
        (*clamped)[i] = p;
        (*out.data)[i] = std::log(p / (1.0 - p));
    }
    alloc(out);
    set_backprop(out.node, [this, out, a, clamped]() {
        const auto& dout = nodes_[static_cast<std::size_t>(out.node)].grad;
        auto* da = grad_buffer(a.node);
        if (da == nullptr) return;
        for (std::size_t i = 0; i < dout.size(); ++i) {
            const double p = (*clamped)[i];
            (*da)[i] += dout[i] / (p * (1.0 - p));
        }
    });
    return out;
}

Tensor Tape::gather_rows(const Tensor& a, std::vector<std::size_t> rows) {
    const std::size_t n = a.cols();
    for (std::size_t r : rows) {
        if (r >= a.rows()) throw Error(ErrorKind::IndexOutOfRange, "gather_rows row " + std::to_string(r));
    }
    Tensor out = Tensor::zeros({rows.size(), n});
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < n; ++j) (*out.data)[i * n + j] = (*a.data)[rows[i] * n + j];
    auto index = std::make_shared<std::vector<std::size_t>>(std::move(rows));
    alloc(out);
    set_backprop(out.node, [this, out, a, index, n]() {
        const auto& dout = nodes_[static_cast<std::size_t>(out.node)].grad;
        auto* da = grad_buffer(a.node);
        if (da == nullptr) return;
        for (std::size_t i = 0; i < index->size(); ++i)
            for (std::size_t j = 0; j < n; ++j) (*da)[(*index)[i] * n + j] += dout[i * n + j];
    });
    return out;
}

Tensor Tape::concat_rows(const std::vector<Tensor>& parts) {
    check(!parts.empty(), "concat_rows needs input");
    const std::size_t n = parts.front().cols();
    std::size_t m = 0;
    for (const Tensor& p : parts) {
        check(p.cols() == n, "concat_rows widths");
        m += p.rows();
    }
    Tensor out = Tensor::zeros({m, n});
    std::size_t offset = 0;
    for (const Tensor& p : parts) {
        std::copy(p.data->begin(), p.data->end(), out.data->begin() + static_cast<long>(offset));
        offset += p.numel();
    }
    auto inputs = std::make_shared<std::vector<Tensor>>(parts);
    alloc(out);
    set_backprop(out.node, [this, out, inputs]() {
        const auto& dout = nodes_[static_cast<std::size_t>(out.node)].grad;
        std::size_t offset = 0;
        for (const Tensor& p : *inputs) {
            if (auto* dp = grad_buffer(p.node)) {
                for (std::size_t i = 0; i < p.numel(); ++i) (*dp)[i] += dout[offset + i];
            }
            offset += p.numel();
        }
    });
    return out;
}

Tensor Tape::concat_cols(const std::vector<Tensor>& parts) {
    check(!parts.empty(), "concat_cols needs input");
    const std::size_t m = parts.front().rows();
    std::size_t n = 0;
    for (const Tensor& p : parts) {
        check(p.rows() == m, "concat_cols heights");
        n += p.cols();
    }
    Tensor out = Tensor::zeros({m, n});
    std::size_t col_offset = 0;
    for (const Tensor& p : parts) {
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < p.cols(); ++j)
                (*out.data)[i * n + col_offset + j] = p.at(i, j);
        col_offset += p.cols();
    }
    auto inputs = std::make_shared<std::vector<Tensor>>(parts);
    alloc(out);
    set_backprop(out.node, [this, out, inputs, m, n]() {
        const auto& dout = nodes_[static_cast<std::size_t>(out.node)].grad;
        std::size_t col_offset = 0;
        for (const Tensor& p : *inputs) {
            if (auto* dp = grad_buffer(p.node)) {
                for (std::size_t i = 0; i < m; ++i)
                    for (std::size_t j = 0; j < p.cols(); ++j)
                        (*dp)[i * p.cols() + j] += dout[i * n + col_offset + j];
            }
            col_offset += p.cols();
        }
    });
    return out;
}

Tensor Tape::slice_cols(const Tensor& a, std::size_t start, std::size_t count) {
    const std::size_t m = a.rows(), n = a.cols();
    check(start + count <= n, "slice_cols range");
    Tensor out = Tensor::zeros({m, count});
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < count; ++j) (*out.data)[i * count + j] = (*a.data)[i * n + start + j];
    alloc(out);
    set_backprop(out.node, [this, out, a, start, count, m, n]() {
        const auto& dout = nodes_[static_cast<std::size_t>(out.node)].grad;
        auto* da = grad_buffer(a.node);
        if (da == nullptr) return;
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < count; ++j) (*da)[i * n + start + j] += dout[i * count + j];
    });
    return out;
}

Tensor Tape::roll_cols(const Tensor& a, std::size_t left_shift) {
    const std::size_t m = a.rows(), n = a.cols();
    check(n > 0, "roll_cols width");
    const std::size_t s = left_shift % n;
    Tensor out = Tensor::zeros(a.shape);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) (*out.data)[i * n + j] = (*a.data)[i * n + (j + s) % n];
    alloc(out);
    set_backprop(out.node, [this, out, a, s, m, n]() {
        const auto& dout = nodes_[static_cast<std::size_t>(out.node)].grad;
        auto* da = grad_buffer(a.node);
        if (da == nullptr) return;
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j) (*da)[i * n + (j + s) % n] += dout[i * n + j];
    });
    return out;
}

Tensor Tape::mean(const Tensor& a) {
    const std::size_t total = a.numel();
    check(total > 0, "mean of empty tensor");
    double acc = 0.0;
    for (std::size_t i = 0; i < total; ++i) acc += (*a.data)[i];
    Tensor out = Tensor::scalar(acc / static_cast<double>(total));
    alloc(out);
    set_backprop(out.node, [this, out, a, total]() {
        const auto& dout = nodes_[static_cast<std::size_t>(out.node)].grad;
        auto* da = grad_buffer(a.node);
        if (da == nullptr) return;
        const double d = dout[0] / static_cast<double>(total);
        for (std::size_t i = 0; i < total; ++i) (*da)[i] += d;
    });
    return out;
}

Tensor Tape::pair_dot_rows(const Tensor& q, const Tensor& b) {
    const std::size_t n = q.rows(), d = q.cols();
    check(b.rows() == n * n && b.cols() == d, "pair_dot_rows shapes");
    Tensor out = Tensor::zeros({n, n});
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            double acc = 0.0;
            for (std::size_t k = 0; k < d; ++k) acc += q.at(i, k) * b.at(i * n + j, k);
            (*out.data)[i * n + j] = acc;
        }
    alloc(out);
    set_backprop(out.node, [this, out, q, b, n, d]() {
        const auto& dout = nodes_[static_cast<std::size_t>(out.node)].grad;
        auto* dq = grad_buffer(q.node);
        auto* db = grad_buffer(b.node);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                const double dij = dout[i * n + j];
                if (dij == 0.0) continue;
                for (std::size_t k = 0; k < d; ++k) {
                    if (dq != nullptr) (*dq)[i * d + k] += dij * b.at(i * n + j, k);
                    if (db != nullptr) (*db)[(i * n + j) * d + k] += dij * q.at(i, k);
                }
            }
    });
    return out;
}

Tensor Tape::block_matmul(const Tensor& x, std::vector<std::size_t> blocks, const Tensor& w) {
    const std::size_t m = x.rows(), k = x.cols(), n = w.cols();
    check(blocks.size() == m, "block_matmul block count");
    check(w.rows() % k == 0, "block_matmul stacked height");
    const std::size_t num_blocks = w.rows() / k;
    for (std::size_t b : blocks) check(b < num_blocks, "block_matmul block index");
    Tensor out = Tensor::zeros({m, n});
    for (std::size_t i = 0; i < m; ++i) {
        const std::size_t base = blocks[i] * k;
        for (std::size_t p = 0; p < k; ++p) {
            const double xip = x.at(i, p);
            if (xip == 0.0) continue;
            for (std::size_t j = 0; j < n; ++j) (*out.data)[i * n + j] += xip * w.at(base + p, j);
        }
    }
    auto index = std::make_shared<std::vector<std::size_t>>(std::move(blocks));
    alloc(out);
    set_backprop(out.node, [this, out, x, w, index, m, k, n]() {
        const auto& dout = nodes_[static_cast<std::size_t>(out.node)].grad;
        auto* dx = grad_buffer(x.node);
        auto* dw = grad_buffer(w.node);
        for (std::size_t i = 0; i < m; ++i) {
            const std::size_t base = (*index)[i] * k;
            for (std::size_t j = 0; j < n; ++j) {
                const double d = dout[i * n + j];
                if (d == 0.0) continue;
                for (std::size_t p = 0; p < k; ++p) {
                    if (dx != nullptr) (*dx)[i * k + p] += d * w.at(base + p, j);
                    if (dw != nullptr) (*dw)[(base + p) * n + j] += d * x.at(i, p);
                }
            }
        }
    });
    return out;
}

Tensor Tape::dropout(const Tensor& a, double rate, Rng& rng) {
    if (rate <= 0.0) return a;
    check(rate < 1.0, "dropout rate");
    const double keep = 1.0 - rate;
    auto mask = std::make_shared<std::vector<double>>(a.numel());
    Tensor out = Tensor::zeros(a.shape);
    for (std::size_t i = 0; i < a.numel(); ++i) {
        (*mask)[i] = rng.uniform01() < rate ? 0.0 : 1.0 / keep;
        (*out.data)[i] = (*a.data)[i] * (*mask)[i];
    }
    alloc(out);
    set_backprop(out.node, [this, out, a, mask]() {
        const auto& dout = nodes_[static_cast<std::size_t>(out.node)].grad;
        if (auto* da = grad_buffer(a.node)) {
            for (std::size_t i = 0; i < dout.size(); ++i) (*da)[i] += dout[i] * (*mask)[i];
        }
    });
    return out;
}

Tensor Tape::cross_entropy_logits(const Tensor& logits, std::size_t answer) {
    const std::size_t n = logits.numel();
    if (answer >= n) throw Error(ErrorKind::IndexOutOfRange, "answer " + std::to_string(answer));
    double mx = (*logits.data)[0];
    for (std::size_t i = 1; i < n; ++i) mx = std::max(mx, (*logits.data)[i]);
    double denom = 0.0;
    for (std::size_t i = 0; i < n; ++i) denom += std::exp((*logits.data)[i] - mx);
    const double lse = mx + std::log(denom);
    Tensor out = Tensor::scalar(lse - (*logits.data)[answer]);
    alloc(out);
    set_backprop(out.node, [this, out, logits, answer, n, mx, denom]() {
        const auto& dout = nodes_[static_cast<std::size_t>(out.node)].grad;
        auto* dl = grad_buffer(logits.node);
        if (dl == nullptr) return;
        for (std::size_t i = 0; i < n; ++i) {
            const double soft = std::exp((*logits.data)[i] - mx) / denom;
            (*dl)[i] += dout[0] * (soft - (i == answer ? 1.0 : 0.0));
        }
    });
    return out;
}

GradMap Tape::backward(const Tensor& loss) {
    if (loss.numel() != 1) throw Error(ErrorKind::NotScalar, "loss must be scalar");
    if (loss.node < 0) throw Error(ErrorKind::ConfigError, "loss is not on this tape");
    for (Node& node : nodes_) node.grad.assign(node.value.numel(), 0.0);
    nodes_[static_cast<std::size_t>(loss.node)].grad[0] = 1.0;
    for (std::size_t i = nodes_.size(); i-- > 0;) {
        if (nodes_[i].backprop) nodes_[i].backprop();
    }
    ran_backward_ = true;

    GradMap grads;
    if (store_ != nullptr) {
        for (const std::string& name : store_->names()) {
            auto it = param_nodes_.find(name);
            if (it == param_nodes_.end()) {
                grads.emplace(name, Tensor::zeros(store_->get(name).shape));
            } else {
                const Node& node = nodes_[static_cast<std::size_t>(it->second)];
                grads.emplace(name, Tensor::from(node.value.shape, node.grad));
            }
        }
    }
    return grads;
}

Tensor Tape::grad(const Tensor& leaf) const {
    if (!ran_backward_) throw Error(ErrorKind::ConfigError, "backward has not run");
    if (leaf.node < 0) throw Error(ErrorKind::ConfigError, "tensor is not on this tape");
    const Node& node = nodes_[static_cast<std::size_t>(leaf.node)];
    return Tensor::from(node.value.shape, node.grad);
}

}  // namespace hypercqa::tensor
