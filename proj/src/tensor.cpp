#include "percept/tensor.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

namespace percept {

std::int64_t numel(const Shape& shape) {
    std::int64_t n = 1;
    for (int d : shape) {
        if (d <= 0) throw TensorError("non-positive dimension in shape " + shape_str(shape));
        n *= d;
    }
    return n;
}

std::string shape_str(const Shape& shape) {
    std::string s = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) s += "x";
        s += std::to_string(shape[i]);
    }
    return s + "]";
}

Tensor::Tensor(Shape shape, std::vector<double> data, bool requires_grad) {
    const std::int64_t n = numel(shape);
    if (n != static_cast<std::int64_t>(data.size()))
        throw TensorError("data length " + std::to_string(data.size()) + " does not match shape " +
                          shape_str(shape));
    node_ = std::make_shared<detail::TensorNode>();
    node_->shape = std::move(shape);
    node_->data = std::move(data);
    node_->requires_grad = requires_grad;
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
    const std::int64_t n = numel(shape);
    return Tensor(std::move(shape), std::vector<double>(static_cast<std::size_t>(n), 0.0), requires_grad);
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
    const std::int64_t n = numel(shape);
    return Tensor(std::move(shape), std::vector<double>(static_cast<std::size_t>(n), value), requires_grad);
}

Tensor Tensor::scalar(double value, bool requires_grad) {
    return Tensor({1}, {value}, requires_grad);
}

std::vector<double>& Tensor::grad() {
    if (node_->grad.empty()) node_->grad.assign(node_->data.size(), 0.0);
    return node_->grad;
}

const std::vector<double>& Tensor::grad() const {
    if (node_->grad.empty()) throw TensorError("gradient not populated");
    return node_->grad;
}

void Tensor::accumulate_grad(const double* g, std::int64_t n) {
    if (n != size()) throw TensorError("gradient size mismatch");
    auto& dst = grad();
    for (std::int64_t i = 0; i < n; ++i) dst[static_cast<std::size_t>(i)] += g[i];
}

void Tensor::zero_grad() {
    if (!node_->grad.empty()) std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

double Tensor::value() const {
    if (size() != 1) throw TensorError("value() requires a single-element tensor, got " + shape_str(shape()));
    return node_->data[0];
}

Tensor Tensor::clone() const {
    Tensor t(node_->shape, node_->data, node_->requires_grad);
    t.node_->grad = node_->grad;
    return t;
}

Tensor Tensor::detached() const {
    return Tensor(node_->shape, node_->data, false);
}

void Tape::backward(Tensor& loss) {
    if (loss.size() != 1) throw TensorError("backward requires a scalar loss, got " + shape_str(loss.shape()));
    loss.grad()[0] += 1.0;
    for (auto it = ops_.rbegin(); it != ops_.rend(); ++it) (*it)();
    ops_.clear();
}

void check_finite(const std::vector<double>& values, const char* op_name) {
    for (double v : values) {
        if (!std::isfinite(v))
            throw TensorError(std::string("non-finite value in output of ") + op_name);
    }
}

namespace {

void write_u16(std::ofstream& os, std::uint16_t v) {
    unsigned char b[2] = {static_cast<unsigned char>(v & 0xff), static_cast<unsigned char>(v >> 8)};
    os.write(reinterpret_cast<const char*>(b), 2);
}

void write_u64(std::ofstream& os, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(b), 8);
}

std::uint16_t read_u16(std::ifstream& is) {
    unsigned char b[2];
    is.read(reinterpret_cast<char*>(b), 2);
    return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
}

std::uint64_t read_u64(std::ifstream& is) {
    unsigned char b[8];
    is.read(reinterpret_cast<char*>(b), 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

constexpr std::uint16_t kPtnsVersion = 1;

}  // namespace

void save_tensor(const std::string& path, const Tensor& t) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw TensorError("cannot open " + path + " for writing");
    os.write("PTNS", 4);
    write_u16(os, kPtnsVersion);
    write_u16(os, static_cast<std::uint16_t>(t.shape().size()));
    for (int d : t.shape()) write_u64(os, static_cast<std::uint64_t>(d));
    static_assert(sizeof(double) == 8);
    // Assumes little-endian host, as does every target this builds on.
    os.write(reinterpret_cast<const char*>(t.data().data()),
             static_cast<std::streamsize>(t.data().size() * sizeof(double)));
    if (!os) throw TensorError("short write to " + path);
}

Tensor load_tensor(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw TensorError("cannot open " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "PTNS", 4) != 0) throw TensorError(path + ": not a PTNS tensor");
    const std::uint16_t version = read_u16(is);
    if (version != kPtnsVersion)
        throw TensorError(path + ": unsupported PTNS version " + std::to_string(version));
    const std::uint16_t rank = read_u16(is);
    Shape shape(rank);
    for (int i = 0; i < rank; ++i) {
        const std::uint64_t d = read_u64(is);
        if (d == 0 || d > (1ull << 31)) throw TensorError(path + ": bad dimension");
        shape[i] = static_cast<int>(d);
    }
    if (!is) throw TensorError(path + ": truncated header");
    const std::int64_t n = numel(shape);
    std::vector<double> data(static_cast<std::size_t>(n));
    is.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(data.size() * sizeof(double)));
    if (!is) throw TensorError(path + ": truncated data");
    return Tensor(std::move(shape), std::move(data));
}

}  // namespace percept
