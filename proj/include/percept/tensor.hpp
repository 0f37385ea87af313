// Dense 64-bit tensors with a reverse-mode gradient tape.
#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace percept {

using Shape = std::vector<int>;

struct TensorError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::int64_t numel(const Shape& shape);
std::string shape_str(const Shape& shape);

namespace detail {
struct TensorNode {
    Shape shape;
    std::vector<double> data;
    std::vector<double> grad;  // empty until first accumulation
    bool requires_grad = false;
};
}  // namespace detail

// Shared handle: copies alias the same storage, clone() deep-copies.
class Tensor {
public:
    Tensor() = default;
    Tensor(Shape shape, std::vector<double> data, bool requires_grad = false);

    static Tensor zeros(Shape shape, bool requires_grad = false);
    static Tensor full(Shape shape, double value, bool requires_grad = false);
    static Tensor scalar(double value, bool requires_grad = false);

    bool valid() const { return node_ != nullptr; }
    const Shape& shape() const { return node_->shape; }
    std::int64_t size() const { return static_cast<std::int64_t>(node_->data.size()); }

    std::vector<double>& data() { return node_->data; }
    const std::vector<double>& data() const { return node_->data; }
    double operator[](std::int64_t i) const { return node_->data[static_cast<std::size_t>(i)]; }

    bool requires_grad() const { return node_->requires_grad; }
    void set_requires_grad(bool v) { node_->requires_grad = v; }

    bool has_grad() const { return !node_->grad.empty(); }
    std::vector<double>& grad();              // allocates zeros on first use
    const std::vector<double>& grad() const;  // throws if absent
    void accumulate_grad(const double* g, std::int64_t n);
    void zero_grad();
    void drop_grad() { node_->grad.clear(); node_->grad.shrink_to_fit(); }

    double value() const;  // single-element tensors only
    Tensor clone() const;
    Tensor detached() const;  // clone without requires_grad

    bool same_storage(const Tensor& other) const { return node_ == other.node_; }

private:
    std::shared_ptr<detail::TensorNode> node_;
};

// Ordered record of executed ops; backward() replays it once in reverse
// and leaves the tape empty.
class Tape {
public:
    void record(std::function<void()> backward_fn) { ops_.push_back(std::move(backward_fn)); }
    std::size_t size() const { return ops_.size(); }
    void clear() { ops_.clear(); }
    void backward(Tensor& loss);

private:
    std::vector<std::function<void()>> ops_;
};

// Flat binary tensor format: "PTNS", version u16, rank u16, dims u64 each,
// then raw little-endian f64 values.
void save_tensor(const std::string& path, const Tensor& t);
Tensor load_tensor(const std::string& path);

void check_finite(const std::vector<double>& values, const char* op_name);

}  // namespace percept
