// Differentiable operations. Every op validates shapes, rejects non-finite
// outputs, and records its backward pass on the tape when any input
// requires gradients (pass tape=nullptr for inference).
#pragma once

#include "percept/tensor.hpp"

namespace percept::ops {

enum class Padding { Same, Valid };

// input [n_in] x weight [n_in x n_out] (+ bias [n_out]) -> [n_out]
Tensor dense(Tape* tape, const Tensor& input, const Tensor& weight, const Tensor* bias);

// input [h x w x c_in], kernel [kh x kw x c_in x c_out] -> [ho x wo x c_out]
// "same": ho = ceil(h/stride); "valid": ho = floor((h-kh)/stride)+1.
Tensor conv2d(Tape* tape, const Tensor& input, const Tensor& kernel, const Tensor* bias,
              int stride, Padding padding);

// 2x2 window max, stride 2; gradient goes to the argmax (first element in
// row-major window order on ties). Spatial dims must be even.
Tensor maxpool2(Tape* tape, const Tensor& input);

Tensor relu(Tape* tape, const Tensor& x);
Tensor sigmoid(Tape* tape, const Tensor& x);

// Rank-1 inputs only; order-preserving.
Tensor concat(Tape* tape, const std::vector<Tensor>& parts);

// Mean of squared differences; scalar output.
Tensor mse(Tape* tape, const Tensor& pred, const Tensor& target);

Tensor add(Tape* tape, const Tensor& a, const Tensor& b);
Tensor scale(Tape* tape, const Tensor& x, double c);
Tensor reshape(Tape* tape, const Tensor& x, Shape new_shape);

}  // namespace percept::ops
