#pragma once

#include "aswd/tensor.hpp"

namespace aswd {

// A differentiable value with its gradient accumulator.
struct Parameter {
    Tensor value;
    Tensor grad;

    explicit Parameter(Tensor v) : value(std::move(v)), grad(value.shape()) {}

    void reset_grad() {
        for (double& x : grad.vec()) x = 0.0;
    }
};

// Per-parameter Adam state with the usual bias-corrected update.
struct AdamState {
    Tensor first_moment;
    Tensor second_moment;
    long step = 0;
    double learning_rate;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    AdamState(std::vector<std::size_t> shape, double lr)
        : first_moment(shape), second_moment(std::move(shape)), learning_rate(lr) {}
};

// One Adam update (descent direction -grad). Resets the gradient to zero.
void adam_step(Parameter& param, AdamState& state);

} // namespace aswd
