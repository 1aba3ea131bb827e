#include "aswd/optim.hpp"

#include <cmath>

#include "aswd/errors.hpp"

namespace aswd {

void adam_step(Parameter& param, AdamState& state) {
    if (!state.first_moment.same_shape(param.value))
        throw ContractError("adam_step: state shape " + state.first_moment.shape_string() +
                            " != parameter shape " + param.value.shape_string());
    if (!(state.learning_rate > 0.0))
        throw ContractError("adam_step: learning rate must be positive");

    state.step += 1;
    const double b1 = state.beta1, b2 = state.beta2;
    const double bc1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < param.value.size(); ++i) {
        const double g = param.grad[i];
        state.first_moment[i] = b1 * state.first_moment[i] + (1.0 - b1) * g;
        state.second_moment[i] = b2 * state.second_moment[i] + (1.0 - b2) * g * g;
        const double mhat = state.first_moment[i] / bc1;
        const double vhat = state.second_moment[i] / bc2;
        param.value[i] -= state.learning_rate * mhat / (std::sqrt(vhat) + state.epsilon);
    }
    param.value.require_finite("adam_step");
    param.reset_grad();
}

} // namespace aswd
