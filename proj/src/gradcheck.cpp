#include "aswd/gradcheck.hpp"

#include <cmath>

#include "aswd/errors.hpp"

namespace aswd {

namespace {

double evaluate(const RecordedScalarFn& fn, const std::vector<Tensor>& points) {
    Tape tape;
    std::vector<Var> leaves;
    leaves.reserve(points.size());
    for (const Tensor& p : points) leaves.push_back(tape.leaf(p));
    Var out = fn(tape, leaves);
    if (tape.value(out).size() != 1)
        throw ContractError("gradient_check: function is not scalar-valued");
    return tape.value(out)[0];
}

} // namespace

double gradient_check(const RecordedScalarFn& fn, const std::vector<Tensor>& points, double step) {
    if (!(step > 0.0)) throw ContractError("gradient_check: step must be positive");

    Tape tape;
    std::vector<Var> leaves;
    for (const Tensor& p : points) leaves.push_back(tape.leaf(p));
    Var out = fn(tape, leaves);
    if (tape.value(out).size() != 1)
        throw ContractError("gradient_check: function is not scalar-valued");
    tape.backward(out);

    double max_err = 0.0;
    std::vector<Tensor> perturbed = points;
    for (std::size_t p = 0; p < points.size(); ++p) {
        const Tensor& analytic = tape.grad(leaves[p]);
        for (std::size_t i = 0; i < points[p].size(); ++i) {
            const double orig = perturbed[p][i];
            perturbed[p][i] = orig + step;
            const double fp = evaluate(fn, perturbed);
            perturbed[p][i] = orig - step;
            const double fm = evaluate(fn, perturbed);
            perturbed[p][i] = orig;
            if (!std::isfinite(fp) || !std::isfinite(fm))
                throw NumericError("gradient_check: non-finite evaluation");
            const double fd = (fp - fm) / (2.0 * step);
            const double ad = analytic[i];
            const double denom = std::max({1.0, std::fabs(ad), std::fabs(fd)});
            max_err = std::max(max_err, std::fabs(ad - fd) / denom);
        }
    }
    return max_err;
}

double gradient_check(const std::function<Var(Tape&, Var)>& fn, const Tensor& point, double step) {
    return gradient_check(
        [&fn](Tape& t, const std::vector<Var>& leaves) { return fn(t, leaves[0]); },
        {point}, step);
}

} // namespace aswd
