#pragma once

#include <functional>
#include <vector>

#include "aswd/tape.hpp"

namespace aswd {

// Builds a recorded scalar from leaves created by the checker.
using RecordedScalarFn = std::function<Var(Tape&, const std::vector<Var>&)>;

// Compares the reverse-mode gradient of fn at the given points against
// central finite differences with the given step. Returns the maximum over
// all coordinates of |ad - fd| / max(1, |ad|, |fd|).
double gradient_check(const RecordedScalarFn& fn, const std::vector<Tensor>& points, double step);

// Single-input convenience overload.
double gradient_check(const std::function<Var(Tape&, Var)>& fn, const Tensor& point, double step);

} // namespace aswd
