#include "aswd/tape.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace aswd {

MultiIndexTable enumerate_multi_indices(int dim, int degree) {
    if (dim < 1 || degree < 1)
        throw ContractError("enumerate_multi_indices: dim and degree must be >= 1");
    MultiIndexTable table;
    table.dim = dim;
    table.degree = degree;
    // Lexicographic descent: leftmost coordinate varies slowest, from the
    // full degree downwards, so (m,0,..) precedes (m-1,1,..) etc.
    std::vector<int> alpha(static_cast<std::size_t>(dim), 0);
    auto recurse = [&](auto&& self, int pos, int remaining) -> void {
        if (pos == dim - 1) {
            alpha[static_cast<std::size_t>(pos)] = remaining;
            table.exponents.push_back(alpha);
            return;
        }
        for (int e = remaining; e >= 0; --e) {
            alpha[static_cast<std::size_t>(pos)] = e;
            self(self, pos + 1, remaining - e);
        }
    };
    recurse(recurse, 0, degree);
    return table;
}

namespace {

// C[m,n] = A[m,k] * B[k,n]
void mm_nn(const double* a, const double* b, double* c,
           std::size_t m, std::size_t k, std::size_t n) {
    std::memset(c, 0, m * n * sizeof(double));
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = a + i * k;
        double* crow = c + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const double av = arow[p];
            const double* brow = b + p * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

// C[m,n] = A[m,k] * B[n,k]^T
void mm_nt(const double* a, const double* b, double* c,
           std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = a + i * k;
        double* crow = c + i * n;
        for (std::size_t j = 0; j < n; ++j) {
            const double* brow = b + j * k;
            double acc = 0.0;
            for (std::size_t p = 0; p < k; ++p) acc += arow[p] * brow[p];
            crow[j] = acc;
        }
    }
}

// C[k,n] += A[m,k]^T * B[m,n]  (accumulating)
void mm_tn_acc(const double* a, const double* b, double* c,
               std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = a + i * k;
        const double* brow = b + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const double av = arow[p];
            double* crow = c + p * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

// C[m,n] += A[m,k] * B[k,n]  (accumulating)
void mm_nn_acc(const double* a, const double* b, double* c,
               std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = a + i * k;
        double* crow = c + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const double av = arow[p];
            const double* brow = b + p * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

// C[m,k] += A[m,n] * B[k,n]^T  (accumulating)
void mm_nt_acc(const double* a, const double* b, double* c,
               std::size_t m, std::size_t n, std::size_t k) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = a + i * n;
        double* crow = c + i * k;
        for (std::size_t p = 0; p < k; ++p) {
            const double* brow = b + p * n;
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j) acc += arow[j] * brow[j];
            crow[p] += acc;
        }
    }
}

double pow_elem(double x, double p) {
    if (p == 2.0) return x * x;
    if (p == 1.0) return x;
    if (p == 3.0) return x * x * x;
    return std::pow(x, p);
}

// d/dx x^p with the subgradient convention d/dx x^p |_{x=0} = 0 for p < 1
// (mirrors the ReLU convention; keeps gradients finite at kinks).
double pow_grad(double x, double p) {
    if (p == 1.0) return 1.0;
    if (x == 0.0) return 0.0;
    if (p == 2.0) return 2.0 * x;
    if (p == 3.0) return 3.0 * x * x;
    return p * std::pow(x, p - 1.0);
}

} // namespace

const char* Tape::op_name(Op op) {
    switch (op) {
        case Op::Leaf: return "leaf";
        case Op::Constant: return "constant";
        case Op::MatMul: return "matmul";
        case Op::MatMulNT: return "matmul_nt";
        case Op::Add: return "add";
        case Op::Sub: return "sub";
        case Op::Mul: return "mul";
        case Op::Scale: return "scale";
        case Op::AddRow: return "add_rowvec";
        case Op::AddCol: return "add_colvec";
        case Op::Relu: return "relu";
        case Op::Abs: return "abs";
        case Op::PowScalar: return "pow_scalar";
        case Op::ConcatCols: return "concat_cols";
        case Op::GatherRows: return "gather_rows";
        case Op::Sum: return "sum";
        case Op::Mean: return "mean";
        case Op::Inner: return "inner";
        case Op::RowL2Norm: return "row_l2norm";
        case Op::Reshape: return "reshape";
        case Op::MonomialFeatures: return "monomial_features";
        case Op::CircularDistances: return "circular_distances";
    }
    return "?";
}

Var Tape::push(Node&& n) {
    n.requires_grad = n.is_leaf || needs_grad(n.a) || needs_grad(n.b);
    if (n.op != Op::Leaf && n.op != Op::Constant) {
        n.value = compute(n);
    }
    if (!n.value.all_finite())
        throw NumericError(std::string(op_name(n.op)) + ": non-finite result");
    nodes_.push_back(std::move(n));
    return Var{static_cast<int>(nodes_.size()) - 1};
}

Var Tape::leaf(Tensor value) {
    Node n;
    n.op = Op::Leaf;
    n.is_leaf = true;
    n.value = std::move(value);
    return push(std::move(n));
}

Var Tape::constant(Tensor value) {
    Node n;
    n.op = Op::Constant;
    n.value = std::move(value);
    return push(std::move(n));
}

Tensor Tape::compute(const Node& n) const {
    const Tensor* A = n.a >= 0 ? &nodes_[n.a].value : nullptr;
    const Tensor* B = n.b >= 0 ? &nodes_[n.b].value : nullptr;
    switch (n.op) {
        case Op::Leaf:
        case Op::Constant:
            return n.value;
        case Op::MatMul: {
            Tensor out({A->rows(), B->cols()});
            mm_nn(A->data(), B->data(), out.data(), A->rows(), A->cols(), B->cols());
            return out;
        }
        case Op::MatMulNT: {
            Tensor out({A->rows(), B->rows()});
            mm_nt(A->data(), B->data(), out.data(), A->rows(), A->cols(), B->rows());
            return out;
        }
        case Op::Add: {
            Tensor out = *A;
            for (std::size_t i = 0; i < out.size(); ++i) out[i] += (*B)[i];
            return out;
        }
        case Op::Sub: {
            Tensor out = *A;
            for (std::size_t i = 0; i < out.size(); ++i) out[i] -= (*B)[i];
            return out;
        }
        case Op::Mul: {
            Tensor out = *A;
            for (std::size_t i = 0; i < out.size(); ++i) out[i] *= (*B)[i];
            return out;
        }
        case Op::Scale: {
            Tensor out = *A;
            for (std::size_t i = 0; i < out.size(); ++i) out[i] *= n.param;
            return out;
        }
        case Op::AddRow: {
            Tensor out = *A;
            const std::size_t m = A->rows(), c = A->cols();
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t j = 0; j < c; ++j) out[i * c + j] += (*B)[j];
            return out;
        }
        case Op::AddCol: {
            Tensor out = *A;
            const std::size_t m = A->rows(), c = A->cols();
            for (std::size_t i = 0; i < m; ++i) {
                const double bi = (*B)[i];
                for (std::size_t j = 0; j < c; ++j) out[i * c + j] += bi;
            }
            return out;
        }
        case Op::Relu: {
            Tensor out = *A;
            for (double& x : out.vec()) x = x > 0.0 ? x : 0.0;
            return out;
        }
        case Op::Abs: {
            Tensor out = *A;
            for (double& x : out.vec()) x = std::fabs(x);
            return out;
        }
        case Op::PowScalar: {
            Tensor out = *A;
            for (double& x : out.vec()) x = pow_elem(x, n.param);
            return out;
        }
        case Op::ConcatCols: {
            const std::size_t m = A->rows(), p = A->cols(), q = B->cols();
            Tensor out(A->rank() == 1 ? std::vector<std::size_t>{p + q}
                                      : std::vector<std::size_t>{m, p + q});
            for (std::size_t i = 0; i < m; ++i) {
                std::memcpy(out.data() + i * (p + q), A->data() + i * p, p * sizeof(double));
                std::memcpy(out.data() + i * (p + q) + p, B->data() + i * q, q * sizeof(double));
            }
            return out;
        }
        case Op::GatherRows: {
            Tensor out(A->shape());
            const std::size_t m = A->rows(), c = A->cols();
            for (std::size_t i = 0; i < m; ++i) {
                const double* src = A->data() + i * c;
                double* dst = out.data() + i * c;
                const std::uint32_t* row = n.idx.data() + i * c;
                for (std::size_t j = 0; j < c; ++j) dst[j] = src[row[j]];
            }
            return out;
        }
        case Op::Sum: {
            double acc = 0.0;
            for (double x : A->vec()) acc += x;
            return Tensor::scalar(acc);
        }
        case Op::Mean: {
            double acc = 0.0;
            for (double x : A->vec()) acc += x;
            return Tensor::scalar(acc / static_cast<double>(A->size()));
        }
        case Op::Inner: {
            double acc = 0.0;
            for (std::size_t i = 0; i < A->size(); ++i) acc += (*A)[i] * (*B)[i];
            return Tensor::scalar(acc);
        }
        case Op::RowL2Norm: {
            const std::size_t m = A->rows(), c = A->cols();
            Tensor out({m});
            for (std::size_t i = 0; i < m; ++i) {
                double acc = 0.0;
                const double* row = A->data() + i * c;
                for (std::size_t j = 0; j < c; ++j) acc += row[j] * row[j];
                out[i] = std::sqrt(acc);
            }
            return out;
        }
        case Op::Reshape: {
            Tensor out = *A;
            return Tensor(n.value.shape().empty() ? out.shape() : n.value.shape(), std::move(out.vec()));
        }
        case Op::MonomialFeatures: {
            const std::size_t m = A->rows(), d = A->cols();
            const std::size_t na = n.table->count();
            Tensor out({m, na});
            for (std::size_t i = 0; i < m; ++i) {
                const double* x = A->data() + i * d;
                double* y = out.data() + i * na;
                for (std::size_t t = 0; t < na; ++t) {
                    const auto& alpha = n.table->exponents[t];
                    double v = 1.0;
                    for (std::size_t j = 0; j < d; ++j)
                        for (int e = 0; e < alpha[j]; ++e) v *= x[j];
                    y[t] = v;
                }
            }
            return out;
        }
        case Op::CircularDistances: {
            const std::size_t nsamp = A->rows(), d = A->cols(), L = B->rows();
            Tensor out({L, nsamp});
            for (std::size_t l = 0; l < L; ++l) {
                const double* th = B->data() + l * d;
                double* row = out.data() + l * nsamp;
                for (std::size_t i = 0; i < nsamp; ++i) {
                    const double* x = A->data() + i * d;
                    double acc = 0.0;
                    for (std::size_t j = 0; j < d; ++j) {
                        const double diff = x[j] - n.param * th[j];
                        acc += diff * diff;
                    }
                    row[i] = std::sqrt(acc);
                }
            }
            return out;
        }
    }
    throw ContractError("tape: unknown op");
}

// Reshape is special-cased: compute() reads the target shape out of n.value,
// so replay() needs the recorded shape kept around. push() stores it first.
Var Tape::reshape(Var a, std::vector<std::size_t> shape) {
    const Tensor& av = value(a);
    std::size_t cnt = 1;
    for (std::size_t e : shape) cnt *= e;
    if (cnt != av.size())
        throw ContractError("reshape: element count mismatch for " + av.shape_string());
    Node n;
    n.op = Op::Reshape;
    n.a = a.id;
    n.value = Tensor(shape, std::vector<double>(av.vec()));
    n.requires_grad = needs_grad(a.id);
    nodes_.push_back(std::move(n));
    return Var{static_cast<int>(nodes_.size()) - 1};
}

Var Tape::matmul(Var a, Var b) {
    const Tensor &av = value(a), &bv = value(b);
    if (av.rank() != 2 || bv.rank() != 2 || av.cols() != bv.rows())
        throw ContractError("matmul: shapes " + av.shape_string() + " x " + bv.shape_string());
    Node n;
    n.op = Op::MatMul;
    n.a = a.id;
    n.b = b.id;
    return push(std::move(n));
}

Var Tape::matmul_nt(Var a, Var b) {
    const Tensor &av = value(a), &bv = value(b);
    if (av.rank() != 2 || bv.rank() != 2 || av.cols() != bv.cols())
        throw ContractError("matmul_nt: shapes " + av.shape_string() + " x " + bv.shape_string() + "^T");
    Node n;
    n.op = Op::MatMulNT;
    n.a = a.id;
    n.b = b.id;
    return push(std::move(n));
}

Var Tape::add(Var a, Var b) {
    if (!value(a).same_shape(value(b)))
        throw ContractError("add: shapes " + value(a).shape_string() + " vs " + value(b).shape_string());
    Node n;
    n.op = Op::Add;
    n.a = a.id;
    n.b = b.id;
    return push(std::move(n));
}

Var Tape::sub(Var a, Var b) {
    if (!value(a).same_shape(value(b)))
        throw ContractError("sub: shapes " + value(a).shape_string() + " vs " + value(b).shape_string());
    Node n;
    n.op = Op::Sub;
    n.a = a.id;
    n.b = b.id;
    return push(std::move(n));
}

Var Tape::mul(Var a, Var b) {
    if (!value(a).same_shape(value(b)))
        throw ContractError("mul: shapes " + value(a).shape_string() + " vs " + value(b).shape_string());
    Node n;
    n.op = Op::Mul;
    n.a = a.id;
    n.b = b.id;
    return push(std::move(n));
}

Var Tape::scale(Var a, double c) {
    Node n;
    n.op = Op::Scale;
    n.a = a.id;
    n.param = c;
    return push(std::move(n));
}

Var Tape::add_rowvec(Var a, Var r) {
    if (value(a).cols() != value(r).size())
        throw ContractError("add_rowvec: " + value(a).shape_string() + " + " + value(r).shape_string());
    Node n;
    n.op = Op::AddRow;
    n.a = a.id;
    n.b = r.id;
    return push(std::move(n));
}

Var Tape::add_colvec(Var a, Var c) {
    if (value(a).rows() != value(c).size())
        throw ContractError("add_colvec: " + value(a).shape_string() + " + " + value(c).shape_string());
    Node n;
    n.op = Op::AddCol;
    n.a = a.id;
    n.b = c.id;
    return push(std::move(n));
}

Var Tape::relu(Var a) {
    Node n;
    n.op = Op::Relu;
    n.a = a.id;
    return push(std::move(n));
}

Var Tape::abs(Var a) {
    Node n;
    n.op = Op::Abs;
    n.a = a.id;
    return push(std::move(n));
}

Var Tape::pow_scalar(Var a, double p) {
    Node n;
    n.op = Op::PowScalar;
    n.a = a.id;
    n.param = p;
    return push(std::move(n));
}

Var Tape::concat_cols(Var a, Var b) {
    const Tensor &av = value(a), &bv = value(b);
    if (av.rank() != bv.rank() || av.rank() > 2 || av.rows() != bv.rows())
        throw ContractError("concat_cols: " + av.shape_string() + " | " + bv.shape_string());
    Node n;
    n.op = Op::ConcatCols;
    n.a = a.id;
    n.b = b.id;
    return push(std::move(n));
}

Var Tape::gather_rows(Var a, std::vector<std::uint32_t> idx) {
    const Tensor& av = value(a);
    if (idx.size() != av.size())
        throw ContractError("gather_rows: index count != element count");
    const std::size_t m = av.rows(), c = av.cols();
    // Each row's indices must form a permutation of 0..c-1.
    std::vector<bool> seen(c);
    for (std::size_t i = 0; i < m; ++i) {
        std::fill(seen.begin(), seen.end(), false);
        for (std::size_t j = 0; j < c; ++j) {
            const std::uint32_t v = idx[i * c + j];
            if (v >= c || seen[v])
                throw ContractError("gather_rows: indices are not a permutation");
            seen[v] = true;
        }
    }
    return gather_rows_unchecked(a, std::move(idx));
}

Var Tape::gather_rows_unchecked(Var a, std::vector<std::uint32_t> idx) {
    Node n;
    n.op = Op::GatherRows;
    n.a = a.id;
    n.idx = std::move(idx);
    return push(std::move(n));
}

Var Tape::sum(Var a) {
    Node n;
    n.op = Op::Sum;
    n.a = a.id;
    return push(std::move(n));
}

Var Tape::mean(Var a) {
    Node n;
    n.op = Op::Mean;
    n.a = a.id;
    return push(std::move(n));
}

Var Tape::inner(Var a, Var b) {
    if (value(a).size() != value(b).size())
        throw ContractError("inner: lengths differ");
    Node n;
    n.op = Op::Inner;
    n.a = a.id;
    n.b = b.id;
    return push(std::move(n));
}

Var Tape::row_l2norm(Var a) {
    Node n;
    n.op = Op::RowL2Norm;
    n.a = a.id;
    return push(std::move(n));
}

Var Tape::monomial_features(Var a, std::shared_ptr<const MultiIndexTable> table) {
    if (value(a).cols() != static_cast<std::size_t>(table->dim))
        throw ContractError("monomial_features: sample dim != table dim");
    Node n;
    n.op = Op::MonomialFeatures;
    n.a = a.id;
    n.table = std::move(table);
    return push(std::move(n));
}

Var Tape::circular_distances(Var x, Var theta, double radius) {
    if (value(x).cols() != value(theta).cols())
        throw ContractError("circular_distances: sample dim != direction dim");
    if (radius <= 0.0) throw ContractError("circular_distances: radius must be positive");
    Node n;
    n.op = Op::CircularDistances;
    n.a = x.id;
    n.b = theta.id;
    n.param = radius;
    return push(std::move(n));
}

Tensor& Tape::grad_buffer(int id) {
    Node& n = nodes_[id];
    if (n.grad.size() == 0) n.grad = Tensor(n.value.shape());
    return n.grad;
}

void Tape::backward(Var output) {
    if (!output.valid() || static_cast<std::size_t>(output.id) >= nodes_.size())
        throw ContractError("backward: invalid output node");
    if (nodes_[output.id].value.size() != 1)
        throw ContractError("backward: output is not scalar");
    // Drop any gradients from a previous pass.
    for (Node& n : nodes_) n.grad = Tensor();
    grad_buffer(output.id)[0] = 1.0;
    for (int id = output.id; id >= 0; --id) {
        Node& n = nodes_[id];
        if (n.grad.size() == 0 || !n.requires_grad) continue;
        accumulate_inputs(n);
        if (!n.is_leaf) n.grad = Tensor(); // release non-leaf storage
    }
    for (Node& n : nodes_) {
        if (n.is_leaf && n.grad.size() == 0) n.grad = Tensor(n.value.shape());
    }
}

void Tape::accumulate_inputs(Node& n) {
    const Tensor& g = n.grad;
    switch (n.op) {
        case Op::Leaf:
        case Op::Constant:
            return;
        case Op::MatMul: {
            const Tensor& A = nodes_[n.a].value;
            const Tensor& B = nodes_[n.b].value;
            if (needs_grad(n.a)) // dA += g * B^T
                mm_nt_acc(g.data(), B.data(), grad_buffer(n.a).data(),
                          g.rows(), g.cols(), B.rows());
            if (needs_grad(n.b)) // dB += A^T * g
                mm_tn_acc(A.data(), g.data(), grad_buffer(n.b).data(),
                          A.rows(), A.cols(), g.cols());
            return;
        }
        case Op::MatMulNT: {
            const Tensor& A = nodes_[n.a].value;
            const Tensor& B = nodes_[n.b].value;
            if (needs_grad(n.a)) // dA += g * B
                mm_nn_acc(g.data(), B.data(), grad_buffer(n.a).data(),
                          g.rows(), g.cols(), B.cols());
            if (needs_grad(n.b)) // dB += g^T * A
                mm_tn_acc(g.data(), A.data(), grad_buffer(n.b).data(),
                          g.rows(), g.cols(), A.cols());
            return;
        }
        case Op::Add: {
            if (needs_grad(n.a)) {
                Tensor& d = grad_buffer(n.a);
                for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i];
            }
            if (needs_grad(n.b)) {
                Tensor& d = grad_buffer(n.b);
                for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i];
            }
            return;
        }
        case Op::Sub: {
            if (needs_grad(n.a)) {
                Tensor& d = grad_buffer(n.a);
                for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i];
            }
            if (needs_grad(n.b)) {
                Tensor& d = grad_buffer(n.b);
                for (std::size_t i = 0; i < g.size(); ++i) d[i] -= g[i];
            }
            return;
        }
        case Op::Mul: {
            const Tensor& A = nodes_[n.a].value;
            const Tensor& B = nodes_[n.b].value;
            if (needs_grad(n.a)) {
                Tensor& d = grad_buffer(n.a);
                for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i] * B[i];
            }
            if (needs_grad(n.b)) {
                Tensor& d = grad_buffer(n.b);
                for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i] * A[i];
            }
            return;
        }
        case Op::Scale: {
            if (needs_grad(n.a)) {
                Tensor& d = grad_buffer(n.a);
                for (std::size_t i = 0; i < g.size(); ++i) d[i] += n.param * g[i];
            }
            return;
        }
        case Op::AddRow: {
            if (needs_grad(n.a)) {
                Tensor& d = grad_buffer(n.a);
                for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i];
            }
            if (needs_grad(n.b)) {
                Tensor& d = grad_buffer(n.b);
                const std::size_t m = g.rows(), c = g.cols();
                for (std::size_t i = 0; i < m; ++i)
                    for (std::size_t j = 0; j < c; ++j) d[j] += g[i * c + j];
            }
            return;
        }
        case Op::AddCol: {
            if (needs_grad(n.a)) {
                Tensor& d = grad_buffer(n.a);
                for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i];
            }
            if (needs_grad(n.b)) {
                Tensor& d = grad_buffer(n.b);
                const std::size_t m = g.rows(), c = g.cols();
                for (std::size_t i = 0; i < m; ++i) {
                    double acc = 0.0;
                    for (std::size_t j = 0; j < c; ++j) acc += g[i * c + j];
                    d[i] += acc;
                }
            }
            return;
        }
        case Op::Relu: {
            if (needs_grad(n.a)) {
                const Tensor& A = nodes_[n.a].value;
                Tensor& d = grad_buffer(n.a);
                for (std::size_t i = 0; i < g.size(); ++i)
                    if (A[i] > 0.0) d[i] += g[i];
            }
            return;
        }
        case Op::Abs: {
            if (needs_grad(n.a)) {
                const Tensor& A = nodes_[n.a].value;
                Tensor& d = grad_buffer(n.a);
                for (std::size_t i = 0; i < g.size(); ++i) {
                    if (A[i] > 0.0) d[i] += g[i];
                    else if (A[i] < 0.0) d[i] -= g[i];
                }
            }
            return;
        }
        case Op::PowScalar: {
            if (needs_grad(n.a)) {
                const Tensor& A = nodes_[n.a].value;
                Tensor& d = grad_buffer(n.a);
                for (std::size_t i = 0; i < g.size(); ++i)
                    d[i] += g[i] * pow_grad(A[i], n.param);
            }
            return;
        }
        case Op::ConcatCols: {
            const std::size_t m = nodes_[n.a].value.rows();
            const std::size_t p = nodes_[n.a].value.cols();
            const std::size_t q = nodes_[n.b].value.cols();
            if (needs_grad(n.a)) {
                Tensor& d = grad_buffer(n.a);
                for (std::size_t i = 0; i < m; ++i)
                    for (std::size_t j = 0; j < p; ++j) d[i * p + j] += g[i * (p + q) + j];
            }
            if (needs_grad(n.b)) {
                Tensor& d = grad_buffer(n.b);
                for (std::size_t i = 0; i < m; ++i)
                    for (std::size_t j = 0; j < q; ++j) d[i * q + j] += g[i * (p + q) + p + j];
            }
            return;
        }
        case Op::GatherRows: {
            if (needs_grad(n.a)) {
                Tensor& d = grad_buffer(n.a);
                const std::size_t m = g.rows(), c = g.cols();
                for (std::size_t i = 0; i < m; ++i) {
                    const std::uint32_t* row = n.idx.data() + i * c;
                    double* drow = d.data() + i * c;
                    const double* grow = g.data() + i * c;
                    for (std::size_t j = 0; j < c; ++j) drow[row[j]] += grow[j];
                }
            }
            return;
        }
        case Op::Sum: {
            if (needs_grad(n.a)) {
                Tensor& d = grad_buffer(n.a);
                const double gv = g[0];
                for (double& x : d.vec()) x += gv;
            }
            return;
        }
        case Op::Mean: {
            if (needs_grad(n.a)) {
                Tensor& d = grad_buffer(n.a);
                const double gv = g[0] / static_cast<double>(d.size());
                for (double& x : d.vec()) x += gv;
            }
            return;
        }
        case Op::Inner: {
            const Tensor& A = nodes_[n.a].value;
            const Tensor& B = nodes_[n.b].value;
            const double gv = g[0];
            if (needs_grad(n.a)) {
                Tensor& d = grad_buffer(n.a);
                for (std::size_t i = 0; i < A.size(); ++i) d[i] += gv * B[i];
            }
            if (needs_grad(n.b)) {
                Tensor& d = grad_buffer(n.b);
                for (std::size_t i = 0; i < B.size(); ++i) d[i] += gv * A[i];
            }
            return;
        }
        case Op::RowL2Norm: {
            if (needs_grad(n.a)) {
                const Tensor& A = nodes_[n.a].value;
                Tensor& d = grad_buffer(n.a);
                const std::size_t m = A.rows(), c = A.cols();
                for (std::size_t i = 0; i < m; ++i) {
                    const double norm = n.value[i];
                    if (norm == 0.0) continue; // subgradient 0 at the kink
                    const double gv = g[i] / norm;
                    const double* row = A.data() + i * c;
                    double* drow = d.data() + i * c;
                    for (std::size_t j = 0; j < c; ++j) drow[j] += gv * row[j];
                }
            }
            return;
        }
        case Op::Reshape: {
            if (needs_grad(n.a)) {
                Tensor& d = grad_buffer(n.a);
                for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i];
            }
            return;
        }
        case Op::MonomialFeatures: {
            if (needs_grad(n.a)) {
                const Tensor& A = nodes_[n.a].value;
                Tensor& d = grad_buffer(n.a);
                const std::size_t m = A.rows(), dd = A.cols();
                const std::size_t na = n.table->count();
                for (std::size_t i = 0; i < m; ++i) {
                    const double* x = A.data() + i * dd;
                    double* drow = d.data() + i * dd;
                    const double* grow = g.data() + i * na;
                    for (std::size_t t = 0; t < na; ++t) {
                        const auto& alpha = n.table->exponents[t];
                        for (std::size_t j = 0; j < dd; ++j) {
                            if (alpha[j] == 0) continue;
                            double v = static_cast<double>(alpha[j]);
                            for (std::size_t jj = 0; jj < dd; ++jj) {
                                const int e = jj == j ? alpha[jj] - 1 : alpha[jj];
                                for (int rep = 0; rep < e; ++rep) v *= x[jj];
                            }
                            drow[j] += grow[t] * v;
                        }
                    }
                }
            }
            return;
        }
        case Op::CircularDistances: {
            const Tensor& X = nodes_[n.a].value;
            const Tensor& T = nodes_[n.b].value;
            const std::size_t nsamp = X.rows(), d = X.cols(), L = T.rows();
            const double r = n.param;
            if (needs_grad(n.a)) {
                Tensor& dx = grad_buffer(n.a);
                for (std::size_t l = 0; l < L; ++l) {
                    const double* th = T.data() + l * d;
                    const double* grow = g.data() + l * nsamp;
                    for (std::size_t i = 0; i < nsamp; ++i) {
                        const double dist = n.value[l * nsamp + i];
                        if (dist == 0.0) continue;
                        const double gv = grow[i] / dist;
                        const double* x = X.data() + i * d;
                        double* drow = dx.data() + i * d;
                        for (std::size_t j = 0; j < d; ++j)
                            drow[j] += gv * (x[j] - r * th[j]);
                    }
                }
            }
            if (needs_grad(n.b)) {
                Tensor& dt = grad_buffer(n.b);
                for (std::size_t l = 0; l < L; ++l) {
                    const double* th = T.data() + l * d;
                    const double* grow = g.data() + l * nsamp;
                    double* drow = dt.data() + l * d;
                    for (std::size_t i = 0; i < nsamp; ++i) {
                        const double dist = n.value[l * nsamp + i];
                        if (dist == 0.0) continue;
                        const double gv = -r * grow[i] / dist;
                        const double* x = X.data() + i * d;
                        for (std::size_t j = 0; j < d; ++j)
                            drow[j] += gv * (x[j] - r * th[j]);
                    }
                }
            }
            return;
        }
    }
}

const Tensor& Tape::grad(Var leaf) const {
    const Node& n = nodes_.at(leaf.id);
    if (!n.is_leaf) throw ContractError("grad: node is not a leaf");
    return n.grad;
}

Tensor Tape::replay(Var v) const {
    return compute(nodes_.at(v.id));
}

void Tape::clear() {
    nodes_.clear();
}

} // namespace aswd
