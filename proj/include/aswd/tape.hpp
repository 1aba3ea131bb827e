#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "aswd/tensor.hpp"

namespace aswd {

// Exponent table of all multi-indices with |alpha| = degree for a given
// input dimension, in lexicographic order.
struct MultiIndexTable {
    int dim = 0;
    int degree = 0;
    std::vector<std::vector<int>> exponents; // each of length dim, sum == degree
    std::size_t count() const { return exponents.size(); }
};

MultiIndexTable enumerate_multi_indices(int dim, int degree);

// Handle into a Tape.
struct Var {
    int id = -1;
    bool valid() const { return id >= 0; }
};

// Append-only record of primitive operations over tensors, supporting
// reverse-mode gradient evaluation. Single-writer: a tape must not be
// mutated concurrently; independent tapes may run in parallel.
class Tape {
public:
    Tape() = default;

    // --- inputs ------------------------------------------------------
    Var leaf(Tensor value);     // differentiable input
    Var constant(Tensor value); // non-differentiable input

    // --- primitives ---------------------------------------------------
    Var matmul(Var a, Var b);    // [m,k]x[k,n] -> [m,n]
    Var matmul_nt(Var a, Var b); // [m,k]x([n,k])^T -> [m,n]
    Var add(Var a, Var b);       // same shape
    Var sub(Var a, Var b);       // same shape
    Var mul(Var a, Var b);       // elementwise, same shape
    Var scale(Var a, double c);
    Var add_rowvec(Var a, Var r); // [m,n] + [n] broadcast down rows
    Var add_colvec(Var a, Var c); // [m,n] + [m] broadcast across columns
    Var relu(Var a);              // derivative at 0 is 0
    Var abs(Var a);               // derivative at 0 is 0
    Var pow_scalar(Var a, double p);
    Var concat_cols(Var a, Var b); // [m,p]|[m,q] -> [m,p+q]; rank-1 allowed
    // y[r, j] = x[r, idx[r*n + j]]; idx holds one permutation of 0..n-1 per row
    Var gather_rows(Var a, std::vector<std::uint32_t> idx);
    // same, for indices already known to be per-row permutations (skips the
    // permutation validation; used by the sort-based estimator pipelines)
    Var gather_rows_unchecked(Var a, std::vector<std::uint32_t> idx);
    Var sum(Var a);  // -> [1]
    Var mean(Var a); // -> [1]
    Var inner(Var a, Var b); // rank-1 dot -> [1]
    Var row_l2norm(Var a);   // [m,n] -> [m]
    Var reshape(Var a, std::vector<std::size_t> shape);
    // y[r, i] = prod_j x[r, j]^exponents[i][j]
    Var monomial_features(Var a, std::shared_ptr<const MultiIndexTable> table);
    // y[l, n] = || x[n,:] - radius * theta[l,:] ||_2
    Var circular_distances(Var x, Var theta, double radius);

    // --- evaluation ----------------------------------------------------
    const Tensor& value(Var v) const { return nodes_[v.id].value; }

    // Reverse-mode pass from a scalar output. Fills gradients of leaves;
    // intermediate gradient storage is released before returning.
    void backward(Var output);

    // Gradient of the last backward() with respect to a leaf.
    const Tensor& grad(Var leaf) const;

    // Recompute the forward value of a node from the recorded inputs.
    // Reproduces the stored value bit-exactly; used by replay checks.
    Tensor replay(Var v) const;

    std::size_t node_count() const { return nodes_.size(); }
    void clear();

private:
    enum class Op : std::uint8_t {
        Leaf, Constant, MatMul, MatMulNT, Add, Sub, Mul, Scale, AddRow, AddCol,
        Relu, Abs, PowScalar, ConcatCols, GatherRows, Sum, Mean, Inner,
        RowL2Norm, Reshape, MonomialFeatures, CircularDistances
    };

    struct Node {
        Op op;
        int a = -1;
        int b = -1;
        double param = 0.0;
        Tensor value;
        Tensor grad;
        bool requires_grad = false;
        bool is_leaf = false;
        std::vector<std::uint32_t> idx;
        std::shared_ptr<const MultiIndexTable> table;
    };

    static const char* op_name(Op op);

    Var push(Node&& n);
    Tensor compute(const Node& n) const;
    void accumulate_inputs(Node& n); // backward step for one node
    bool needs_grad(int id) const { return id >= 0 && nodes_[id].requires_grad; }
    Tensor& grad_buffer(int id);

    std::vector<Node> nodes_;
};

} // namespace aswd
