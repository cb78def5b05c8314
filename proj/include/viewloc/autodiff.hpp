#pragma once

#include <Eigen/Core>

#include <functional>
#include <vector>

namespace viewloc::ad {

using Mat = Eigen::MatrixXd;

/// Reverse-mode tape over dense row-major-semantics matrices (rows = sequence
/// items, columns = features). Build the graph with the op methods, then call
/// backward() once; parameter gradients are accumulated into their sinks.
class Tape {
public:
    using Id = int;

    /// Constant input; never receives a gradient.
    Id input(Mat value);
    /// Trainable leaf. `sink` (same shape) receives += dL/dvalue on backward; may be null.
    Id param(const Mat& value, Mat* sink);

    Id matmul(Id a, Id b);
    /// a * b^T
    Id matmul_nt(Id a, Id b);
    Id add(Id a, Id b);
    /// a + broadcast of the 1 x n row `bias` over rows.
    Id add_bias(Id a, Id bias);
    Id scale(Id a, double s);
    /// tanh-approximated GELU.
    Id gelu(Id a);
    /// Row-wise layer normalization with 1 x n gain and offset.
    Id layer_norm(Id a, Id gain, Id offset, double eps = 1e-5);
    Id softmax_rows(Id a);
    Id slice_cols(Id a, int start, int count);
    Id hcat(const std::vector<Id>& parts);
    /// 1 x n mean over rows.
    Id mean_rows(Id a);

    const Mat& value(Id id) const { return nodes_[id].value; }
    bool needs_grad(Id id) const { return nodes_[id].needs_grad; }
    std::size_t size() const { return nodes_.size(); }

    /// Seeds d(out) = seed and propagates to every parameter sink.
    void backward(Id out, const Mat& seed);

private:
    struct Node {
        Mat value;
        Mat grad;
        Mat* sink = nullptr;
        bool needs_grad = false;
        std::function<void(Tape&, Id)> back;
    };

    Id push(Mat value, bool needs_grad, std::function<void(Tape&, Id)> back);
    Mat& grad(Id id);

    std::vector<Node> nodes_;
};

}  // namespace viewloc::ad
