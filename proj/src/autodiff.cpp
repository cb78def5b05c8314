#include "viewloc/autodiff.hpp"

#include <cassert>
#include <cmath>
#include <numbers>

namespace viewloc::ad {

Tape::Id Tape::push(Mat value, bool needs_grad, std::function<void(Tape&, Id)> back) {
    nodes_.push_back({std::move(value), Mat(), nullptr, needs_grad, needs_grad ? std::move(back) : nullptr});
    return static_cast<Id>(nodes_.size() - 1);
}

Mat& Tape::grad(Id id) {
    Node& n = nodes_[id];
    if (n.grad.size() == 0 && n.value.size() != 0) n.grad = Mat::Zero(n.value.rows(), n.value.cols());
    else if (n.grad.rows() != n.value.rows() || n.grad.cols() != n.value.cols())
        n.grad = Mat::Zero(n.value.rows(), n.value.cols());
    return n.grad;
}

Tape::Id Tape::input(Mat value) { return push(std::move(value), false, nullptr); }

Tape::Id Tape::param(const Mat& value, Mat* sink) {
    const Id id = push(value, sink != nullptr, [](Tape&, Id) {});
    nodes_[id].sink = sink;
    return id;
}

Tape::Id Tape::matmul(Id a, Id b) {
    const bool ng = needs_grad(a) || needs_grad(b);
    return push(value(a) * value(b), ng, [a, b](Tape& t, Id self) {
        const Mat& g = t.nodes_[self].grad;
        if (t.needs_grad(a)) t.grad(a).noalias() += g * t.value(b).transpose();
        if (t.needs_grad(b)) t.grad(b).noalias() += t.value(a).transpose() * g;
    });
}

Tape::Id Tape::matmul_nt(Id a, Id b) {
    const bool ng = needs_grad(a) || needs_grad(b);
    return push(value(a) * value(b).transpose(), ng, [a, b](Tape& t, Id self) {
        const Mat& g = t.nodes_[self].grad;
        if (t.needs_grad(a)) t.grad(a).noalias() += g * t.value(b);
        if (t.needs_grad(b)) t.grad(b).noalias() += g.transpose() * t.value(a);
    });
}

Tape::Id Tape::add(Id a, Id b) {
    assert(value(a).rows() == value(b).rows() && value(a).cols() == value(b).cols());
    const bool ng = needs_grad(a) || needs_grad(b);
    return push(value(a) + value(b), ng, [a, b](Tape& t, Id self) {
        const Mat& g = t.nodes_[self].grad;
        if (t.needs_grad(a)) t.grad(a) += g;
        if (t.needs_grad(b)) t.grad(b) += g;
    });
}

Tape::Id Tape::add_bias(Id a, Id bias) {
    assert(value(bias).rows() == 1 && value(bias).cols() == value(a).cols());
    const bool ng = needs_grad(a) || needs_grad(bias);
    Mat out = value(a);
    out.rowwise() += value(bias).row(0);
    return push(std::move(out), ng, [a, bias](Tape& t, Id self) {
        const Mat& g = t.nodes_[self].grad;
        if (t.needs_grad(a)) t.grad(a) += g;
        if (t.needs_grad(bias)) t.grad(bias) += g.colwise().sum();
    });
}

Tape::Id Tape::scale(Id a, double s) {
    return push(value(a) * s, needs_grad(a), [a, s](Tape& t, Id self) {
        t.grad(a) += s * t.nodes_[self].grad;
    });
}

namespace {

constexpr double kGeluC = 0.7978845608028654;  // sqrt(2/pi)
constexpr double kGeluA = 0.044715;

}  // namespace

Tape::Id Tape::gelu(Id a) {
    const Mat& x = value(a);
    Mat out = x.unaryExpr([](double v) {
        return 0.5 * v * (1.0 + std::tanh(kGeluC * (v + kGeluA * v * v * v)));
    });
    return push(std::move(out), needs_grad(a), [a](Tape& t, Id self) {
        const Mat& x = t.value(a);
        const Mat d = x.unaryExpr([](double v) {
            const double th = std::tanh(kGeluC * (v + kGeluA * v * v * v));
            return 0.5 * (1.0 + th) + 0.5 * v * (1.0 - th * th) * kGeluC * (1.0 + 3.0 * kGeluA * v * v);
        });
        t.grad(a) += t.nodes_[self].grad.cwiseProduct(d);
    });
}

Tape::Id Tape::layer_norm(Id a, Id gain, Id offset, double eps) {
    const Mat& x = value(a);
    const auto n = static_cast<double>(x.cols());
    Mat xhat(x.rows(), x.cols());
    Eigen::VectorXd inv(x.rows());
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
        const double mu = x.row(r).sum() / n;
        const auto centered = (x.row(r).array() - mu).eval();
        const double var = centered.square().sum() / n;
        inv(r) = 1.0 / std::sqrt(var + eps);
        xhat.row(r) = centered * inv(r);
    }
    Mat out = xhat.array().rowwise() * value(gain).row(0).array();
    out.rowwise() += value(offset).row(0);
    const bool ng = needs_grad(a) || needs_grad(gain) || needs_grad(offset);
    return push(std::move(out), ng, [a, gain, offset, xhat, inv, n](Tape& t, Id self) {
        const Mat& g = t.nodes_[self].grad;
        if (t.needs_grad(gain)) t.grad(gain) += g.cwiseProduct(xhat).colwise().sum();
        if (t.needs_grad(offset)) t.grad(offset) += g.colwise().sum();
        if (t.needs_grad(a)) {
            const Mat dxhat = g.array().rowwise() * t.value(gain).row(0).array();
            Mat& ga = t.grad(a);
            for (Eigen::Index r = 0; r < dxhat.rows(); ++r) {
                const double m1 = dxhat.row(r).sum() / n;
                const double m2 = dxhat.row(r).dot(xhat.row(r)) / n;
                ga.row(r).array() += inv(r) * (dxhat.row(r).array() - m1 - xhat.row(r).array() * m2);
            }
        }
    });
}

Tape::Id Tape::softmax_rows(Id a) {
    const Mat& x = value(a);
    Mat out(x.rows(), x.cols());
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
        const double m = x.row(r).maxCoeff();
        const auto e = (x.row(r).array() - m).exp().eval();
        out.row(r) = e / e.sum();
    }
    return push(std::move(out), needs_grad(a), [a](Tape& t, Id self) {
        const Mat& y = t.nodes_[self].value;
        const Mat& g = t.nodes_[self].grad;
        const Eigen::VectorXd dots = g.cwiseProduct(y).rowwise().sum();
        t.grad(a) += (y.array() * (g.colwise() - dots).array()).matrix();
    });
}

Tape::Id Tape::slice_cols(Id a, int start, int count) {
    return push(value(a).middleCols(start, count), needs_grad(a), [a, start, count](Tape& t, Id self) {
        t.grad(a).middleCols(start, count) += t.nodes_[self].grad;
    });
}

Tape::Id Tape::hcat(const std::vector<Id>& parts) {
    Eigen::Index rows = value(parts.front()).rows(), cols = 0;
    bool ng = false;
    for (Id p : parts) {
        assert(value(p).rows() == rows);
        cols += value(p).cols();
        ng = ng || needs_grad(p);
    }
    Mat out(rows, cols);
    Eigen::Index c = 0;
    for (Id p : parts) {
        out.middleCols(c, value(p).cols()) = value(p);
        c += value(p).cols();
    }
    return push(std::move(out), ng, [parts](Tape& t, Id self) {
        Eigen::Index c = 0;
        for (Id p : parts) {
            const auto w = t.value(p).cols();
            if (t.needs_grad(p)) t.grad(p) += t.nodes_[self].grad.middleCols(c, w);
            c += w;
        }
    });
}

Tape::Id Tape::mean_rows(Id a) {
    const auto m = static_cast<double>(value(a).rows());
    return push(value(a).colwise().sum() / m, needs_grad(a), [a, m](Tape& t, Id self) {
        t.grad(a).rowwise() += t.nodes_[self].grad.row(0) / m;
    });
}

void Tape::backward(Id out, const Mat& seed) {
    assert(seed.rows() == value(out).rows() && seed.cols() == value(out).cols());
    if (!needs_grad(out)) return;
    grad(out) += seed;
    for (Id id = out; id >= 0; --id) {
        Node& n = nodes_[id];
        if (!n.needs_grad || n.grad.size() == 0) continue;
        if (n.back) n.back(*this, id);
        if (n.sink) *n.sink += n.grad;
    }
}

}  // namespace viewloc::ad
