#include "wdm/tape.hpp"

#include <cmath>
#include <stdexcept>

namespace wdm::ad {

int Tape::push(Node n) {
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

int Tape::constant(Matrix v) { return push({std::move(v)}); }
int Tape::param(Matrix v) { return push({std::move(v)}); }

int Tape::matmul(int a, int b) {
  Node n{nodes_[a].val * nodes_[b].val, {}, Op::matmul, a, b};
  return push(std::move(n));
}
int Tape::matmul_nt(int a, int b) {
  Node n{nodes_[a].val * nodes_[b].val.transpose(), {}, Op::matmul_nt, a, b};
  return push(std::move(n));
}
int Tape::matmul_tn(int a, int b) {
  Node n{nodes_[a].val.transpose() * nodes_[b].val, {}, Op::matmul_tn, a, b};
  return push(std::move(n));
}
int Tape::add(int a, int b) {
  return push({nodes_[a].val + nodes_[b].val, {}, Op::add, a, b});
}
int Tape::sub(int a, int b) {
  return push({nodes_[a].val - nodes_[b].val, {}, Op::sub, a, b});
}
int Tape::cmul(int a, int b) {
  return push({nodes_[a].val.cwiseProduct(nodes_[b].val), {}, Op::cmul, a, b});
}
int Tape::scale(int a, double s) {
  return push({nodes_[a].val * s, {}, Op::scale, a, -1, s});
}
int Tape::add_scalar(int a, double s) {
  return push({nodes_[a].val.array() + s, {}, Op::add_scalar, a, -1, s});
}
int Tape::add_rowvec(int a, int bias) {
  Matrix v = nodes_[a].val;
  v.rowwise() += nodes_[bias].val.row(0);
  return push({std::move(v), {}, Op::add_rowvec, a, bias});
}
int Tape::tanh_(int a) {
  return push({nodes_[a].val.array().tanh(), {}, Op::tanh_, a});
}
int Tape::exp_(int a) {
  return push({nodes_[a].val.array().exp(), {}, Op::exp_, a});
}
int Tape::log_(int a) {
  return push({nodes_[a].val.array().log(), {}, Op::log_, a});
}
int Tape::square(int a) {
  return push({nodes_[a].val.array().square(), {}, Op::square, a});
}
int Tape::sqrt_(int a, double eps) {
  return push({(nodes_[a].val.array() + eps).sqrt(), {}, Op::sqrt_, a, -1, eps});
}
int Tape::rowsum(int a) {
  return push({nodes_[a].val.rowwise().sum(), {}, Op::rowsum, a});
}
int Tape::sum(int a) {
  return push({Matrix::Constant(1, 1, nodes_[a].val.sum()), {}, Op::sum, a});
}
int Tape::mean(int a) {
  return push({Matrix::Constant(1, 1, nodes_[a].val.mean()), {}, Op::mean, a});
}
int Tape::diag_part(int a) {
  return push({nodes_[a].val.diagonal(), {}, Op::diag_part, a});
}
int Tape::row_logsumexp(int a) {
  const Matrix& S = nodes_[a].val;
  Matrix out(S.rows(), 1);
  for (Eigen::Index i = 0; i < S.rows(); ++i) {
    double m = S.row(i).maxCoeff();
    out(i, 0) = m + std::log((S.row(i).array() - m).exp().sum());
  }
  return push({std::move(out), {}, Op::row_lse, a});
}

int Tape::linmap(int a, std::shared_ptr<const LinearPlan> plan, bool transposed) {
  const Matrix& in = nodes_[a].val;
  const LinearPlan& p = *plan;
  Matrix out;
  if (!transposed) {
    if (in.rows() != p.in_rows || in.cols() != p.in_cols)
      throw std::invalid_argument("linmap: input shape mismatch");
    out = Matrix::Zero(p.out_rows, p.out_cols);
    const int oc = p.out_cols, ic = p.in_cols;
    for (int o = 0; o < p.out_rows * p.out_cols; ++o) {
      int s = p.src[o];
      if (s >= 0) out(o / oc, o % oc) = in(s / ic, s % ic);
    }
  } else {
    if (in.rows() != p.out_rows || in.cols() != p.out_cols)
      throw std::invalid_argument("linmap^T: input shape mismatch");
    out = Matrix::Zero(p.in_rows, p.in_cols);
    const int oc = p.out_cols, ic = p.in_cols;
    for (int o = 0; o < p.out_rows * p.out_cols; ++o) {
      int s = p.src[o];
      if (s >= 0) out(s / ic, s % ic) += in(o / oc, o % oc);
    }
  }
  Node n{std::move(out), {}, Op::linmap, a};
  n.plan = std::move(plan);
  n.transposed = transposed;
  return push(std::move(n));
}

Tape::Matrix& Tape::g(int id) {
  Node& n = nodes_[id];
  if (n.grad.size() == 0) n.grad = Matrix::Zero(n.val.rows(), n.val.cols());
  return n.grad;
}

const Tape::Matrix& Tape::grad(int id) const {
  static const Matrix empty;
  return nodes_[id].grad.size() ? nodes_[id].grad : empty;
}

void Tape::backward(int root) {
  if (nodes_[root].val.size() != 1)
    throw std::invalid_argument("backward: root must be scalar");
  g(root).setConstant(1.0);

  for (int id = root; id >= 0; --id) {
    Node& n = nodes_[id];
    if (n.grad.size() == 0) continue;
    const Matrix& gr = n.grad;
    switch (n.op) {
      case Op::leaf:
        break;
      case Op::matmul:
        g(n.a) += gr * nodes_[n.b].val.transpose();
        g(n.b) += nodes_[n.a].val.transpose() * gr;
        break;
      case Op::matmul_nt:
        g(n.a) += gr * nodes_[n.b].val;
        g(n.b) += gr.transpose() * nodes_[n.a].val;
        break;
      case Op::matmul_tn:
        g(n.a) += nodes_[n.b].val * gr.transpose();
        g(n.b) += nodes_[n.a].val * gr;
        break;
      case Op::add:
        g(n.a) += gr;
        g(n.b) += gr;
        break;
      case Op::sub:
        g(n.a) += gr;
        g(n.b) -= gr;
        break;
      case Op::cmul:
        g(n.a) += gr.cwiseProduct(nodes_[n.b].val);
        g(n.b) += gr.cwiseProduct(nodes_[n.a].val);
        break;
      case Op::scale:
        g(n.a) += gr * n.s;
        break;
      case Op::add_scalar:
        g(n.a) += gr;
        break;
      case Op::add_rowvec:
        g(n.a) += gr;
        g(n.b) += gr.colwise().sum();
        break;
      case Op::tanh_:
        g(n.a).array() += gr.array() * (1.0 - n.val.array().square());
        break;
      case Op::exp_:
        g(n.a).array() += gr.array() * n.val.array();
        break;
      case Op::log_:
        g(n.a).array() += gr.array() / nodes_[n.a].val.array();
        break;
      case Op::square:
        g(n.a).array() += gr.array() * 2.0 * nodes_[n.a].val.array();
        break;
      case Op::sqrt_:
        g(n.a).array() += gr.array() * 0.5 / n.val.array();
        break;
      case Op::rowsum:
        g(n.a).colwise() += gr.col(0);
        break;
      case Op::sum:
        g(n.a).array() += gr(0, 0);
        break;
      case Op::mean:
        g(n.a).array() += gr(0, 0) / static_cast<double>(nodes_[n.a].val.size());
        break;
      case Op::diag_part:
        g(n.a).diagonal() += gr.col(0);
        break;
      case Op::row_lse: {
        const Matrix& S = nodes_[n.a].val;
        Matrix& ga = g(n.a);
        for (Eigen::Index i = 0; i < S.rows(); ++i)
          ga.row(i).array() += gr(i, 0) * (S.row(i).array() - n.val(i, 0)).exp();
        break;
      }
      case Op::linmap: {
        const LinearPlan& p = *n.plan;
        Matrix& ga = g(n.a);
        const int oc = p.out_cols, ic = p.in_cols;
        if (!n.transposed) {
          for (int o = 0; o < p.out_rows * p.out_cols; ++o) {
            int s = p.src[o];
            if (s >= 0) ga(s / ic, s % ic) += gr(o / oc, o % oc);
          }
        } else {
          for (int o = 0; o < p.out_rows * p.out_cols; ++o) {
            int s = p.src[o];
            if (s >= 0) ga(o / oc, o % oc) += gr(s / ic, s % ic);
          }
        }
        break;
      }
    }
  }
}

}  // namespace wdm::ad
