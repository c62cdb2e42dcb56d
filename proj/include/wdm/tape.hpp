#ifndef WDM_TAPE_HPP
#define WDM_TAPE_HPP

#include <Eigen/Dense>
#include <memory>
#include <vector>

namespace wdm::ad {

// Sparse linear index map between two matrix shapes (im2col, col2im,
// reshuffles). src[o] is the row-major flat index into the input for output
// element o, or -1 for a structural zero.
struct LinearPlan {
  int in_rows = 0, in_cols = 0;
  int out_rows = 0, out_cols = 0;
  std::vector<int> src;
};

// Reverse-mode tape over dense matrices. Nodes are append-only, so a single
// reverse sweep in creation order is a valid topological traversal.
//
// Anything whose derivative is needed must be expressed as ops, including
// hand-written backprop passes: building the input-gradient of a network as
// graph ops and then calling backward() once yields exact second-order
// parameter gradients for gradient-penalty style objectives.
class Tape {
 public:
  using Matrix = Eigen::MatrixXd;

  int constant(Matrix v);
  int param(Matrix v);

  int matmul(int a, int b);     // A * B
  int matmul_nt(int a, int b);  // A * B^T
  int matmul_tn(int a, int b);  // A^T * B
  int add(int a, int b);
  int sub(int a, int b);
  int cmul(int a, int b);  // elementwise
  int scale(int a, double s);
  int add_scalar(int a, double s);
  int add_rowvec(int a, int bias);  // bias: (1, n) broadcast over rows
  int tanh_(int a);
  int exp_(int a);
  int log_(int a);
  int square(int a);
  int sqrt_(int a, double eps = 0.0);  // sqrt(x + eps)
  int rowsum(int a);                   // (K, n) -> (K, 1)
  int sum(int a);                      // -> (1, 1)
  int mean(int a);                     // -> (1, 1)
  int diag_part(int a);                // (K, K) -> (K, 1)
  int row_logsumexp(int a);            // (K, K) -> (K, 1), max-shifted

  int linmap(int a, std::shared_ptr<const LinearPlan> plan, bool transposed = false);

  const Matrix& val(int id) const { return nodes_[id].val; }
  const Matrix& grad(int id) const;

  // Accumulates gradients of a scalar root into every reachable node.
  void backward(int root);

  size_t size() const { return nodes_.size(); }

 private:
  enum class Op {
    leaf, matmul, matmul_nt, matmul_tn, add, sub, cmul, scale, add_scalar,
    add_rowvec, tanh_, exp_, log_, square, sqrt_, rowsum, sum, mean,
    diag_part, row_lse, linmap
  };

  struct Node {
    Matrix val;
    Matrix grad;
    Op op = Op::leaf;
    int a = -1, b = -1;
    double s = 0.0;
    std::shared_ptr<const LinearPlan> plan;
    bool transposed = false;
  };

  int push(Node n);
  Matrix& g(int id);

  std::vector<Node> nodes_;
};

}  // namespace wdm::ad

#endif
