#pragma once

#include <Eigen/Core>

#include <functional>
#include <string>
#include <vector>

namespace wsvae::ag {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// A named trainable parameter. Gradients accumulate across backward passes
/// until zero_grad().
struct Tensor {
  std::string name;
  Mat value;
  Mat grad;

  Tensor(std::string name_, Eigen::Index rows, Eigen::Index cols)
      : name(std::move(name_)),
        value(Mat::Zero(rows, cols)),
        grad(Mat::Zero(rows, cols)) {}

  Eigen::Index rows() const { return value.rows(); }
  Eigen::Index cols() const { return value.cols(); }
  Eigen::Index size() const { return value.size(); }
  void zero_grad() { grad.setZero(); }
};

/// Handle to a node on a Tape. Nodes are vector-valued; scalars have
/// dimension 1.
struct Var {
  int idx = -1;
  bool valid() const { return idx >= 0; }
};

/// Reverse-mode tape over vector-valued expressions. One tape per loss
/// evaluation; parameters live outside the tape and receive gradient
/// contributions during backward(). Referenced Tensors must outlive the tape.
class Tape {
 public:
  explicit Tape(std::size_t reserve_nodes = 1024);
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Leaves.
  Var constant(Vec v);
  Var scalar(double v);

  // Parameter access.
  Var param(Tensor& t);                // t must be a column vector
  Var row(Tensor& t, Eigen::Index r);  // row of an embedding table
  Var matvec(Tensor& w, Var x);        // w.value * x
  Var matvec_t(Tensor& w, Var x);      // w.value^T * x
  Var affine(Tensor& w, Var x, Tensor& b);

  // Elementwise and structural ops.
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var cmul(Var a, Var b);
  Var cmul_const(Var a, const Vec& c);
  Var add_const(Var a, const Vec& c);
  Var scale(Var a, double k);
  Var scale_by(Var a, Var s);  // vector a times scalar node s
  Var tanh(Var a);
  Var sigmoid(Var a);
  Var exp(Var a);
  Var clamp_min(Var a, double lo);  // max(a, lo); gradient passes where a > lo
  Var concat(const std::vector<Var>& parts);
  Var slice(Var a, Eigen::Index start, Eigen::Index len);

  // Reductions (scalar results).
  Var sum(Var a);
  Var dot(Var a, Var b);
  Var pick(Var a, Eigen::Index i);

  Var softmax(Var a);
  Var log_softmax(Var a);

  /// Elementwise sum / mean of same-dimension vars.
  Var add_all(const std::vector<Var>& xs);
  Var mean_all(const std::vector<Var>& xs);

  const Vec& value(Var v) const;
  double scalar_value(Var v) const;
  /// Gradient of the last backward() target w.r.t. node v; zero-sized if the
  /// node was not touched.
  const Vec& grad(Var v) const;

  /// Runs the reverse pass from scalar node `loss`, accumulating into the
  /// grads of all referenced Tensors.
  void backward(Var loss);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Vec value;
    Vec grad;                          // lazily allocated during backward
    std::function<void(Tape&)> back;   // empty for leaves
  };

  std::vector<Node> nodes_;

  Var push(Vec v, std::function<void(Tape&)> back = nullptr);
  Vec& grad_ref(int idx);
  const Node& node(Var v) const;

  friend struct TapeOpsAccess;
};

}  // namespace wsvae::ag
