#include "wsvae/autodiff.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace wsvae::ag {

namespace {

void require(bool cond, const char* msg) {
  if (!cond) throw std::invalid_argument(msg);
}

}  // namespace

Tape::Tape(std::size_t reserve_nodes) { nodes_.reserve(reserve_nodes); }

Var Tape::push(Vec v, std::function<void(Tape&)> back) {
  nodes_.push_back(Node{std::move(v), Vec(), std::move(back)});
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Vec& Tape::grad_ref(int idx) {
  Node& n = nodes_[static_cast<std::size_t>(idx)];
  if (n.grad.size() == 0) n.grad = Vec::Zero(n.value.size());
  return n.grad;
}

const Tape::Node& Tape::node(Var v) const {
  require(v.valid() && v.idx < static_cast<int>(nodes_.size()), "invalid Var");
  return nodes_[static_cast<std::size_t>(v.idx)];
}

const Vec& Tape::value(Var v) const { return node(v).value; }

double Tape::scalar_value(Var v) const {
  const Vec& val = node(v).value;
  require(val.size() == 1, "scalar_value: node is not scalar");
  return val[0];
}

const Vec& Tape::grad(Var v) const { return node(v).grad; }

Var Tape::constant(Vec v) { return push(std::move(v)); }

Var Tape::scalar(double v) { return push(Vec::Constant(1, v)); }

Var Tape::param(Tensor& t) {
  require(t.cols() == 1, "param: tensor must be a column vector");
  Vec v = t.value.col(0);
  Tensor* tp = &t;
  int self = static_cast<int>(nodes_.size());
  return push(std::move(v), [tp, self](Tape& tape) {
    tp->grad.col(0) += tape.nodes_[self].grad;
  });
}

Var Tape::row(Tensor& t, Eigen::Index r) {
  require(r >= 0 && r < t.rows(), "row: index out of range");
  Vec v = t.value.row(r).transpose();
  Tensor* tp = &t;
  int self = static_cast<int>(nodes_.size());
  return push(std::move(v), [tp, r, self](Tape& tape) {
    tp->grad.row(r) += tape.nodes_[self].grad.transpose();
  });
}

Var Tape::matvec(Tensor& w, Var x) {
  require(w.cols() == value(x).size(), "matvec: dimension mismatch");
  Vec v = w.value * value(x);
  Tensor* wp = &w;
  int self = static_cast<int>(nodes_.size());
  int xi = x.idx;
  return push(std::move(v), [wp, xi, self](Tape& tape) {
    const Vec& g = tape.nodes_[self].grad;
    wp->grad.noalias() += g * tape.nodes_[xi].value.transpose();
    tape.grad_ref(xi).noalias() += wp->value.transpose() * g;
  });
}

Var Tape::matvec_t(Tensor& w, Var x) {
  require(w.rows() == value(x).size(), "matvec_t: dimension mismatch");
  Vec v = w.value.transpose() * value(x);
  Tensor* wp = &w;
  int self = static_cast<int>(nodes_.size());
  int xi = x.idx;
  return push(std::move(v), [wp, xi, self](Tape& tape) {
    const Vec& g = tape.nodes_[self].grad;
    wp->grad.noalias() += tape.nodes_[xi].value * g.transpose();
    tape.grad_ref(xi).noalias() += wp->value * g;
  });
}

Var Tape::affine(Tensor& w, Var x, Tensor& b) {
  require(w.cols() == value(x).size(), "affine: dimension mismatch");
  require(b.cols() == 1 && b.rows() == w.rows(), "affine: bias mismatch");
  Vec v = w.value * value(x) + b.value.col(0);
  Tensor* wp = &w;
  Tensor* bp = &b;
  int self = static_cast<int>(nodes_.size());
  int xi = x.idx;
  return push(std::move(v), [wp, bp, xi, self](Tape& tape) {
    const Vec& g = tape.nodes_[self].grad;
    wp->grad.noalias() += g * tape.nodes_[xi].value.transpose();
    bp->grad.col(0) += g;
    tape.grad_ref(xi).noalias() += wp->value.transpose() * g;
  });
}

Var Tape::add(Var a, Var b) {
  require(value(a).size() == value(b).size(), "add: dimension mismatch");
  Vec v = value(a) + value(b);
  int self = static_cast<int>(nodes_.size());
  int ai = a.idx, bi = b.idx;
  return push(std::move(v), [ai, bi, self](Tape& tape) {
    const Vec& g = tape.nodes_[self].grad;
    tape.grad_ref(ai) += g;
    tape.grad_ref(bi) += g;
  });
}

Var Tape::sub(Var a, Var b) {
  require(value(a).size() == value(b).size(), "sub: dimension mismatch");
  Vec v = value(a) - value(b);
  int self = static_cast<int>(nodes_.size());
  int ai = a.idx, bi = b.idx;
  return push(std::move(v), [ai, bi, self](Tape& tape) {
    const Vec& g = tape.nodes_[self].grad;
    tape.grad_ref(ai) += g;
    tape.grad_ref(bi) -= g;
  });
}

Var Tape::cmul(Var a, Var b) {
  require(value(a).size() == value(b).size(), "cmul: dimension mismatch");
  Vec v = value(a).cwiseProduct(value(b));
  int self = static_cast<int>(nodes_.size());
  int ai = a.idx, bi = b.idx;
  return push(std::move(v), [ai, bi, self](Tape& tape) {
    const Vec& g = tape.nodes_[self].grad;
    tape.grad_ref(ai).array() += g.array() * tape.nodes_[bi].value.array();
    tape.grad_ref(bi).array() += g.array() * tape.nodes_[ai].value.array();
  });
}

Var Tape::cmul_const(Var a, const Vec& c) {
  require(value(a).size() == c.size(), "cmul_const: dimension mismatch");
  Vec v = value(a).cwiseProduct(c);
  int self = static_cast<int>(nodes_.size());
  int ai = a.idx;
  Vec cc = c;
  return push(std::move(v), [ai, self, cc](Tape& tape) {
    tape.grad_ref(ai).array() += tape.nodes_[self].grad.array() * cc.array();
  });
}

Var Tape::add_const(Var a, const Vec& c) {
  require(value(a).size() == c.size(), "add_const: dimension mismatch");
  Vec v = value(a) + c;
  int self = static_cast<int>(nodes_.size());
  int ai = a.idx;
  return push(std::move(v), [ai, self](Tape& tape) {
    tape.grad_ref(ai) += tape.nodes_[self].grad;
  });
}

Var Tape::scale(Var a, double k) {
  Vec v = value(a) * k;
  int self = static_cast<int>(nodes_.size());
  int ai = a.idx;
  return push(std::move(v), [ai, k, self](Tape& tape) {
    tape.grad_ref(ai) += k * tape.nodes_[self].grad;
  });
}

Var Tape::scale_by(Var a, Var s) {
  require(value(s).size() == 1, "scale_by: s must be scalar");
  Vec v = value(a) * value(s)[0];
  int self = static_cast<int>(nodes_.size());
  int ai = a.idx, si = s.idx;
  return push(std::move(v), [ai, si, self](Tape& tape) {
    const Vec& g = tape.nodes_[self].grad;
    tape.grad_ref(ai) += tape.nodes_[si].value[0] * g;
    tape.grad_ref(si)[0] += g.dot(tape.nodes_[ai].value);
  });
}

Var Tape::tanh(Var a) {
  Vec v = value(a).array().tanh();
  int self = static_cast<int>(nodes_.size());
  int ai = a.idx;
  return push(std::move(v), [ai, self](Tape& tape) {
    const Vec& y = tape.nodes_[self].value;
    tape.grad_ref(ai).array() +=
        tape.nodes_[self].grad.array() * (1.0 - y.array().square());
  });
}

Var Tape::sigmoid(Var a) {
  Vec v = (1.0 / (1.0 + (-value(a).array()).exp())).matrix();
  int self = static_cast<int>(nodes_.size());
  int ai = a.idx;
  return push(std::move(v), [ai, self](Tape& tape) {
    const Vec& y = tape.nodes_[self].value;
    tape.grad_ref(ai).array() +=
        tape.nodes_[self].grad.array() * y.array() * (1.0 - y.array());
  });
}

Var Tape::exp(Var a) {
  Vec v = value(a).array().exp();
  int self = static_cast<int>(nodes_.size());
  int ai = a.idx;
  return push(std::move(v), [ai, self](Tape& tape) {
    tape.grad_ref(ai).array() +=
        tape.nodes_[self].grad.array() * tape.nodes_[self].value.array();
  });
}

Var Tape::clamp_min(Var a, double lo) {
  Vec v = value(a).cwiseMax(lo);
  int self = static_cast<int>(nodes_.size());
  int ai = a.idx;
  return push(std::move(v), [ai, lo, self](Tape& tape) {
    const Vec& x = tape.nodes_[ai].value;
    Vec& ga = tape.grad_ref(ai);
    const Vec& g = tape.nodes_[self].grad;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      if (x[i] > lo) ga[i] += g[i];
    }
  });
}

Var Tape::concat(const std::vector<Var>& parts) {
  Eigen::Index total = 0;
  for (Var p : parts) total += value(p).size();
  Vec v(total);
  Eigen::Index off = 0;
  std::vector<int> idxs;
  idxs.reserve(parts.size());
  for (Var p : parts) {
    v.segment(off, value(p).size()) = value(p);
    off += value(p).size();
    idxs.push_back(p.idx);
  }
  int self = static_cast<int>(nodes_.size());
  return push(std::move(v), [idxs, self](Tape& tape) {
    const Vec& g = tape.nodes_[self].grad;
    Eigen::Index o = 0;
    for (int pi : idxs) {
      Eigen::Index n = tape.nodes_[pi].value.size();
      tape.grad_ref(pi) += g.segment(o, n);
      o += n;
    }
  });
}

Var Tape::slice(Var a, Eigen::Index start, Eigen::Index len) {
  require(start >= 0 && len >= 0 && start + len <= value(a).size(),
          "slice: out of range");
  Vec v = value(a).segment(start, len);
  int self = static_cast<int>(nodes_.size());
  int ai = a.idx;
  return push(std::move(v), [ai, start, len, self](Tape& tape) {
    tape.grad_ref(ai).segment(start, len) += tape.nodes_[self].grad;
  });
}

Var Tape::sum(Var a) {
  Vec v = Vec::Constant(1, value(a).sum());
  int self = static_cast<int>(nodes_.size());
  int ai = a.idx;
  return push(std::move(v), [ai, self](Tape& tape) {
    tape.grad_ref(ai).array() += tape.nodes_[self].grad[0];
  });
}

Var Tape::dot(Var a, Var b) {
  require(value(a).size() == value(b).size(), "dot: dimension mismatch");
  Vec v = Vec::Constant(1, value(a).dot(value(b)));
  int self = static_cast<int>(nodes_.size());
  int ai = a.idx, bi = b.idx;
  return push(std::move(v), [ai, bi, self](Tape& tape) {
    double g = tape.nodes_[self].grad[0];
    tape.grad_ref(ai) += g * tape.nodes_[bi].value;
    tape.grad_ref(bi) += g * tape.nodes_[ai].value;
  });
}

Var Tape::pick(Var a, Eigen::Index i) {
  require(i >= 0 && i < value(a).size(), "pick: index out of range");
  Vec v = Vec::Constant(1, value(a)[i]);
  int self = static_cast<int>(nodes_.size());
  int ai = a.idx;
  return push(std::move(v), [ai, i, self](Tape& tape) {
    tape.grad_ref(ai)[i] += tape.nodes_[self].grad[0];
  });
}

Var Tape::softmax(Var a) {
  const Vec& x = value(a);
  require(x.size() > 0, "softmax: empty input");
  double m = x.maxCoeff();
  require(std::isfinite(m), "softmax: no finite entry");
  // Scalar exp keeps exp(-inf) exactly zero for masked entries.
  Vec e(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) e[i] = std::exp(x[i] - m);
  Vec v = e / e.sum();
  int self = static_cast<int>(nodes_.size());
  int ai = a.idx;
  return push(std::move(v), [ai, self](Tape& tape) {
    const Vec& y = tape.nodes_[self].value;
    const Vec& g = tape.nodes_[self].grad;
    double yg = y.dot(g);
    tape.grad_ref(ai).array() += y.array() * (g.array() - yg);
  });
}

Var Tape::log_softmax(Var a) {
  const Vec& x = value(a);
  require(x.size() > 0, "log_softmax: empty input");
  double m = x.maxCoeff();
  require(std::isfinite(m), "log_softmax: no finite entry");
  double lse = m + std::log((x.array() - m).exp().sum());
  Vec v = x.array() - lse;
  int self = static_cast<int>(nodes_.size());
  int ai = a.idx;
  return push(std::move(v), [ai, self](Tape& tape) {
    const Vec& lv = tape.nodes_[self].value;
    const Vec& g = tape.nodes_[self].grad;
    double gs = g.sum();
    tape.grad_ref(ai).array() += g.array() - lv.array().exp() * gs;
  });
}

Var Tape::add_all(const std::vector<Var>& xs) {
  require(!xs.empty(), "add_all: empty input");
  Vec v = value(xs[0]);
  for (std::size_t i = 1; i < xs.size(); ++i) {
    require(value(xs[i]).size() == v.size(), "add_all: dimension mismatch");
    v += value(xs[i]);
  }
  std::vector<int> idxs;
  idxs.reserve(xs.size());
  for (Var x : xs) idxs.push_back(x.idx);
  int self = static_cast<int>(nodes_.size());
  return push(std::move(v), [idxs, self](Tape& tape) {
    const Vec& g = tape.nodes_[self].grad;
    for (int xi : idxs) tape.grad_ref(xi) += g;
  });
}

Var Tape::mean_all(const std::vector<Var>& xs) {
  return scale(add_all(xs), 1.0 / static_cast<double>(xs.size()));
}

void Tape::backward(Var loss) {
  require(loss.valid() && loss.idx < static_cast<int>(nodes_.size()),
          "backward: invalid loss node");
  require(nodes_[static_cast<std::size_t>(loss.idx)].value.size() == 1,
          "backward: loss must be scalar");
  grad_ref(loss.idx)[0] += 1.0;
  for (int i = loss.idx; i >= 0; --i) {
    Node& n = nodes_[static_cast<std::size_t>(i)];
    if (n.grad.size() > 0 && n.back) n.back(*this);
  }
}

}  // namespace wsvae::ag
