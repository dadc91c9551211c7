#include "dcflow/tape.hpp"

#include <stdexcept>

namespace dcflow::ad {

const Matrix Tape::empty_ = Matrix();

Var Tape::leaf(Matrix v) {
  nodes_.push_back(Node{std::move(v), Matrix(), nullptr});
  return Var{this, static_cast<int>(nodes_.size()) - 1};
}

Var Tape::scalar(double s) {
  Matrix m(1, 1);
  m(0, 0) = s;
  return leaf(std::move(m));
}

Var Tape::zeros(Eigen::Index rows, Eigen::Index cols) {
  return leaf(Matrix::Zero(rows, cols));
}

Var Tape::push(Matrix value, std::function<void(Tape&)> bw) {
  nodes_.push_back(Node{std::move(value), Matrix(),
                        grad_enabled ? std::move(bw) : nullptr});
  return Var{this, static_cast<int>(nodes_.size()) - 1};
}

const Matrix& Tape::val(Var v) const {
  if (!v.valid() || v.tape != this) throw std::logic_error("tape: invalid var");
  return nodes_[v.id].value;
}

const Matrix& Tape::adjoint(Var v) const {
  if (!v.valid() || v.tape != this) throw std::logic_error("tape: invalid var");
  const Node& n = nodes_[v.id];
  if (n.adjoint.size() == 0) {
    static thread_local Matrix zero;
    zero = Matrix::Zero(n.value.rows(), n.value.cols());
    return zero;
  }
  return n.adjoint;
}

void Tape::accumulate(int id, const Matrix& g) {
  Node& n = nodes_[id];
  if (n.adjoint.size() == 0)
    n.adjoint = g;
  else
    n.adjoint += g;
}

void Tape::backward(Var output) {
  if (!output.valid() || output.tape != this)
    throw std::logic_error("tape: backward on invalid var");
  if (nodes_[output.id].value.size() != 1)
    throw std::logic_error("tape: backward requires a scalar output");
  for (Node& n : nodes_) n.adjoint.resize(0, 0);
  nodes_[output.id].adjoint = Matrix::Ones(1, 1);
  for (int i = output.id; i >= 0; --i) {
    Node& n = nodes_[i];
    if (n.backward && n.adjoint.size() != 0) n.backward(*this);
  }
}

void Tape::clear() { nodes_.clear(); }

namespace {

Tape& tp(Var a) {
  if (!a.valid()) throw std::logic_error("tape: op on invalid var");
  return *a.tape;
}

void check_same(Var a, Var b) {
  if (a.tape != b.tape) throw std::logic_error("tape: mixed tapes");
}

}  // namespace

Var operator+(Var a, Var b) {
  check_same(a, b);
  Tape& t = tp(a);
  return t.push(t.val(a) + t.val(b), [a = a.id, b = b.id, out = (int)t.size()](Tape& t) {
    const Matrix& ad = t.adjoint(Var{&t, out});
    t.accumulate(a, ad);
    t.accumulate(b, ad);
  });
}

Var operator-(Var a, Var b) {
  check_same(a, b);
  Tape& t = tp(a);
  return t.push(t.val(a) - t.val(b), [a = a.id, b = b.id, out = (int)t.size()](Tape& t) {
    const Matrix& ad = t.adjoint(Var{&t, out});
    t.accumulate(a, ad);
    t.accumulate(b, -ad);
  });
}

Var operator*(Var a, Var b) {
  check_same(a, b);
  Tape& t = tp(a);
  return t.push(t.val(a).cwiseProduct(t.val(b)),
                [a = a.id, b = b.id, out = (int)t.size()](Tape& t) {
                  const Matrix& ad = t.adjoint(Var{&t, out});
                  t.accumulate(a, ad.cwiseProduct(t.val(b)));
                  t.accumulate(b, ad.cwiseProduct(t.val(a)));
                });
}

Var operator/(Var a, Var b) {
  check_same(a, b);
  Tape& t = tp(a);
  return t.push(t.val(a).cwiseQuotient(t.val(b)),
                [a = a.id, b = b.id, out = (int)t.size()](Tape& t) {
                  const Matrix& ad = t.adjoint(Var{&t, out});
                  t.accumulate(a, ad.cwiseQuotient(t.val(b)));
                  Matrix gb = -ad.cwiseProduct(t.val(out)).cwiseQuotient(t.val(b));
                  t.accumulate(b, gb);
                });
}

Var operator-(Var a) { return a * (-1.0); }

Var operator+(Var a, double c) {
  Tape& t = tp(a);
  return t.push(t.val(a).array() + c, [a = a.id, out = (int)t.size()](Tape& t) {
    t.accumulate(a, t.adjoint(Var{&t, out}));
  });
}
Var operator+(double c, Var a) { return a + c; }
Var operator-(Var a, double c) { return a + (-c); }
Var operator-(double c, Var a) { return (a * -1.0) + c; }

Var operator*(Var a, double c) {
  Tape& t = tp(a);
  return t.push(t.val(a) * c, [a = a.id, c, out = (int)t.size()](Tape& t) {
    t.accumulate(a, t.adjoint(Var{&t, out}) * c);
  });
}
Var operator*(double c, Var a) { return a * c; }
Var operator/(Var a, double c) { return a * (1.0 / c); }

namespace {

/// tanh via the vectorized double exp kernel; Eigen's tanh packet math is
/// float-only so .tanh() on doubles degenerates to scalar libm calls, which
/// dominates the per-step cost of the learned scheme. exp(-2|x|) never
/// overflows and the identity is accurate to a few ulp absolute.
Eigen::ArrayXXd fast_tanh(const Eigen::ArrayXXd& x) {
  Eigen::ArrayXXd e = (-2.0 * x.abs()).exp();
  return x.sign() * (1.0 - e) / (1.0 + e);
}

}  // namespace

Var tanh_(Var a) {
  Tape& t = tp(a);
  return t.push(fast_tanh(t.val(a).array()), [a = a.id, out = (int)t.size()](Tape& t) {
    const Matrix& y = t.val(out);
    Matrix g = t.adjoint(Var{&t, out}).array() * (1.0 - y.array().square());
    t.accumulate(a, g);
  });
}

Var square(Var a) { return a * a; }

Var select(const Eigen::ArrayXXd& mask, Var a, Var b) {
  check_same(a, b);
  Tape& t = tp(a);
  Matrix v = (mask * t.val(a).array() + (1.0 - mask) * t.val(b).array()).matrix();
  return t.push(std::move(v), [mask, a = a.id, b = b.id, out = (int)t.size()](Tape& t) {
    const Matrix& ad = t.adjoint(Var{&t, out});
    t.accumulate(a, (ad.array() * mask).matrix());
    t.accumulate(b, (ad.array() * (1.0 - mask)).matrix());
  });
}

Var select(const Eigen::ArrayXXd& mask, Var a, double b) {
  Tape& t = tp(a);
  Matrix v = (mask * t.val(a).array() + (1.0 - mask) * b).matrix();
  return t.push(std::move(v), [mask, a = a.id, out = (int)t.size()](Tape& t) {
    const Matrix& ad = t.adjoint(Var{&t, out});
    t.accumulate(a, (ad.array() * mask).matrix());
  });
}

Var pos_part(Var a) {
  Tape& t = tp(a);
  Eigen::ArrayXXd mask = (t.val(a).array() > 0.0).cast<double>();
  return select(mask, a, 0.0);
}

Var neg_part(Var a) {
  Tape& t = tp(a);
  Eigen::ArrayXXd mask = (t.val(a).array() < 0.0).cast<double>();
  return select(mask, -a, 0.0);
}

Var clip(Var a, double lo, double hi) {
  Tape& t = tp(a);
  Eigen::ArrayXXd inside =
      (t.val(a).array() >= lo && t.val(a).array() <= hi).cast<double>();
  Matrix v = t.val(a).array().max(lo).min(hi).matrix();
  return t.push(std::move(v), [inside, a = a.id, out = (int)t.size()](Tape& t) {
    t.accumulate(a, (t.adjoint(Var{&t, out}).array() * inside).matrix());
  });
}

Var sum(Var a) {
  Tape& t = tp(a);
  Matrix v(1, 1);
  v(0, 0) = t.val(a).sum();
  return t.push(std::move(v), [a = a.id, out = (int)t.size()](Tape& t) {
    double g = t.adjoint(Var{&t, out})(0, 0);
    t.accumulate(a, Matrix::Constant(t.val(a).rows(), t.val(a).cols(), g));
  });
}

Var sum_abs(Var a) {
  Tape& t = tp(a);
  Matrix v(1, 1);
  v(0, 0) = t.val(a).array().abs().sum();
  return t.push(std::move(v), [a = a.id, out = (int)t.size()](Tape& t) {
    double g = t.adjoint(Var{&t, out})(0, 0);
    Matrix sgn = t.val(a).array().sign();
    t.accumulate(a, sgn * g);
  });
}

Var max_abs(Var a) {
  Tape& t = tp(a);
  Eigen::Index r = 0, c = 0;
  double m = t.val(a).array().abs().maxCoeff(&r, &c);
  Matrix v(1, 1);
  v(0, 0) = m;
  return t.push(std::move(v), [a = a.id, r, c, out = (int)t.size()](Tape& t) {
    double g = t.adjoint(Var{&t, out})(0, 0);
    Matrix ga = Matrix::Zero(t.val(a).rows(), t.val(a).cols());
    double s = t.val(a)(r, c) >= 0.0 ? 1.0 : -1.0;
    ga(r, c) = s * g;
    t.accumulate(a, ga);
  });
}

Var matmul(Var a, Var b) {
  check_same(a, b);
  Tape& t = tp(a);
  return t.push(t.val(a) * t.val(b), [a = a.id, b = b.id, out = (int)t.size()](Tape& t) {
    const Matrix& ad = t.adjoint(Var{&t, out});
    t.accumulate(a, ad * t.val(b).transpose());
    t.accumulate(b, t.val(a).transpose() * ad);
  });
}

Var add_cols(Var x, Var b) {
  check_same(x, b);
  Tape& t = tp(x);
  Matrix v = t.val(x).colwise() + t.val(b).col(0);
  return t.push(std::move(v), [x = x.id, b = b.id, out = (int)t.size()](Tape& t) {
    const Matrix& ad = t.adjoint(Var{&t, out});
    t.accumulate(x, ad);
    t.accumulate(b, ad.rowwise().sum());
  });
}

Var colsum_t(Var a) {
  Tape& t = tp(a);
  Matrix v = t.val(a).colwise().sum().transpose();
  return t.push(std::move(v), [a = a.id, out = (int)t.size()](Tape& t) {
    const Matrix& ad = t.adjoint(Var{&t, out});  // n x 1
    Matrix ga = Matrix::Ones(t.val(a).rows(), 1) * ad.transpose();
    t.accumulate(a, ga);
  });
}

Var bcast_mul(Var x, Var s) {
  check_same(x, s);
  Tape& t = tp(x);
  double sv = t.val(s)(0, 0);
  return t.push(t.val(x) * sv, [x = x.id, s = s.id, out = (int)t.size()](Tape& t) {
    const Matrix& ad = t.adjoint(Var{&t, out});
    double sv = t.val(s)(0, 0);
    t.accumulate(x, ad * sv);
    Matrix gs(1, 1);
    gs(0, 0) = ad.cwiseProduct(t.val(x)).sum();
    t.accumulate(s, gs);
  });
}

Var gather(Var field, const Eigen::MatrixXi& idx, double fill) {
  Tape& t = tp(field);
  const Matrix& f = t.val(field);
  Matrix v(idx.rows(), idx.cols());
  for (Eigen::Index j = 0; j < idx.cols(); ++j)
    for (Eigen::Index i = 0; i < idx.rows(); ++i)
      v(i, j) = idx(i, j) >= 0 ? f(idx(i, j), 0) : fill;
  return t.push(std::move(v), [field = field.id, idx, out = (int)t.size()](Tape& t) {
    const Matrix& ad = t.adjoint(Var{&t, out});
    Matrix g = Matrix::Zero(t.val(field).rows(), 1);
    for (Eigen::Index j = 0; j < idx.cols(); ++j)
      for (Eigen::Index i = 0; i < idx.rows(); ++i)
        if (idx(i, j) >= 0) g(idx(i, j), 0) += ad(i, j);
    t.accumulate(field, g);
  });
}

Var scatter_add(Var vals, const Eigen::MatrixXi& idx, Eigen::Index out_rows) {
  Tape& t = tp(vals);
  const Matrix& v = t.val(vals);
  if (v.rows() != idx.rows() || v.cols() != idx.cols())
    throw std::logic_error("scatter_add: shape mismatch");
  Matrix o = Matrix::Zero(out_rows, 1);
  for (Eigen::Index j = 0; j < idx.cols(); ++j)
    for (Eigen::Index i = 0; i < idx.rows(); ++i)
      if (idx(i, j) >= 0) o(idx(i, j), 0) += v(i, j);
  return t.push(std::move(o), [vals = vals.id, idx, out = (int)t.size()](Tape& t) {
    const Matrix& ad = t.adjoint(Var{&t, out});
    Matrix g(idx.rows(), idx.cols());
    for (Eigen::Index j = 0; j < idx.cols(); ++j)
      for (Eigen::Index i = 0; i < idx.rows(); ++i)
        g(i, j) = idx(i, j) >= 0 ? ad(idx(i, j), 0) : 0.0;
    t.accumulate(vals, g);
  });
}

Var vconcat(const std::vector<Var>& parts) {
  if (parts.empty()) throw std::logic_error("vconcat: empty");
  Tape& t = tp(parts[0]);
  Eigen::Index total = 0;
  Eigen::Index cols = t.val(parts[0]).cols();
  for (Var p : parts) total += t.val(p).rows();
  Matrix v(total, cols);
  Eigen::Index r = 0;
  std::vector<int> ids;
  std::vector<Eigen::Index> offs;
  for (Var p : parts) {
    v.middleRows(r, t.val(p).rows()) = t.val(p);
    ids.push_back(p.id);
    offs.push_back(r);
    r += t.val(p).rows();
  }
  return t.push(std::move(v), [ids, offs, out = (int)t.size()](Tape& t) {
    const Matrix& ad = t.adjoint(Var{&t, out});
    for (std::size_t k = 0; k < ids.size(); ++k) {
      Eigen::Index n = t.val(ids[k]).rows();
      t.accumulate(ids[k], ad.middleRows(offs[k], n));
    }
  });
}

Var rows(Var a, Eigen::Index r0, Eigen::Index n) {
  Tape& t = tp(a);
  Matrix v = t.val(a).middleRows(r0, n);
  return t.push(std::move(v), [a = a.id, r0, n, out = (int)t.size()](Tape& t) {
    const Matrix& ad = t.adjoint(Var{&t, out});
    Matrix g = Matrix::Zero(t.val(a).rows(), t.val(a).cols());
    g.middleRows(r0, n) = ad;
    t.accumulate(a, g);
  });
}

}  // namespace dcflow::ad
