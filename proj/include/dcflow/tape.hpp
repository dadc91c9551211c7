#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

namespace dcflow::ad {

using Matrix = Eigen::MatrixXd;

class Tape;

/// Handle to a value recorded on a tape. Cheap to copy; invalid when
/// default-constructed.
struct Var {
  Tape* tape = nullptr;
  int id = -1;
  bool valid() const { return tape != nullptr && id >= 0; }
};

struct Node {
  Matrix value;
  Matrix adjoint;                        // empty until touched by the sweep
  std::function<void(Tape&)> backward;   // null for leaves / no-grad nodes
};

/// Append-only record of primitive operations. Reverse sweep replays the
/// backward closures in reverse order, accumulating adjoints.
///
/// When grad_enabled is false, ops still compute values (same code path as
/// training) but record no closures; callers clear() between steps to bound
/// memory during inference rollouts.
class Tape {
 public:
  bool grad_enabled = true;
  /// Opt-in for reduced-precision kernels (single-precision MLP forward) on
  /// plain inference rollouts. Kept separate from grad_enabled so that
  /// finite-difference gradient checks, which also run without gradients,
  /// stay in full double precision.
  bool fast_math = false;

  Var leaf(Matrix v);
  Var scalar(double s);
  Var zeros(Eigen::Index rows, Eigen::Index cols = 1);

  Var push(Matrix value, std::function<void(Tape&)> bw);

  const Matrix& val(Var v) const;
  const Matrix& val(int id) const { return nodes_[id].value; }
  const Matrix& adjoint(Var v) const;
  bool has_adjoint(int id) const { return nodes_[id].adjoint.size() != 0; }
  void accumulate(int id, const Matrix& g);

  /// Full reverse sweep from a scalar (1x1) output. Resets previous adjoints.
  void backward(Var output);

  void clear();
  std::size_t size() const { return nodes_.size(); }

 private:
  std::vector<Node> nodes_;
  static const Matrix empty_;
};

// Elementwise arithmetic (shapes must match).
Var operator+(Var a, Var b);
Var operator-(Var a, Var b);
Var operator*(Var a, Var b);
Var operator/(Var a, Var b);
Var operator-(Var a);
Var operator+(Var a, double c);
Var operator+(double c, Var a);
Var operator-(Var a, double c);
Var operator-(double c, Var a);
Var operator*(Var a, double c);
Var operator*(double c, Var a);
Var operator/(Var a, double c);

Var tanh_(Var a);
Var square(Var a);

/// mask(i,j) in {0,1}: picks a where 1, b where 0. The mask is a constant;
/// branches are differentiated along the taken side.
Var select(const Eigen::ArrayXXd& mask, Var a, Var b);
Var select(const Eigen::ArrayXXd& mask, Var a, double b);

Var pos_part(Var a);   // max(a, 0) elementwise
Var neg_part(Var a);   // max(-a, 0) elementwise
Var clip(Var a, double lo, double hi);

Var sum(Var a);        // 1x1
Var sum_abs(Var a);    // 1x1, L1 norm
Var max_abs(Var a);    // 1x1, adjoint routed to the argmax entry

Var matmul(Var a, Var b);
Var add_cols(Var x, Var b);        // x(k,n) + b(k,1) broadcast over columns
Var colsum_t(Var a);               // (k,n) -> (n,1) column sums
Var bcast_mul(Var x, Var s);       // x * s, s is 1x1

/// out(i,j) = field(idx(i,j), 0), entries with idx < 0 become `fill`
/// (constant, no gradient).
Var gather(Var field, const Eigen::MatrixXi& idx, double fill = 0.0);
/// out(k,1) with out[idx(i,j)] += vals(i,j); idx < 0 entries are dropped.
Var scatter_add(Var vals, const Eigen::MatrixXi& idx, Eigen::Index out_rows);

Var vconcat(const std::vector<Var>& parts);
Var rows(Var a, Eigen::Index r0, Eigen::Index n);

}  // namespace dcflow::ad
