#pragma once
#include <Eigen/Core>
#include <vector>

namespace kho {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

enum class Act : int { Identity = 0, ReLU = 1, Tanh = 2 };

struct DenseLayer {
  Mat W;   // out x in
  Vec b;   // out
  Act act = Act::Identity;
};
using Stack = std::vector<DenseLayer>;

// Gradient accumulator shaped like a Stack.
struct StackGrad {
  std::vector<Mat> dW;
  std::vector<Vec> db;
  void init_like(const Stack& s);
  void set_zero();
  void add(const StackGrad& o);
  void add_scaled(const StackGrad& o, double s);
};

// -------- value pass --------

// columns of X are samples
Mat forward(const Stack& s, const Mat& X);

struct Trace {
  Mat in;
  std::vector<Mat> a;  // post-activation per layer; a.back() is the output
};
const Mat& forward_trace(const Stack& s, const Mat& X, Trace& tr);

// Back-propagates out_adj (n_out x B), accumulating into g.  Returns the input
// adjoint when want_input_adj, else an empty matrix (saves the first GEMM).
Mat backward(const Stack& s, const Trace& tr, const Mat& out_adj, StackGrad& g,
             bool want_input_adj = false);

// -------- jet pass --------
//
// A jet batch carries, per sample column: the value, m first-derivative
// channels (one per seeded input direction), and a SINGLE second-derivative
// channel holding the sum of the seeded d2's.  The sum is enough to reach
// Laplacians because second derivatives propagate linearly through both the
// affine maps and the activation rule  a2 = s2 * z1^2 + s1 * z2.

struct JetBatch {
  Mat v;
  std::vector<Mat> d1;
  Mat d2;
  int dirs() const { return int(d1.size()); }
};

struct JetLayerRec {
  Mat t;                // post-activation value
  std::vector<Mat> z1;  // pre-activation first-derivative channels
  Mat z2;               // pre-activation summed second-derivative channel
  std::vector<Mat> a1;  // post-activation first-derivative channels
  Mat a2;               // post-activation summed second-derivative channel
  Mat q;                // sum_k z1[k]^2 (kept for the tanh backward)
};

struct JetTrace {
  JetBatch in;
  std::vector<JetLayerRec> rec;
  const JetLayerRec& out() const { return rec.back(); }
};

void jet_forward(const Stack& s, const JetBatch& in, JetTrace& tr);

// light version when no backward pass is needed (evaluation only)
void jet_eval(const Stack& s, const JetBatch& in, JetBatch& out);

// out_adj channels may be empty matrices, meaning zero adjoint for
// that channel.  Returns the input-adjoint jet batch when requested.
JetBatch jet_backward(const Stack& s, const JetTrace& tr, const JetBatch& out_adj,
                      StackGrad& g, bool want_input_adj = false);

// elementwise activation value (used by tests and small paths)
double act_value(Act a, double z);

}  // namespace kho
