#ifndef EWER_OBJECTIVE_HPP_
#define EWER_OBJECTIVE_HPP_

#include <Eigen/Core>

namespace ewer {

struct LossConfig {
  enum class Kind { cross_entropy, distance };

  Kind kind = Kind::distance;
  // Weight of the ordinal distance term. Calibrated against class values on
  // the fractional 0-1.5 scale; ignored for plain cross entropy.
  double alpha = 50.0;
};

struct Prediction {
  Eigen::VectorXd probs;
  double expected_wer = 0.0;  // percent
  int argmax_class = 0;
};

// Numerically stable softmax (max subtraction). Throws NonFiniteInput.
Eigen::VectorXd softmax(const Eigen::VectorXd& logits);

// Dot product of a probability vector with the per-class representative
// values. Throws LengthMismatch.
double expected_wer(const Eigen::VectorXd& probs,
                    const Eigen::VectorXd& wer_fixed);

// -ln p[true_class], with the probability floored at 1e-12 so the loss
// stays finite. Throws IndexOutOfRange.
double cross_entropy(const Eigen::VectorXd& probs, int true_class);

// Cross entropy plus alpha * |probs . wer_fixed - wer_fixed[true_class]|.
// Callers pass wer_fixed on the fractional scale (0-1.5) during training.
double distance_loss(const Eigen::VectorXd& probs, int true_class,
                     const Eigen::VectorXd& wer_fixed, double alpha);

// Analytic gradient of distance_loss(softmax(logits), ...) w.r.t. the
// logits. The cross-entropy part is probs - one_hot; the distance part is
// sign(gamma) * alpha * probs .* (wer_fixed - probs . wer_fixed), with
// subgradient 0 at the kink.
Eigen::VectorXd distance_loss_grad(const Eigen::VectorXd& logits,
                                   int true_class,
                                   const Eigen::VectorXd& wer_fixed,
                                   double alpha);

constexpr double kProbFloor = 1e-12;

}  // namespace ewer

#endif  // EWER_OBJECTIVE_HPP_
