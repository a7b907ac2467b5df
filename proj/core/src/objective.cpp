#include "ewer/objective.hpp"

#include <cmath>

#include "ewer/errors.hpp"

namespace ewer {

Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
  if (!logits.allFinite())
    throw numeric_error("NonFiniteInput", "softmax over non-finite logits");
  Eigen::VectorXd shifted = logits.array() - logits.maxCoeff();
  Eigen::VectorXd e = shifted.array().exp();
  return e / e.sum();
}

double expected_wer(const Eigen::VectorXd& probs,
                    const Eigen::VectorXd& wer_fixed) {
  if (probs.size() != wer_fixed.size())
    throw input_error("LengthMismatch",
                      "probability and class value vectors differ in length");
  return probs.dot(wer_fixed);
}

double cross_entropy(const Eigen::VectorXd& probs, int true_class) {
  if (true_class < 0 || true_class >= probs.size())
    throw input_error("IndexOutOfRange", "true class " +
                                             std::to_string(true_class) +
                                             " for " +
                                             std::to_string(probs.size()) +
                                             " classes");
  return -std::log(std::max(probs[true_class], kProbFloor));
}

double distance_loss(const Eigen::VectorXd& probs, int true_class,
                     const Eigen::VectorXd& wer_fixed, double alpha) {
  double ce = cross_entropy(probs, true_class);
  double gamma = std::abs(expected_wer(probs, wer_fixed) -
                          wer_fixed[true_class]);
  return ce + alpha * gamma;
}

Eigen::VectorXd distance_loss_grad(const Eigen::VectorXd& logits,
                                   int true_class,
                                   const Eigen::VectorXd& wer_fixed,
                                   double alpha) {
  Eigen::VectorXd p = softmax(logits);
  if (true_class < 0 || true_class >= p.size())
    throw input_error("IndexOutOfRange", "true class out of range");

  Eigen::VectorXd grad = p;
  grad[true_class] -= 1.0;

  double signed_gamma = p.dot(wer_fixed) - wer_fixed[true_class];
  if (signed_gamma != 0.0) {
    double s = signed_gamma > 0.0 ? 1.0 : -1.0;
    grad.array() +=
        alpha * s * p.array() * (wer_fixed.array() - p.dot(wer_fixed));
  }
  return grad;
}

}  // namespace ewer
