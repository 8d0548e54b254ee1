#pragma once

#include <string>

namespace mfl {

enum class LossKind { focal, cross_entropy, hinge, zero_one, hamming };

const char* to_string(LossKind kind);

/// Pointwise classification loss. `alpha` and `gamma` only participate for
/// the focal kind and are ignored otherwise.
struct LossSpec {
  LossKind kind = LossKind::focal;
  double alpha = 0.95;
  double gamma = 2.0;

  static LossSpec focal(double alpha, double gamma) {
    return {LossKind::focal, alpha, gamma};
  }
  static LossSpec cross_entropy() { return {LossKind::cross_entropy, 0, 0}; }
  static LossSpec hinge() { return {LossKind::hinge, 0, 0}; }
  static LossSpec zero_one() { return {LossKind::zero_one, 0, 0}; }
  static LossSpec hamming() { return {LossKind::hamming, 0, 0}; }

  /// Throws std::invalid_argument when focal parameters are out of range.
  void validate() const;
};

/// Guard applied to predicted probabilities before any logarithm.
struct ProbClip {
  double epsilon = 1e-12;
};

bool is_differentiable(const LossSpec& spec);

/// Loss at label y in {0,1} and predicted positive-class probability f in
/// [0,1]. f is clipped to [eps, 1-eps] before any log.
///
///   focal:         -y*alpha*(1-f)^gamma*log(f) - (1-y)*(1-alpha)*f^gamma*log(1-f)
///   cross_entropy: -y*log(f) - (1-y)*log(1-f)
///   hinge:         max(0, 1 - (2y-1)*(2f-1))
///   zero_one/hamming: 1 when the 0.5-thresholded prediction differs from y
double loss_value(const LossSpec& spec, int y, double f, ProbClip clip = {});

/// Exact derivative d(loss)/df at interior f. Throws std::invalid_argument
/// for zero_one/hamming, signalling the caller to use derivative-free
/// weight search.
double loss_grad_f(const LossSpec& spec, int y, double f, ProbClip clip = {});

}  // namespace mfl
