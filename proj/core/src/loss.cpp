#include "mfl/loss.hpp"

#include <cmath>
#include <stdexcept>

namespace mfl {

namespace {

double clipped(double f, ProbClip clip) {
  if (!(clip.epsilon > 0.0 && clip.epsilon < 0.5)) {
    throw std::invalid_argument("ProbClip: epsilon must be in (0, 0.5)");
  }
  if (f < clip.epsilon) return clip.epsilon;
  if (f > 1.0 - clip.epsilon) return 1.0 - clip.epsilon;
  return f;
}

void check_inputs(const LossSpec& spec, int y, double f) {
  spec.validate();
  if (y != 0 && y != 1) throw std::invalid_argument("loss: y must be 0 or 1");
  if (!(f >= 0.0 && f <= 1.0)) {
    throw std::invalid_argument("loss: probability outside [0, 1]");
  }
}

}  // namespace

const char* to_string(LossKind kind) {
  switch (kind) {
    case LossKind::focal: return "focal";
    case LossKind::cross_entropy: return "cross_entropy";
    case LossKind::hinge: return "hinge";
    case LossKind::zero_one: return "zero_one";
    case LossKind::hamming: return "hamming";
  }
  return "unknown";
}

void LossSpec::validate() const {
  if (kind == LossKind::focal) {
    if (!(alpha > 0.0 && alpha < 1.0)) {
      throw std::invalid_argument("LossSpec: focal alpha must be in (0, 1)");
    }
    if (!(gamma >= 0.0)) {
      throw std::invalid_argument("LossSpec: focal gamma must be >= 0");
    }
  }
}

bool is_differentiable(const LossSpec& spec) {
  return spec.kind == LossKind::focal || spec.kind == LossKind::cross_entropy ||
         spec.kind == LossKind::hinge;
}

double loss_value(const LossSpec& spec, int y, double f, ProbClip clip) {
  check_inputs(spec, y, f);
  switch (spec.kind) {
    case LossKind::focal: {
      const double fc = clipped(f, clip);
      // gamma == 0 degenerates to class-weighted cross entropy; written out
      // so the scaling against cross_entropy is numerically exact.
      if (spec.gamma == 0.0) {
        return y == 1 ? spec.alpha * -std::log(fc)
                      : (1.0 - spec.alpha) * -std::log(1.0 - fc);
      }
      return y == 1 ? spec.alpha * std::pow(1.0 - fc, spec.gamma) * -std::log(fc)
                    : (1.0 - spec.alpha) * std::pow(fc, spec.gamma) *
                          -std::log(1.0 - fc);
    }
    case LossKind::cross_entropy: {
      const double fc = clipped(f, clip);
      return y == 1 ? -std::log(fc) : -std::log(1.0 - fc);
    }
    case LossKind::hinge: {
      const double margin = (2.0 * y - 1.0) * (2.0 * f - 1.0);
      return std::max(0.0, 1.0 - margin);
    }
    case LossKind::zero_one:
    case LossKind::hamming: {
      const int pred = f >= 0.5 ? 1 : 0;
      return pred == y ? 0.0 : 1.0;
    }
  }
  throw std::invalid_argument("loss_value: invalid spec");
}

double loss_grad_f(const LossSpec& spec, int y, double f, ProbClip clip) {
  check_inputs(spec, y, f);
  switch (spec.kind) {
    case LossKind::focal: {
      const double fc = clipped(f, clip);
      const double a = spec.alpha;
      const double g = spec.gamma;
      if (g == 0.0) {
        return y == 1 ? -(a / fc) : (1.0 - a) / (1.0 - fc);
      }
      if (y == 1) {
        return a * g * std::pow(1.0 - fc, g - 1.0) * std::log(fc) -
               a * std::pow(1.0 - fc, g) / fc;
      }
      return -(1.0 - a) * g * std::pow(fc, g - 1.0) * std::log(1.0 - fc) +
             (1.0 - a) * std::pow(fc, g) / (1.0 - fc);
    }
    case LossKind::cross_entropy: {
      const double fc = clipped(f, clip);
      return y == 1 ? -(1.0 / fc) : 1.0 / (1.0 - fc);
    }
    case LossKind::hinge:
      // the kinks sit at f = 1 (y = 1) and f = 0 (y = 0), outside the
      // clipped interior
      return y == 1 ? -2.0 : 2.0;
    case LossKind::zero_one:
    case LossKind::hamming:
      throw std::invalid_argument(
          "loss_grad_f: zero_one/hamming are not differentiable; use "
          "derivative-free weight search");
  }
  throw std::invalid_argument("loss_grad_f: invalid spec");
}

}  // namespace mfl
