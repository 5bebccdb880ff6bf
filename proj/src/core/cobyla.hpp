#ifndef PW_COBYLA_HPP
#define PW_COBYLA_HPP

#include <functional>

namespace pw::optim {

struct Cobyla1dResult {
  double x = 0.0;
  double value = 0.0;
  int evaluations = 0;
};

// Derivative-free trust-region minimization of f over [lo, hi] by linear
// approximation: a two-point simplex gives the local linear model, steps are
// bounded by the trust radius, and the radius shrinks only when the model
// stops producing improvement.
Cobyla1dResult cobyla_minimize_1d(const std::function<double(double)>& f, double x0, double lo,
                                  double hi, double rhoBegin, double rhoEnd);

}  // namespace pw::optim

#endif
