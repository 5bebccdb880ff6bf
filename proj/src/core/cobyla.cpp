#include "cobyla.hpp"

#include <algorithm>
#include <cmath>

namespace pw::optim {

Cobyla1dResult cobyla_minimize_1d(const std::function<double(double)>& f, double x0, double lo,
                                  double hi, double rhoBegin, double rhoEnd) {
  Cobyla1dResult res;
  double x = std::clamp(x0, lo, hi);
  auto eval = [&](double u) {
    ++res.evaluations;
    return f(u);
  };
  double fx = eval(x);
  double rho = rhoBegin;
  while (rho > rhoEnd) {
    // second simplex vertex inside the box
    double x2 = x + rho <= hi ? x + rho : x - rho;
    x2 = std::clamp(x2, lo, hi);
    if (x2 == x) {
      rho *= 0.5;
      continue;
    }
    double f2 = eval(x2);
    double slope = (f2 - fx) / (x2 - x);
    double cand = std::clamp(slope > 0.0 ? x - rho : x + rho, lo, hi);
    double fc = cand == x ? fx : (cand == x2 ? f2 : eval(cand));

    // move to the best vertex; shrink only when the model failed to improve
    double bestF = fx;
    double bestX = x;
    if (f2 < bestF) {
      bestF = f2;
      bestX = x2;
    }
    if (fc < bestF) {
      bestF = fc;
      bestX = cand;
    }
    if (bestF < fx - 1e-15) {
      x = bestX;
      fx = bestF;
    } else {
      rho *= 0.5;
    }
  }
  res.x = x;
  res.value = fx;
  return res;
}

}  // namespace pw::optim
