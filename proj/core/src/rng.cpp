#include "cola/rng.hpp"

#include <cmath>
#include <numbers>

namespace cola {

double Rng::normal() {
  const double u1 = uniform01();
  const double u2 = uniform01();
  const double r = std::sqrt(-2.0 * std::log(1.0 - u1));
  return r * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace cola
