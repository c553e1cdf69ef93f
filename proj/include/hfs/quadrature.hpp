#pragma once

#include <functional>

#include "hfs/types.hpp"

namespace hfs::quad {

/// Refinement did not reach the requested tolerance.
class OracleAccuracyError : public Error {
 public:
  using Error::Error;
};

struct QuadResult {
  double value = 0.0;
  double error = 0.0;  // summed Kronrod error estimate
};

/// Adaptive 7/15-point Gauss-Kronrod on [a, b] with global bisection.
/// The interval is pre-split into `initial_segments` equal pieces so narrow
/// features cannot fall between the nodes of a single rule.
QuadResult integrate(const std::function<double(double)>& f, double a, double b, double abs_tol,
                     int initial_segments = 1, int max_intervals = 4000);

}  // namespace hfs::quad
