#include "fwdcurve/operators.hpp"

#include <cmath>
#include <sstream>

namespace fwdcurve {

MultiplicativeKernel make_kernel(CurveGrid h) {
  MultiplicativeKernel k{std::move(h), Cone::none};
  k.cone = cone_membership(k.kernel);
  return k;
}

CurveGrid mult_apply(const MultiplicativeKernel& h, const CurveGrid& f) {
  ensure_same_config(h.kernel, f, "mult_apply");
  CurveGrid out = f;
  const int n = f.config->n_nodes();
  for (int i = 0; i < n; ++i) out.values[i] = h.kernel.values[i] * f.values[i];
  out.tail = h.kernel.tail * f.tail;
  return out;
}

namespace {

[[noreturn]] void throw_not_invertible(const CurveGrid& h) {
  // Name the first location breaking sign-definiteness to make the error
  // actionable.
  const int n = h.config->n_nodes();
  std::ostringstream msg;
  msg << "invert_kernel: kernel is not sign-definite";
  for (int i = 0; i < n; ++i) {
    if (h.values[i] == 0.0) {
      msg << " (node " << i << " at x=" << h.config->node(i) << " is 0)";
      throw InvertibilityError(msg.str());
    }
  }
  if (h.tail == 0.0) {
    msg << " (tail is 0)";
    throw InvertibilityError(msg.str());
  }
  // Mixed signs: report the first sign change.
  const double s0 = h.values[0] > 0.0 ? 1.0 : -1.0;
  for (int i = 0; i < n; ++i) {
    if (h.values[i] * s0 < 0.0) {
      msg << " (node " << i << " at x=" << h.config->node(i)
          << " has value " << h.values[i] << ", opposite sign to node 0)";
      throw InvertibilityError(msg.str());
    }
  }
  msg << " (tail " << h.tail << " has opposite sign to the nodes)";
  throw InvertibilityError(msg.str());
}

}  // namespace

MultiplicativeKernel invert_kernel(const MultiplicativeKernel& h) {
  if (h.cone != Cone::h_greater && h.cone != Cone::h_less)
    throw_not_invertible(h.kernel);
  CurveGrid inv = h.kernel;
  for (double& v : inv.values) v = 1.0 / v;
  inv.tail = 1.0 / h.kernel.tail;
  MultiplicativeKernel out{std::move(inv), h.cone};
  return out;
}

CurveGrid exp_map(const CurveGrid& f) {
  CurveGrid out = f;
  const int n = f.config->n_nodes();
  for (int i = 0; i <= n; ++i) {
    const bool is_tail = (i == n);
    const double v = is_tail ? f.tail : f.values[i];
    const double e = std::exp(v);
    if (!std::isfinite(e)) {
      std::ostringstream msg;
      msg << "exp_map: overflow at "
          << (is_tail ? std::string("tail") : "node " + std::to_string(i))
          << " (value " << v << ")";
      throw RangeError(msg.str());
    }
    if (is_tail)
      out.tail = e;
    else
      out.values[i] = e;
  }
  return out;
}

CurveGrid log_map(const CurveGrid& f) {
  if (cone_membership(f) != Cone::h_greater) {
    const int n = f.config->n_nodes();
    for (int i = 0; i < n; ++i) {
      if (!(f.values[i] > 0.0)) {
        std::ostringstream msg;
        msg << "log_map: node " << i << " at x=" << f.config->node(i)
            << " has non-positive value " << f.values[i];
        throw DomainError(msg.str());
      }
    }
    throw DomainError("log_map: tail is non-positive");
  }
  CurveGrid out = f;
  for (double& v : out.values) v = std::log(v);
  out.tail = std::log(f.tail);
  return out;
}

}  // namespace fwdcurve
