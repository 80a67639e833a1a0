#pragma once

#include "fwdcurve/space.hpp"

namespace fwdcurve {

/// Point-wise multiplication operator f -> h * f.  The kernel's sign cone is
/// cached at construction because invertibility is a cone property: only
/// kernels that are strictly positive (including the tail) or strictly
/// negative (including the tail) have a multiplicative inverse, and no lower
/// bound on |h| follows from norm(h) alone.
struct MultiplicativeKernel {
  CurveGrid kernel;
  Cone cone = Cone::none;
};

MultiplicativeKernel make_kernel(CurveGrid h);

/// (h f)(x) = h(x) f(x) node-wise, tails multiplied as well.
/// norm(mult_apply(h, f)) <= k_mult * norm(h) * norm(f) * (1 + kGridSlack).
CurveGrid mult_apply(const MultiplicativeKernel& h, const CurveGrid& f);

/// Node-wise reciprocal kernel.  Throws InvertibilityError naming the
/// offending node (or tail) when the kernel is not sign-definite.
MultiplicativeKernel invert_kernel(const MultiplicativeKernel& h);

/// exp applied node-wise; the result is strictly positive with positive
/// tail by construction.  Throws RangeError on overflow.
CurveGrid exp_map(const CurveGrid& f);

/// log applied node-wise; requires the argument in the strictly positive
/// cone with positive tail.  Inverse of exp_map node-exactly.
CurveGrid log_map(const CurveGrid& f);

}  // namespace fwdcurve
