#pragma once

// Local log-gamma and digamma so the likelihood kernel is self-contained and
// gives identical bits on every platform (libm implementations differ).
//  * lgamma_pos: Lanczos approximation (g = 7, 9 coefficients), reflection
//    for x < 1/2; relative error below ~1e-14 on (0, 1e12).
//  * digamma: upward recurrence psi(x) = psi(x+1) - 1/x until x >= 8, then
//    the Bernoulli asymptotic series through x^-12; absolute error <= ~2e-14.

namespace palmkit {

// log Gamma(x) for x > 0.
double lgamma_pos(double x);

// psi(x) = d/dx log Gamma(x) for x > 0.
double digamma(double x);

}  // namespace palmkit
