#pragma once

// Thin wrappers over Boost.Math special functions. Double precision is kept
// throughout (no promotion to long double); Boost documents these at a few
// ulp over the parameter ranges used here.

#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <cmath>

namespace flexdur::special {

using Policy = boost::math::policies::policy<
    boost::math::policies::promote_double<false>,
    boost::math::policies::overflow_error<boost::math::policies::errno_on_error>,
    boost::math::policies::evaluation_error<boost::math::policies::errno_on_error>>;

inline double lgamma(double x) { return boost::math::lgamma(x, Policy{}); }

inline double gamma_p(double a, double x) { return boost::math::gamma_p(a, x, Policy{}); }

inline double gamma_q(double a, double x) { return boost::math::gamma_q(a, x, Policy{}); }

inline double ibeta(double a, double b, double x) { return boost::math::ibeta(a, b, x, Policy{}); }

inline double lbeta(double a, double b) {
    const double direct = boost::math::beta(a, b, Policy{});
    if (direct > 0.0 && std::isfinite(direct)) {
        return std::log(direct);
    }
    return lgamma(a) + lgamma(b) - lgamma(a + b);
}

}  // namespace flexdur::special
