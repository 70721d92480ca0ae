#ifndef DOPO_RATIONAL_HPP
#define DOPO_RATIONAL_HPP

#include <boost/multiprecision/cpp_int.hpp>
#include <boost/rational.hpp>

namespace dopo {

using BigInt   = boost::multiprecision::cpp_int;
using Rational = boost::rational<BigInt>;

inline BigInt big_factorial(int n) {
    BigInt r = 1;
    for (int k = 2; k <= n; ++k) r *= k;
    return r;
}

inline BigInt big_binomial(int n, int k) {
    if (k < 0 || k > n) return 0;
    BigInt r = 1;
    for (int j = 1; j <= k; ++j) {
        r *= (n - k + j);
        r /= j;
    }
    return r;
}

inline double to_double(const Rational &q) {
    // cpp_int -> double conversion is fine for the magnitudes used here.
    return q.numerator().convert_to<double>() / q.denominator().convert_to<double>();
}

} // namespace dopo

#endif
