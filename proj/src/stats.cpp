#include "gravipanel/stats.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <limits>

#include "gravipanel/errors.hpp"

namespace gravipanel {

namespace {
const boost::math::normal_distribution<double> kStdNormal(0.0, 1.0);
}

double normal_cdf(double x) { return boost::math::cdf(kStdNormal, x); }

double normal_sf(double x) { return boost::math::cdf(boost::math::complement(kStdNormal, x)); }

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw ValidationError("normal_quantile: p must be in (0,1)");
    return boost::math::quantile(kStdNormal, p);
}

double chi2_sf(double x, int df) {
    if (df <= 0) throw ValidationError("chi2_sf: df must be positive");
    if (x <= 0.0) return 1.0;
    boost::math::chi_squared_distribution<double> d(df);
    return boost::math::cdf(boost::math::complement(d, x));
}

double chi2_quantile(double p, int df) {
    if (df <= 0) throw ValidationError("chi2_quantile: df must be positive");
    boost::math::chi_squared_distribution<double> d(df);
    return boost::math::quantile(d, p);
}

double t_two_sided_p(double t, long df) {
    if (df <= 0) throw ValidationError("t_two_sided_p: df must be positive");
    if (std::isnan(t)) return std::numeric_limits<double>::quiet_NaN();
    if (std::isinf(t)) return 0.0;
    boost::math::students_t_distribution<double> d(static_cast<double>(df));
    return 2.0 * boost::math::cdf(boost::math::complement(d, std::abs(t)));
}

double f_sf(double x, int df1, int df2) {
    if (df1 <= 0 || df2 <= 0) throw ValidationError("f_sf: df must be positive");
    if (x <= 0.0) return 1.0;
    boost::math::fisher_f_distribution<double> d(df1, df2);
    return boost::math::cdf(boost::math::complement(d, x));
}

}  // namespace gravipanel
