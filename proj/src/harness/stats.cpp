#include <algorithm>
#include <cmath>

#include <boost/math/distributions/binomial.hpp>

#include "gpconc/errors.hpp"
#include "gpconc/harness.hpp"

namespace gpconc {

namespace {

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

LineFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
  const auto n = static_cast<double>(x.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw Error(ErrorKind::FitFailure, "regression abscissae are degenerate");
  LineFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ssr = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (fit.intercept + fit.slope * x[i]);
    ssr += r * r;
  }
  fit.r2 = syy > 0.0 ? 1.0 - ssr / syy : 1.0;
  return fit;
}

void collect(const std::vector<double>& trace, std::size_t from, std::size_t to, double (*abscissa)(double, double),
             double shape, std::vector<double>& x, std::vector<double>& y) {
  if (from > to || to >= trace.size()) {
    throw Error(ErrorKind::FitFailure, "fit range lies outside the measured trace");
  }
  for (std::size_t n = from; n <= to; ++n) {
    if (trace[n] > 0.0) {
      x.push_back(abscissa(static_cast<double>(n), shape));
      y.push_back(std::log(trace[n]));
    }
  }
  if (x.size() < 2) throw Error(ErrorKind::FitFailure, "fewer than two positive trace values in the fit range");
}

}  // namespace

PolynomialFit fit_polynomial(const std::vector<double>& trace, std::size_t from, std::size_t to) {
  std::vector<double> x;
  std::vector<double> y;
  collect(trace, from, to, [](double n, double) { return std::log(n + 1.0); }, 0.0, x, y);
  const LineFit line = least_squares(x, y);
  PolynomialFit fit;
  fit.alpha = -line.slope;
  fit.log_C = line.intercept;
  fit.r2 = line.r2;
  for (std::size_t n = 0; n < trace.size(); ++n) {
    fit.C = std::max(fit.C, trace[n] * std::pow(static_cast<double>(n) + 1.0, fit.alpha));
  }
  return fit;
}

ExponentialFit fit_exponential(const std::vector<double>& trace, double alpha, std::size_t from, std::size_t to) {
  if (!(alpha >= 1.0)) throw Error(ErrorKind::InvalidParameter, "exponential shape exponent must be >= 1");
  std::vector<double> x;
  std::vector<double> y;
  collect(trace, from, to, [](double n, double a) { return std::pow(n, 1.0 / a); }, alpha, x, y);
  const LineFit line = least_squares(x, y);
  ExponentialFit fit;
  fit.alpha = alpha;
  fit.C2 = -line.slope;
  fit.log_C1 = line.intercept;
  fit.r2 = line.r2;
  for (std::size_t n = 0; n < trace.size(); ++n) {
    fit.C1 = std::max(fit.C1, trace[n] * std::exp(fit.C2 * std::pow(static_cast<double>(n), 1.0 / alpha)));
  }
  return fit;
}

QuantileEstimate empirical_quantile(std::vector<double> samples, double level) {
  if (samples.empty()) throw Error(ErrorKind::InvalidParameter, "quantile of an empty sample");
  if (!(level > 0.0 && level < 1.0)) throw Error(ErrorKind::InvalidParameter, "quantile level must lie in (0, 1)");
  std::sort(samples.begin(), samples.end());
  const std::size_t M = samples.size();
  const auto rank = [M](double r) {
    return static_cast<std::size_t>(std::clamp(r, 1.0, static_cast<double>(M)));
  };
  const boost::math::binomial_distribution<double> dist(static_cast<double>(M), level);
  const double lo = boost::math::quantile(dist, 0.025);
  const double hi = boost::math::quantile(boost::math::complement(dist, 0.025)) + 1.0;
  QuantileEstimate q;
  q.value = samples[rank(std::ceil(level * static_cast<double>(M))) - 1];
  q.lower = samples[rank(lo) - 1];
  q.upper = samples[rank(hi) - 1];
  return q;
}

}  // namespace gpconc
