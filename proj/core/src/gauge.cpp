#include "codetree/gauge.hpp"

#include "codetree/errors.hpp"
#include "codetree/rifs.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace codetree {

const char* to_string(GaugeFamily family) noexcept {
  switch (family) {
    case GaugeFamily::power: return "power";
    case GaugeFamily::loglog_power: return "loglog_power";
    case GaugeFamily::h1: return "h1";
    case GaugeFamily::h1_star: return "h1_star";
  }
  return "unknown";
}

GaugeFunction::GaugeFunction(double s, GaugeFamily family, double beta, double gamma)
    : s_(s), family_(family), beta_(beta), gamma_(gamma) {
  if (!std::isfinite(s) || s < 0.0) throw DomainError("gauge exponent s must be finite and >= 0");
  switch (family_) {
    case GaugeFamily::power:
      log_r0_ = 0.0;
      break;
    case GaugeFamily::loglog_power: {
      if (!std::isfinite(beta) || beta <= 0.0) throw DomainError("loglog_power requires beta > 0");
      // Stationary point of -s x + beta log log x: x log x = beta / s.
      double x;
      if (s == 0.0) {
        x = std::numbers::e;  // monotone for all x > 1; keep log log x >= 0
      } else {
        const double target = beta / s;
        double hi = 2.0;
        while (hi * std::log(hi) < target) hi *= 2.0;
        x = bisect_decreasing([&](double y) { return target - y * std::log(y); }, 1.0, hi, 1e-12);
      }
      log_r0_ = -x;
      break;
    }
    case GaugeFamily::h1:
    case GaugeFamily::h1_star:
      if (!std::isfinite(beta) || beta <= 0.0) throw DomainError("h1 gauges require beta > 0");
      if (!std::isfinite(gamma)) throw DomainError("gamma must be finite");
      // log log(beta L) >= 0 from beta L = e on.
      log_r0_ = -std::numbers::e / beta;
      break;
  }
  log_h_bar_ = std::min(0.0, s_ * log_r0_ + correction(-log_r0_));
}

GaugeFunction GaugeFunction::power(double s) { return {s, GaugeFamily::power, 0.0, 0.0}; }
GaugeFunction GaugeFunction::loglog_power(double s, double beta) {
  return {s, GaugeFamily::loglog_power, beta, 0.0};
}
GaugeFunction GaugeFunction::h1(double s, double beta, double gamma) {
  return {s, GaugeFamily::h1, beta, gamma};
}
GaugeFunction GaugeFunction::h1_star(double s, double beta, double gamma) {
  return {s, GaugeFamily::h1_star, beta, gamma};
}

double GaugeFunction::correction(double L) const noexcept {
  switch (family_) {
    case GaugeFamily::power:
      return 0.0;
    case GaugeFamily::loglog_power:
      return beta_ * std::log(std::log(L));
    case GaugeFamily::h1:
    case GaugeFamily::h1_star: {
      const double bl = beta_ * L;
      const double lll = std::max(0.0, std::log(std::log(bl)));
      const double c = (1.0 - gamma_) * std::sqrt(2.0 * bl * lll);
      return family_ == GaugeFamily::h1 ? c : -c;
    }
  }
  return 0.0;
}

double GaugeFunction::eval_log(double log_t) const {
  if (!std::isfinite(log_t)) throw DomainError("gauge argument must be finite");
  if (!in_formula_region(log_t)) return log_h_bar_;
  return s_ * log_t + correction(-log_t);
}

std::string GaugeFunction::describe() const {
  std::ostringstream os;
  os << to_string(family_) << "(s=" << s_;
  if (family_ != GaugeFamily::power) os << ", beta=" << beta_;
  if (family_ == GaugeFamily::h1 || family_ == GaugeFamily::h1_star) os << ", gamma=" << gamma_;
  os << ")";
  return os.str();
}

double cutoff(const GaugeFunction& h) { return std::exp(h.log_r0()); }
double log_cutoff(const GaugeFunction& h) { return h.log_r0(); }

std::vector<double> doubling_ratio_scan(const GaugeFunction& h, std::span<const double> log_t_grid) {
  std::vector<double> out;
  out.reserve(log_t_grid.size());
  for (const double lt : log_t_grid) {
    out.push_back(std::exp(h.eval_log(lt + std::numbers::ln2) - h.eval_log(lt)));
  }
  return out;
}

}  // namespace codetree
