#pragma once

// Gauge functions h(t) = t^s * exp(correction(log 1/t)), evaluated in
// log-space. Each gauge is non-decreasing on (0, r0] and constant
// (h_bar = min{1, h(r0)}) above the cutoff r0.

#include <span>
#include <string>
#include <vector>

namespace codetree {

enum class GaugeFamily { power, loglog_power, h1, h1_star };

const char* to_string(GaugeFamily family) noexcept;

class GaugeFunction {
 public:
  static GaugeFunction power(double s);
  // t^s (log log 1/t)^beta, beta > 0.
  static GaugeFunction loglog_power(double s, double beta);
  // t^s exp((1 - gamma) sqrt(2 beta L log log(beta L))), L = log 1/t.
  static GaugeFunction h1(double s, double beta, double gamma);
  // Same correction with the opposite sign.
  static GaugeFunction h1_star(double s, double beta, double gamma);

  double s() const noexcept { return s_; }
  GaugeFamily family() const noexcept { return family_; }
  double beta() const noexcept { return beta_; }
  double gamma() const noexcept { return gamma_; }

  double log_r0() const noexcept { return log_r0_; }
  double log_h_bar() const noexcept { return log_h_bar_; }
  // True when log_t lies in the formula region t <= r0.
  bool in_formula_region(double log_t) const noexcept { return log_t <= log_r0_; }

  // log h(t). Plateau above r0; DomainError on non-finite input.
  double eval_log(double log_t) const;

  // log h(t) - s log t on the formula region, with L = -log t.
  double correction(double L) const noexcept;

  std::string describe() const;

 private:
  GaugeFunction(double s, GaugeFamily family, double beta, double gamma);

  double s_;
  GaugeFamily family_;
  double beta_ = 0.0;
  double gamma_ = 0.0;
  double log_r0_ = 0.0;
  double log_h_bar_ = 0.0;
};

// The cutoff r0 (may underflow to 0 for tiny beta; see log_cutoff).
double cutoff(const GaugeFunction& h);
double log_cutoff(const GaugeFunction& h);

// h(2t)/h(t) at each grid point, computed in log-space.
std::vector<double> doubling_ratio_scan(const GaugeFunction& h, std::span<const double> log_t_grid);

}  // namespace codetree
