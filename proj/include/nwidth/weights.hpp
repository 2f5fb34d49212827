#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "nwidth/error.hpp"
#include "nwidth/grid.hpp"
#include "nwidth/quadrature.hpp"

namespace nwidth {

// x^(-beta) |ln x|^(-alpha) rho(|ln x|), rho(y) = (1 + ln y)^gamma, on (0, 1).
struct PowerLogWeight {
  double beta = 0;
  double alpha = 0;
  double gamma = 0;  // 0: rho = 1
  double scale = 1;

  bool rho_trivial() const { return gamma == 0; }

  double operator()(double x) const {
    const double y = -std::log(x);
    double w = scale * std::pow(x, -beta) * std::pow(y, -alpha);
    if (gamma != 0) w *= std::pow(1 + std::log(y), gamma);
    return w;
  }
};

struct TrigTerm {
  double amplitude = 0;
  double frequency = 0;
  double phase = 0;
};

// Positive weight description, evaluable anywhere in its domain.
class WeightSpec {
 public:
  enum class Kind { constant, power_log, trig };

  WeightSpec() = default;

  static WeightSpec constant(double c) {
    if (!(c > 0) || !std::isfinite(c)) throw Error(ErrorKind::invalid_argument, "constant weight must be positive");
    WeightSpec w;
    w.kind_ = Kind::constant;
    w.scale_ = c;
    return w;
  }

  static WeightSpec power_log(PowerLogWeight p) {
    if (!(p.scale > 0)) throw Error(ErrorKind::invalid_argument, "power-log weight scale must be positive");
    WeightSpec w;
    w.kind_ = Kind::power_log;
    w.power_log_ = p;
    return w;
  }

  // scale * exp(sum a_j sin(omega_j t + phi_j))
  static WeightSpec trig(double scale, std::vector<TrigTerm> terms) {
    if (!(scale > 0)) throw Error(ErrorKind::invalid_argument, "trig weight scale must be positive");
    WeightSpec w;
    w.kind_ = Kind::trig;
    w.scale_ = scale;
    w.terms_ = std::move(terms);
    return w;
  }

  static WeightSpec random_smooth(std::mt19937_64& rng, double a, double b, int terms = 3) {
    std::uniform_real_distribution<double> amp(-0.5, 0.5), phase(0, 2 * std::numbers::pi), sc(0.5, 2);
    std::vector<TrigTerm> t;
    for (int j = 1; j <= terms; ++j)
      t.push_back({amp(rng) / j, j * std::numbers::pi / (b - a), phase(rng)});
    return trig(sc(rng), std::move(t));
  }

  Kind kind() const { return kind_; }
  const PowerLogWeight& power_log_params() const { return power_log_; }

  double operator()(double x) const {
    switch (kind_) {
      case Kind::constant: return scale_;
      case Kind::power_log: return power_log_(x);
      case Kind::trig: {
        double s = 0;
        for (const auto& t : terms_) s += t.amplitude * std::sin(t.frequency * x + t.phase);
        return scale_ * std::exp(s);
      }
    }
    return 0;
  }

  template <typename Scalar>
  GridFunction<Scalar> sample(const GridPtr<Scalar>& grid) const {
    return GridFunction<Scalar>::sample(grid, [this](Scalar t) { return Scalar((*this)(double(t))); });
  }

  // Config syntax: const:c | powerlog:beta,alpha[,gamma[,scale]] |
  // trig:scale[;a,omega,phi]...
  std::string to_string() const {
    std::ostringstream os;
    os.precision(17);
    switch (kind_) {
      case Kind::constant: os << "const:" << scale_; break;
      case Kind::power_log:
        os << "powerlog:" << power_log_.beta << ',' << power_log_.alpha << ',' << power_log_.gamma << ','
           << power_log_.scale;
        break;
      case Kind::trig:
        os << "trig:" << scale_;
        for (const auto& t : terms_) os << ';' << t.amplitude << ',' << t.frequency << ',' << t.phase;
        break;
    }
    return os.str();
  }

  static WeightSpec parse(std::string_view text) {
    const auto colon = text.find(':');
    const std::string head(text.substr(0, colon));
    const std::string body = colon == std::string_view::npos ? "" : std::string(text.substr(colon + 1));
    auto numbers = [&](const std::string& s) {
      std::vector<double> out;
      std::stringstream ss(s);
      std::string item;
      while (std::getline(ss, item, ',')) {
        try {
          size_t used = 0;
          out.push_back(std::stod(item, &used));
          if (item.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(item);
        } catch (const std::exception&) {
          throw Error(ErrorKind::parse, "bad number '" + item + "' in weight '" + std::string(text) + "'");
        }
      }
      return out;
    };
    if (head == "const") {
      auto v = numbers(body);
      if (v.size() != 1) throw Error(ErrorKind::parse, "const weight needs one value");
      return constant(v[0]);
    }
    if (head == "powerlog") {
      auto v = numbers(body);
      if (v.size() < 2 || v.size() > 4) throw Error(ErrorKind::parse, "powerlog weight needs 2 to 4 values");
      PowerLogWeight p{v[0], v[1], v.size() > 2 ? v[2] : 0.0, v.size() > 3 ? v[3] : 1.0};
      return power_log(p);
    }
    if (head == "trig") {
      std::stringstream ss(body);
      std::string part;
      std::getline(ss, part, ';');
      auto s = numbers(part);
      if (s.size() != 1) throw Error(ErrorKind::parse, "trig weight needs a scale");
      std::vector<TrigTerm> terms;
      while (std::getline(ss, part, ';')) {
        auto v = numbers(part);
        if (v.size() != 3) throw Error(ErrorKind::parse, "trig term needs amplitude,frequency,phase");
        terms.push_back({v[0], v[1], v[2]});
      }
      return trig(s[0], std::move(terms));
    }
    throw Error(ErrorKind::parse, "unknown weight kind '" + head + "'");
  }

 private:
  Kind kind_ = Kind::constant;
  double scale_ = 1;
  PowerLogWeight power_log_;
  std::vector<TrigTerm> terms_;
};

struct ImproperIntegral {
  double value = 0;
  bool finite = false;
};

// int_lo^hi f for f possibly singular at either end. Each half is split
// into decades toward its end; the tail is extrapolated from the ratio of
// successive decade contributions, and reported infinite when they do not
// decay geometrically.
template <typename F>
ImproperIntegral improper_integral(F&& f, double lo, double hi, double rel_tol = 1e-10) {
  if (!(lo < hi)) throw Error(ErrorKind::invalid_argument, "improper_integral: need lo < hi");
  static const GaussRule<double> rule = gauss_legendre<double>(16);
  auto fixed = [&](double x0, double x1) {
    double s = 0;
    const double h = (x1 - x0) / 2;
    for (size_t i = 0; i < rule.nodes.size(); ++i) s += rule.weights[i] * f(x0 + h * (rule.nodes[i] + 1));
    return s * h;
  };
  auto half = [&](double end, double length, double dir, ImproperIntegral& out) {
    double total = 0;
    std::vector<double> inc;
    for (int j = 0; j < 300; ++j) {
      const double d_out = length * std::pow(10.0, -j);
      const double d_in = length * std::pow(10.0, -(j + 1));
      const double x_out = end + dir * d_out, x_in = end + dir * d_in;
      if (x_in == end || x_in == x_out) break;
      double piece = 0;
      for (int m = 0; m < 4; ++m) {
        const double u0 = d_in * std::pow(10.0, m / 4.0), u1 = d_in * std::pow(10.0, (m + 1) / 4.0);
        piece += std::abs(fixed(end + dir * u0, end + dir * u1));
      }
      if (!std::isfinite(piece)) {
        out.finite = false;
        return;
      }
      total += piece;
      inc.push_back(piece);
      if (inc.size() >= 4) {
        const size_t n = inc.size();
        if (inc[n - 1] == 0) {
          out.value += total;
          return;
        }
        const double r1 = inc[n - 1] / inc[n - 2], r2 = inc[n - 2] / inc[n - 3];
        const double ratio = std::max(r1, r2);
        if (ratio < 0.9) {
          const double tail = inc[n - 1] * ratio / (1 - ratio);
          if (tail <= rel_tol * total) {
            out.value += total + tail;
            return;
          }
        }
      }
    }
    // Ran out of representable decades (an end away from 0): finite if the
    // contributions still decay geometrically; the tail is extrapolated.
    const size_t n = inc.size();
    if (n >= 4) {
      const double r1 = inc[n - 1] / inc[n - 2], r2 = inc[n - 2] / inc[n - 3];
      const double ratio = std::max(r1, r2);
      if (inc[n - 1] == 0 || ratio < 0.9) {
        out.value += total + (inc[n - 1] == 0 ? 0.0 : inc[n - 1] * ratio / (1 - ratio));
        return;
      }
    }
    out.finite = false;
  };
  ImproperIntegral out{0, true};
  const double mid = lo + (hi - lo) / 2;
  half(lo, mid - lo, 1.0, out);
  if (out.finite) half(hi, hi - mid, -1.0, out);
  if (!out.finite) out.value = std::numeric_limits<double>::infinity();
  return out;
}

}  // namespace nwidth
