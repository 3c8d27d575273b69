#pragma once

#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "kirchhoff/data_spec.hpp"
#include "kirchhoff/spectral.hpp"

namespace kirchhoff {

/// μ₁ ≤ m ≤ μ₂ and Lipschitz constant L, certified on [0, sigma_max].
struct ConstantBounds {
  double mu1 = 0.0;
  double mu2 = 0.0;
  double lip = 0.0;
  double sigma_max = 0.0;
  bool approximate = false;  // true when obtained by sampling
};

/// The Kirchhoff nonlinearity m together with its primitive M(σ) = ∫₀^σ m.
class Nonlinearity {
 public:
  enum class Kind { constant, affine, sine, tabulated, custom };

  struct Constant { double value; };
  struct Affine { double a; double b; };                     // a + bσ
  struct Sine { double base; double amplitude; double frequency; };  // c + ε sin(ωσ)
  struct Tabulated { std::vector<double> sigma; std::vector<double> values; };  // piecewise linear
  struct Custom {
    std::string name;
    std::function<double(double)> m;
  };

  static Nonlinearity constant(double value);
  static Nonlinearity affine(double a, double b);
  static Nonlinearity sine(double base, double amplitude, double frequency);
  static Nonlinearity tabulated(std::vector<double> sigma, std::vector<double> values);
  static Nonlinearity custom(std::string name, std::function<double(double)> m);

  Kind kind() const noexcept;
  std::string kind_name() const;
  const auto& profile() const noexcept { return profile_; }

  /// Raw evaluation, no range bookkeeping. σ ≥ 0 is the caller's business.
  double m(double sigma) const;
  double M(double sigma) const;
  /// ∫_base^{base+h} m, computed without forming M(base+h) − M(base).
  double M_increment(double base, double h) const;
  bool has_closed_form_primitive() const noexcept;

  /// Attaches certified constants; enables range flags in eval_m.
  Nonlinearity with_bounds(const ConstantBounds& bounds) const;
  const std::optional<ConstantBounds>& bounds() const noexcept { return bounds_; }
  bool in_working_range(double sigma) const noexcept;

 private:
  using Profile = std::variant<Constant, Affine, Sine, Tabulated, Custom>;
  explicit Nonlinearity(Profile p) : profile_(std::move(p)) {}

  Profile profile_;
  std::optional<ConstantBounds> bounds_;
};

struct MValue {
  double value = 0.0;
  bool out_of_range = false;
};

MValue eval_m(const Nonlinearity& nl, double sigma);
double eval_M(const Nonlinearity& nl, double sigma);

/// Adaptive Simpson of m over [a, b]; absolute tolerance `tol`, depth ≤ 60.
/// Throws NumericalFailure if the recursion cannot meet the tolerance.
double integrate_m(const Nonlinearity& nl, double a, double b, double tol = 1e-12);

inline constexpr std::size_t kDefaultCertificationSamples = 10000;

ConstantBounds certify_constants(const Nonlinearity& nl, double sigma_max,
                                 std::size_t samples = kDefaultCertificationSamples);

/// Relative headroom δ of the working range [0, (1+δ)·H₀/μ₁].
inline constexpr double kWorkingRangeSlack = 0.1;

double compute_H0(const SpectralOperator& op, const Nonlinearity& nl, const DataSpec& data);

/// Certifies μ₁, μ₂, L on the working range induced by the data's H₀.
ConstantBounds certify_for_data(const SpectralOperator& op, const Nonlinearity& nl,
                                const DataSpec& data);

struct DerivedConstants {
  double nu1 = 1.0;
  double nu2 = 1.0;
  double H0 = 0.0;
  double L1 = 0.0;
};

DerivedConstants derive_constants(const ConstantBounds& bounds, double H0);

}  // namespace kirchhoff
