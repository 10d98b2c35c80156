#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace flexdur {

using Rng = std::mt19937_64;

enum class ResidualFamily { Exponential, Gamma, GenGamma, Burr };

[[nodiscard]] std::string_view to_string(ResidualFamily family);
[[nodiscard]] ResidualFamily parse_residual_family(std::string_view name);

struct ResidualEvaluation {
    double pdf;
    double cdf;
    double hazard;
};

/**
 * Unit-mean innovation distribution.
 *
 * Every family is scaled so that E[eps] = 1:
 *   Gamma(kappa)      shape kappa, scale 1/kappa
 *   GenGamma(d, p)    scale a = Gamma(d/p) / Gamma((d+1)/p)
 *   Burr(s1, s2)      scale c = 1 / (s1 * B(s1 - 1/s2, 1 + 1/s2)), needs s1*s2 > 1
 *
 * Immutable once built; the normalising constants are cached because they
 * sit in the innermost likelihood loop.
 */
class ResidualSpec {
public:
    static ResidualSpec exponential();
    static ResidualSpec gamma(double kappa);
    static ResidualSpec gen_gamma(double d, double p);
    static ResidualSpec burr(double s1, double s2);

    [[nodiscard]] ResidualFamily family() const noexcept { return family_; }
    /// Free shape parameters in canonical order (kappa | d, p | s1, s2).
    [[nodiscard]] std::vector<double> params() const;
    [[nodiscard]] std::vector<std::string> param_names() const;
    [[nodiscard]] static std::vector<std::string> param_names(ResidualFamily family);
    [[nodiscard]] static std::size_t arity(ResidualFamily family);

    /// Derived scale: 1 (Exponential), 1/kappa (Gamma), a (GenGamma), c (Burr).
    [[nodiscard]] double scale() const noexcept { return scale_; }

    // Hot-path evaluations. No argument checking; x must be > 0.
    [[nodiscard]] double log_pdf(double x) const noexcept;
    [[nodiscard]] double log_survival(double x) const noexcept;

    [[nodiscard]] double pdf(double x) const;
    [[nodiscard]] double cdf(double x) const;
    [[nodiscard]] double survival(double x) const;
    [[nodiscard]] double hazard(double x) const;
    [[nodiscard]] ResidualEvaluation evaluate(double x) const;

    /// Inverse cdf on (0, 1).
    [[nodiscard]] double quantile(double u) const;

    /// Stop-loss transform E[(eps - t)^+] = integral of the survival function over (t, inf).
    [[nodiscard]] double tail_integral(double t) const;

    [[nodiscard]] double draw(Rng& rng) const;
    [[nodiscard]] std::vector<double> sample(std::size_t count, std::uint64_t seed) const;

    friend bool operator==(const ResidualSpec&, const ResidualSpec&) = default;

private:
    ResidualSpec() = default;

    ResidualFamily family_{ResidualFamily::Exponential};
    double p1_{0.0};
    double p2_{0.0};
    double scale_{1.0};
    double log_scale_{0.0};
    double log_norm_{0.0};
    double gamma_shape_{1.0};  // shape of the underlying Gamma variable (Gamma, GenGamma)
};

/// Builds a residual law from a family and its positional shape parameters.
[[nodiscard]] ResidualSpec make_residual(ResidualFamily family, std::span<const double> params);

/// Solves P(shape, w) = u for w (regularised lower incomplete gamma).
[[nodiscard]] double inverse_gamma_p(double shape, double u);

}  // namespace flexdur
