#pragma once

#include "flexdur/process.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace flexdur {

/**
 * FI-logACD(1,d,1) benchmark on log durations:
 *   log tau_n = mu_log + z_n,  (1 - phi B)(1 - B)^d z_n = (1 + theta B) eps_n,
 * with Gaussian eps_n of scale sigma. The fractional filter is truncated at
 * `truncation_lag`.
 */
struct FiLogAcdSpec {
    double mu_log{0.0};
    double d{0.0};
    double phi{0.0};
    double theta{0.0};
    double sigma{0.0};
    std::size_t truncation_lag{100};

    /// Checked construction: d in (0, 1/2), |phi| < 1, |theta| < 1, sigma >= 0, lag >= 50.
    static FiLogAcdSpec create(double mu_log, double d, double phi, double theta, double sigma,
                               std::size_t truncation_lag = 100);
    /// The d = 0 boundary member (plain ARMA(1,1) on log durations).
    static FiLogAcdSpec nested_arma(double mu_log, double phi, double theta, double sigma,
                                    std::size_t truncation_lag = 100);

    friend bool operator==(const FiLogAcdSpec&, const FiLogAcdSpec&) = default;
};

/// Binomial weights of (1 - B)^d: w_0 = 1, w_k = w_{k-1} (k - 1 - d) / k.
[[nodiscard]] std::vector<double> fractional_difference_weights(double d, std::size_t count);

/// Coefficients c_k of (1 - phi B)(1 - B)^d truncated at the model's truncation lag (c_0 = 1).
[[nodiscard]] std::vector<double> fi_filter_coefficients(const FiLogAcdSpec& spec);

using FittedModel = std::variant<ModelSpec, FiLogAcdSpec>;

struct FitConfig {
    double tolerance{1e-6};  // sup-norm of the per-observation log-likelihood gradient
    std::size_t max_iterations{500};
    std::size_t restarts{5};
    std::size_t truncation_lag{100};
    std::uint64_t seed{1};
    std::size_t jobs{1};
};

struct FitResult {
    FittedModel model;
    std::vector<std::string> param_names;
    std::vector<double> params;
    std::vector<double> std_errors;  // empty when the observed information is not positive definite
    double loglik{0.0};
    bool converged{false};
    std::size_t iterations{0};
    double final_gradient_norm{0.0};
    std::size_t nobs{0};
    std::size_t restarts{0};
    std::size_t restarts_converged{0};
    /// Largest relative parameter difference between converged restarts and the best one.
    double restart_spread{0.0};

    [[nodiscard]] bool std_errors_available() const noexcept { return !std_errors.empty(); }
    [[nodiscard]] std::string label() const;
};

/// Sum over n of log f_eps(Phi(tau_n, X_{n-1})) + log dPhi/dt(tau_n, X_{n-1}), with
/// states filtered forward by Psi. Throws NumericalError naming the offending index
/// if a term is not finite.
[[nodiscard]] double loglik(const ModelSpec& model, std::span<const double> durations, double initial_state);

/// As above with the default initial state of the dynamics.
[[nodiscard]] double loglik(const ModelSpec& model, std::span<const double> durations);

/// Smooth bijection between the constrained parameters of a model family and R^k.
class Parameterization {
public:
    Parameterization(DynamicsFamily dynamics, ResidualFamily residual);

    [[nodiscard]] std::size_t size() const noexcept { return names_.size(); }
    [[nodiscard]] const std::vector<std::string>& names() const noexcept { return names_; }

    /// Natural parameters (dynamics then residual shapes) from unconstrained ones.
    [[nodiscard]] std::vector<double> natural(std::span<const double> free) const;
    [[nodiscard]] std::vector<double> unconstrained(std::span<const double> natural) const;
    [[nodiscard]] ModelSpec model(std::span<const double> free) const;

    [[nodiscard]] DynamicsFamily dynamics() const noexcept { return dynamics_; }
    [[nodiscard]] ResidualFamily residual() const noexcept { return residual_; }

private:
    DynamicsFamily dynamics_;
    ResidualFamily residual_;
    std::vector<std::string> names_;
};

/// Maximum-likelihood fit of an observation-driven model. Requires >= 200 durations.
[[nodiscard]] FitResult fit(DynamicsFamily family, ResidualFamily residual_family,
                            std::span<const double> durations, const FitConfig& config = {});

/// Residuals eps_n of the truncated ARFIMA(1,d,1) inversion on centred log durations.
/// Pre-sample values are zero.
[[nodiscard]] std::vector<double> fi_residuals(const FiLogAcdSpec& spec, std::span<const double> log_durations);

/// Gaussian conditional-sum-of-squares fit of the FI-logACD benchmark. Requires >= 2000 durations.
[[nodiscard]] FitResult fit_fi_logacd(std::span<const double> durations, const FitConfig& config = {});

}  // namespace flexdur
