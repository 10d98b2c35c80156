#pragma once

#include "flexdur/residual.hpp"

#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace flexdur {

/// Self-exciting decay: state decays from x + alpha towards mu at rate beta.
struct SeParams {
    double mu;
    double alpha;
    double beta;
    friend bool operator==(const SeParams&, const SeParams&) = default;
};

/// Linear ACD(1,1): X_n = b0 + a tau_n + b1 X_{n-1}.
struct AcdParams {
    double b0;
    double a;
    double b1;
    friend bool operator==(const AcdParams&, const AcdParams&) = default;
};

/// Log-ACD(1,1): log X_n = b0 + a log tau_n + b1 log X_{n-1}.
struct LogAcdParams {
    double b0;
    double a;
    double b1;
    friend bool operator==(const LogAcdParams&, const LogAcdParams&) = default;
};

/// Log-ACI(1,1): log L_n = b0 + a (L_{n-1} tau_n - 1) + b1 log L_{n-1}.
struct LogAciParams {
    double b0;
    double a;
    double b1;
    friend bool operator==(const LogAciParams&, const LogAciParams&) = default;
};

struct RenewalParams {
    friend bool operator==(const RenewalParams&, const RenewalParams&) = default;
};

enum class DynamicsFamily { SE, ACD, LogACD, LogACI, Renewal };

using DynamicsSpec = std::variant<SeParams, AcdParams, LogAcdParams, LogAciParams, RenewalParams>;

[[nodiscard]] std::string_view to_string(DynamicsFamily family);
[[nodiscard]] DynamicsFamily parse_dynamics_family(std::string_view name);
[[nodiscard]] DynamicsFamily family_of(const DynamicsSpec& dynamics);

[[nodiscard]] std::vector<std::string> dynamics_param_names(DynamicsFamily family);
[[nodiscard]] std::vector<double> dynamics_params(const DynamicsSpec& dynamics);
/// Builds dynamics from positional parameters and checks the family's invariants.
[[nodiscard]] DynamicsSpec make_dynamics(DynamicsFamily family, std::span<const double> params);

/// "SE-Gamma", "logACD-gGamma", "logACI" style label.
[[nodiscard]] std::string model_label(DynamicsFamily dynamics, ResidualFamily residual);

/// Dynamics paired with a unit-mean residual law. LogACI only accepts the
/// Exponential residual.
class ModelSpec {
public:
    ModelSpec(DynamicsSpec dynamics, ResidualSpec residual);

    [[nodiscard]] const DynamicsSpec& dynamics() const noexcept { return dynamics_; }
    [[nodiscard]] const ResidualSpec& residual() const noexcept { return residual_; }
    [[nodiscard]] DynamicsFamily family() const noexcept { return family_of(dynamics_); }

    /// "SE-Gamma" style label.
    [[nodiscard]] std::string label() const;

    friend bool operator==(const ModelSpec&, const ModelSpec&) = default;

private:
    DynamicsSpec dynamics_;
    ResidualSpec residual_;
};

/// Phi(t, x) together with its time derivative; for SE the derivative equals Psi(t, x).
struct PhiValue {
    double phi;
    double rate;
};

[[nodiscard]] double phi(const ModelSpec& model, double t, double state);
[[nodiscard]] PhiValue phi_with_rate(const DynamicsSpec& dynamics, double t, double state) noexcept;
[[nodiscard]] double phi_inverse(const ModelSpec& model, double y, double state);
[[nodiscard]] double phi_inverse(const DynamicsSpec& dynamics, double y, double state);
[[nodiscard]] double psi_update(const ModelSpec& model, double tau, double state);
[[nodiscard]] double psi_update(const DynamicsSpec& dynamics, double tau, double state) noexcept;
[[nodiscard]] double intensity(const ModelSpec& model, double t, double state);

/// Conditional density of the next SE state given the current one; zero off (mu, x + alpha].
[[nodiscard]] double transition_density(const ModelSpec& se_model, double y, double x);

/// y0 threshold of the piecewise-linear upper bound of the SE inverse.
[[nodiscard]] double upper_bound_threshold(const SeParams& se, double x, double delta0);

/// Piecewise-linear upper bound U(y, x) >= Phi^{-1}(y, x) for SE dynamics.
[[nodiscard]] double phi_inverse_upper_bound(const ModelSpec& se_model, double y, double x, double delta0);

struct StabilityReport {
    bool stable;
    double margin;
};

[[nodiscard]] StabilityReport check_stability(const ModelSpec& model);
[[nodiscard]] StabilityReport check_stability(const DynamicsSpec& dynamics);

/// Starting state used by the simulator and the likelihood filter.
[[nodiscard]] double default_initial_state(const DynamicsSpec& dynamics);

/// True when `state` is admissible for the dynamics (positive; >= mu for SE).
[[nodiscard]] bool valid_state(const DynamicsSpec& dynamics, double state) noexcept;

/// Log-state clamp for LogACI updates.
inline constexpr double kLogStateClamp = 50.0;

}  // namespace flexdur
