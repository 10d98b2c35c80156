#include "flexdur/process.hpp"

#include "flexdur/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace flexdur {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

double clamp_log_state(double log_state) noexcept {
    return std::clamp(log_state, -kLogStateClamp, kLogStateClamp);
}

void require_finite(std::span<const double> params) {
    for (double v : params) {
        if (!std::isfinite(v)) {
            throw DomainError("dynamics parameters must be finite");
        }
    }
}

// Newton from the left on the concave increasing map t -> Phi(t, x). Both
// starting guesses are lower bounds of the root, so the iterates increase
// monotonically; bisection on [0, y/mu + 1] takes over if that ever fails.
double se_inverse(const SeParams& se, double y, double x) {
    const double excess = x - se.mu + se.alpha;
    const double asymptote = y / se.mu - excess / (se.beta * se.mu);
    double t = std::max({asymptote, y / (x + se.alpha), 0.0});
    const double tol = 1e-12 * std::max(1.0, y);

    for (int iter = 0; iter < 100; ++iter) {
        const double decay = std::exp(-se.beta * t);
        const double value = se.mu * t - excess * std::expm1(-se.beta * t) / se.beta - y;
        if (std::abs(value) <= tol) {
            return t;
        }
        const double next = t - value / (se.mu + excess * decay);
        if (!(next >= 0.0) || !std::isfinite(next)) {
            break;
        }
        if (std::abs(next - t) <= 1e-15 * std::max(1.0, t)) {
            return next;
        }
        t = next;
    }

    double lo = 0.0;
    double hi = y / se.mu + 1.0;
    double gap = 0.0;
    for (int iter = 0; iter < 200; ++iter) {
        const double mid = 0.5 * (lo + hi);
        gap = se.mu * mid - excess * std::expm1(-se.beta * mid) / se.beta - y;
        if (std::abs(gap) <= tol) {
            return mid;
        }
        (gap < 0.0 ? lo : hi) = mid;
    }
    throw NumericalError("SE phi_inverse did not converge; residual gap " + std::to_string(gap));
}

}  // namespace

std::string_view to_string(DynamicsFamily family) {
    switch (family) {
        case DynamicsFamily::SE: return "se";
        case DynamicsFamily::ACD: return "acd";
        case DynamicsFamily::LogACD: return "logacd";
        case DynamicsFamily::LogACI: return "logaci";
        case DynamicsFamily::Renewal: return "renewal";
    }
    return "unknown";
}

DynamicsFamily parse_dynamics_family(std::string_view name) {
    if (name == "se" || name == "hawkes") return DynamicsFamily::SE;
    if (name == "acd") return DynamicsFamily::ACD;
    if (name == "logacd") return DynamicsFamily::LogACD;
    if (name == "logaci") return DynamicsFamily::LogACI;
    if (name == "renewal") return DynamicsFamily::Renewal;
    throw DomainError("unknown dynamics family '" + std::string(name) + "'");
}

DynamicsFamily family_of(const DynamicsSpec& dynamics) {
    return static_cast<DynamicsFamily>(dynamics.index());
}

std::vector<std::string> dynamics_param_names(DynamicsFamily family) {
    switch (family) {
        case DynamicsFamily::SE: return {"mu", "alpha", "beta"};
        case DynamicsFamily::ACD:
        case DynamicsFamily::LogACD:
        case DynamicsFamily::LogACI: return {"b0", "a", "b1"};
        case DynamicsFamily::Renewal: return {};
    }
    return {};
}

std::vector<double> dynamics_params(const DynamicsSpec& dynamics) {
    return std::visit(Overloaded{
                          [](const SeParams& p) { return std::vector<double>{p.mu, p.alpha, p.beta}; },
                          [](const AcdParams& p) { return std::vector<double>{p.b0, p.a, p.b1}; },
                          [](const LogAcdParams& p) { return std::vector<double>{p.b0, p.a, p.b1}; },
                          [](const LogAciParams& p) { return std::vector<double>{p.b0, p.a, p.b1}; },
                          [](const RenewalParams&) { return std::vector<double>{}; },
                      },
                      dynamics);
}

DynamicsSpec make_dynamics(DynamicsFamily family, std::span<const double> params) {
    if (params.size() != dynamics_param_names(family).size()) {
        throw DomainError("dynamics '" + std::string(to_string(family)) + "' expects " +
                          std::to_string(dynamics_param_names(family).size()) + " parameter(s)");
    }
    require_finite(params);
    switch (family) {
        case DynamicsFamily::SE: {
            SeParams se{params[0], params[1], params[2]};
            if (!(se.mu > 0.0 && se.alpha > 0.0 && se.beta > 0.0)) {
                throw DomainError("SE dynamics need mu, alpha, beta > 0");
            }
            return se;
        }
        case DynamicsFamily::ACD: {
            AcdParams acd{params[0], params[1], params[2]};
            if (!(acd.b0 > 0.0 && acd.a > 0.0 && acd.b1 > 0.0)) {
                throw DomainError("ACD dynamics need b0, a, b1 > 0");
            }
            if (!(acd.a + acd.b1 < 1.0)) {
                throw DomainError("ACD dynamics need a + b1 < 1");
            }
            return acd;
        }
        case DynamicsFamily::LogACD: {
            LogAcdParams lacd{params[0], params[1], params[2]};
            if (!(lacd.a >= 0.0 && lacd.b1 >= 0.0)) {
                throw DomainError("log-ACD dynamics need a, b1 >= 0");
            }
            if (!(lacd.a + lacd.b1 < 1.0)) {
                throw DomainError("log-ACD dynamics need a + b1 < 1");
            }
            return lacd;
        }
        case DynamicsFamily::LogACI: {
            LogAciParams aci{params[0], params[1], params[2]};
            if (!(std::abs(aci.b1) < 1.0)) {
                throw DomainError("log-ACI dynamics need |b1| < 1");
            }
            return aci;
        }
        case DynamicsFamily::Renewal:
            return RenewalParams{};
    }
    throw DomainError("unknown dynamics family");
}

ModelSpec::ModelSpec(DynamicsSpec dynamics, ResidualSpec residual)
    : dynamics_(std::move(dynamics)), residual_(std::move(residual)) {
    if (family_of(dynamics_) == DynamicsFamily::LogACI && residual_.family() != ResidualFamily::Exponential) {
        throw DomainError("log-ACI dynamics are defined with standard exponential innovations only");
    }
}

std::string model_label(DynamicsFamily dynamics, ResidualFamily residual) {
    std::string dyn;
    switch (dynamics) {
        case DynamicsFamily::SE: dyn = "SE"; break;
        case DynamicsFamily::ACD: dyn = "ACD"; break;
        case DynamicsFamily::LogACD: dyn = "logACD"; break;
        case DynamicsFamily::LogACI: return "logACI";
        case DynamicsFamily::Renewal: dyn = "Renewal"; break;
    }
    switch (residual) {
        case ResidualFamily::Exponential: return dyn + "-Exp";
        case ResidualFamily::Gamma: return dyn + "-Gamma";
        case ResidualFamily::GenGamma: return dyn + "-gGamma";
        case ResidualFamily::Burr: return dyn + "-Burr";
    }
    return dyn;
}

std::string ModelSpec::label() const {
    return model_label(family(), residual_.family());
}

PhiValue phi_with_rate(const DynamicsSpec& dynamics, double t, double state) noexcept {
    return std::visit(Overloaded{
                          [&](const SeParams& se) {
                              const double excess = state - se.mu + se.alpha;
                              const double rate = se.mu + excess * std::exp(-se.beta * t);
                              return PhiValue{se.mu * t - excess * std::expm1(-se.beta * t) / se.beta, rate};
                          },
                          [&](const AcdParams&) { return PhiValue{t / state, 1.0 / state}; },
                          [&](const LogAcdParams&) { return PhiValue{t / state, 1.0 / state}; },
                          [&](const LogAciParams&) { return PhiValue{state * t, state}; },
                          [&](const RenewalParams&) { return PhiValue{t, 1.0}; },
                      },
                      dynamics);
}

double phi(const ModelSpec& model, double t, double state) {
    if (!(t >= 0.0)) {
        throw DomainError("phi needs t >= 0");
    }
    if (!valid_state(model.dynamics(), state)) {
        throw DomainError("invalid latent state");
    }
    return phi_with_rate(model.dynamics(), t, state).phi;
}

double phi_inverse(const DynamicsSpec& dynamics, double y, double state) {
    return std::visit(Overloaded{
                          [&](const SeParams& se) { return se_inverse(se, y, state); },
                          [&](const AcdParams&) { return state * y; },
                          [&](const LogAcdParams&) { return state * y; },
                          [&](const LogAciParams&) { return y / state; },
                          [&](const RenewalParams&) { return y; },
                      },
                      dynamics);
}

double phi_inverse(const ModelSpec& model, double y, double state) {
    if (!(y > 0.0)) {
        throw DomainError("phi_inverse needs y > 0");
    }
    if (!valid_state(model.dynamics(), state)) {
        throw DomainError("invalid latent state");
    }
    return phi_inverse(model.dynamics(), y, state);
}

double psi_update(const DynamicsSpec& dynamics, double tau, double state) noexcept {
    return std::visit(
        Overloaded{
            [&](const SeParams& se) { return se.mu + (state - se.mu + se.alpha) * std::exp(-se.beta * tau); },
            [&](const AcdParams& p) { return p.b0 + p.a * tau + p.b1 * state; },
            [&](const LogAcdParams& p) {
                return std::exp(clamp_log_state(p.b0 + p.a * std::log(tau) + p.b1 * std::log(state)));
            },
            [&](const LogAciParams& p) {
                return std::exp(clamp_log_state(p.b0 + p.a * (state * tau - 1.0) + p.b1 * std::log(state)));
            },
            [&](const RenewalParams&) { return 1.0; },
        },
        dynamics);
}

double psi_update(const ModelSpec& model, double tau, double state) {
    if (!(tau > 0.0)) {
        throw DomainError("psi_update needs tau > 0");
    }
    if (!valid_state(model.dynamics(), state)) {
        throw DomainError("invalid latent state");
    }
    return psi_update(model.dynamics(), tau, state);
}

double intensity(const ModelSpec& model, double t, double state) {
    if (!(t >= 0.0)) {
        throw DomainError("intensity needs t >= 0");
    }
    if (!valid_state(model.dynamics(), state)) {
        throw DomainError("invalid latent state");
    }
    const PhiValue pv = phi_with_rate(model.dynamics(), t, state);
    if (model.residual().family() == ResidualFamily::Exponential) {
        return pv.rate;
    }
    const double h = model.residual().hazard(std::max(pv.phi, std::numeric_limits<double>::min()));
    const double value = h * pv.rate;
    if (!std::isfinite(value)) {
        throw NumericalError("intensity overflow at t = " + std::to_string(t));
    }
    return value;
}

double transition_density(const ModelSpec& se_model, double y, double x) {
    const auto* se = std::get_if<SeParams>(&se_model.dynamics());
    if (se == nullptr) {
        throw DomainError("transition_density is defined for SE dynamics");
    }
    if (!(x >= se->mu)) {
        throw DomainError("transition_density needs x >= mu");
    }
    if (!(y > se->mu) || y > x + se->alpha) {
        return 0.0;
    }
    const double excess = x - se->mu + se->alpha;
    const double eps = (x - y + se->alpha) / se->beta - (se->mu / se->beta) * std::log((y - se->mu) / excess);
    const double at = std::max(eps, std::numeric_limits<double>::min());
    return std::exp(se_model.residual().log_pdf(at)) * y / (se->beta * (y - se->mu));
}

double upper_bound_threshold(const SeParams& se, double x, double delta0) {
    const double excess = x - se.mu + se.alpha;
    return excess / se.beta + (se.mu / se.beta) * std::log(excess / (se.mu * se.beta * delta0));
}

double phi_inverse_upper_bound(const ModelSpec& se_model, double y, double x, double delta0) {
    const auto* se = std::get_if<SeParams>(&se_model.dynamics());
    if (se == nullptr) {
        throw DomainError("phi_inverse_upper_bound is defined for SE dynamics");
    }
    if (!(x >= se->mu) || !(delta0 > 0.0) || !(y > 0.0)) {
        throw DomainError("phi_inverse_upper_bound needs x >= mu, y > 0 and delta0 > 0");
    }
    const double excess = x - se->mu + se->alpha;
    const double y0 = upper_bound_threshold(*se, x, delta0);
    const double asymptote = y / se->mu - excess / (se->beta * se->mu);
    if (!(y0 > 0.0)) {
        // Threshold below the support: the deviation from the asymptote is
        // largest as y -> 0, where it equals excess / (beta mu).
        return asymptote + excess / (se->beta * se->mu);
    }
    const double t0 = se_inverse(*se, y0, x);
    if (y <= y0) {
        return t0 / y0 * y;
    }
    const double offset = t0 - y0 / se->mu + excess / (se->beta * se->mu);
    return asymptote + offset;
}

StabilityReport check_stability(const DynamicsSpec& dynamics) {
    return std::visit(Overloaded{
                          [](const SeParams& se) {
                              return StabilityReport{se.alpha < se.beta, se.beta - se.alpha};
                          },
                          [](const AcdParams& p) {
                              const double margin = 1.0 - p.a - p.b1;
                              return StabilityReport{margin > 0.0, margin};
                          },
                          [](const LogAcdParams& p) {
                              const double margin = 1.0 - p.a - p.b1;
                              return StabilityReport{margin > 0.0, margin};
                          },
                          [](const LogAciParams& p) {
                              const double margin = 1.0 - std::abs(p.b1);
                              return StabilityReport{margin > 0.0, margin};
                          },
                          [](const RenewalParams&) {
                              return StabilityReport{true, std::numeric_limits<double>::infinity()};
                          },
                      },
                      dynamics);
}

StabilityReport check_stability(const ModelSpec& model) {
    return check_stability(model.dynamics());
}

double default_initial_state(const DynamicsSpec& dynamics) {
    return std::visit(Overloaded{
                          [](const SeParams& se) {
                              return se.alpha < se.beta ? se.mu / (1.0 - se.alpha / se.beta) : se.mu + se.alpha;
                          },
                          [](const AcdParams& p) { return p.b0 / (1.0 - p.a - p.b1); },
                          [](const LogAcdParams& p) {
                              return std::exp(clamp_log_state(p.b0 / (1.0 - p.a - p.b1)));
                          },
                          [](const LogAciParams& p) { return std::exp(clamp_log_state(p.b0 / (1.0 - p.b1))); },
                          [](const RenewalParams&) { return 1.0; },
                      },
                      dynamics);
}

bool valid_state(const DynamicsSpec& dynamics, double state) noexcept {
    if (!(state > 0.0) || !std::isfinite(state)) {
        return false;
    }
    if (const auto* se = std::get_if<SeParams>(&dynamics)) {
        return state >= se->mu;
    }
    return true;
}

}  // namespace flexdur
