#include "flexdur/residual.hpp"

#include "flexdur/errors.hpp"
#include "flexdur/special.hpp"

#include <cmath>
#include <limits>

namespace flexdur {

namespace {

void require_positive(double value, const char* name) {
    if (!(value > 0.0) || !std::isfinite(value)) {
        throw DomainError(std::string("residual parameter ") + name + " must be positive and finite");
    }
}

double softplus(double z) noexcept {
    return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

}  // namespace

std::string_view to_string(ResidualFamily family) {
    switch (family) {
        case ResidualFamily::Exponential: return "exp";
        case ResidualFamily::Gamma: return "gamma";
        case ResidualFamily::GenGamma: return "ggamma";
        case ResidualFamily::Burr: return "burr";
    }
    return "unknown";
}

ResidualFamily parse_residual_family(std::string_view name) {
    if (name == "exp" || name == "exponential") return ResidualFamily::Exponential;
    if (name == "gamma") return ResidualFamily::Gamma;
    if (name == "ggamma" || name == "gengamma" || name == "gen_gamma") return ResidualFamily::GenGamma;
    if (name == "burr") return ResidualFamily::Burr;
    throw DomainError("unknown residual family '" + std::string(name) + "'");
}

ResidualSpec ResidualSpec::exponential() {
    return ResidualSpec{};
}

ResidualSpec ResidualSpec::gamma(double kappa) {
    require_positive(kappa, "kappa");
    ResidualSpec spec;
    spec.family_ = ResidualFamily::Gamma;
    spec.p1_ = kappa;
    spec.scale_ = 1.0 / kappa;
    spec.log_scale_ = -std::log(kappa);
    spec.gamma_shape_ = kappa;
    spec.log_norm_ = kappa * std::log(kappa) - special::lgamma(kappa);
    return spec;
}

ResidualSpec ResidualSpec::gen_gamma(double d, double p) {
    require_positive(d, "d");
    require_positive(p, "p");
    ResidualSpec spec;
    spec.family_ = ResidualFamily::GenGamma;
    spec.p1_ = d;
    spec.p2_ = p;
    spec.gamma_shape_ = d / p;
    spec.log_scale_ = special::lgamma(d / p) - special::lgamma((d + 1.0) / p);
    spec.scale_ = std::exp(spec.log_scale_);
    spec.log_norm_ = std::log(p) - d * spec.log_scale_ - special::lgamma(d / p);
    return spec;
}

ResidualSpec ResidualSpec::burr(double s1, double s2) {
    require_positive(s1, "s1");
    require_positive(s2, "s2");
    if (!(s1 * s2 > 1.0)) {
        throw DomainError("Burr residual needs s1*s2 > 1 for a finite mean; cannot impose E[eps]=1");
    }
    ResidualSpec spec;
    spec.family_ = ResidualFamily::Burr;
    spec.p1_ = s1;
    spec.p2_ = s2;
    spec.log_scale_ = -std::log(s1) - special::lbeta(s1 - 1.0 / s2, 1.0 + 1.0 / s2);
    spec.scale_ = std::exp(spec.log_scale_);
    spec.log_norm_ = std::log(s1 * s2) - spec.log_scale_;
    return spec;
}

std::vector<double> ResidualSpec::params() const {
    switch (family_) {
        case ResidualFamily::Exponential: return {};
        case ResidualFamily::Gamma: return {p1_};
        case ResidualFamily::GenGamma:
        case ResidualFamily::Burr: return {p1_, p2_};
    }
    return {};
}

std::vector<std::string> ResidualSpec::param_names(ResidualFamily family) {
    switch (family) {
        case ResidualFamily::Exponential: return {};
        case ResidualFamily::Gamma: return {"kappa"};
        case ResidualFamily::GenGamma: return {"d", "p"};
        case ResidualFamily::Burr: return {"s1", "s2"};
    }
    return {};
}

std::vector<std::string> ResidualSpec::param_names() const {
    return param_names(family_);
}

std::size_t ResidualSpec::arity(ResidualFamily family) {
    return param_names(family).size();
}

double ResidualSpec::log_pdf(double x) const noexcept {
    const double lx = std::log(x);
    switch (family_) {
        case ResidualFamily::Exponential:
            return -x;
        case ResidualFamily::Gamma:
            return log_norm_ + (p1_ - 1.0) * lx - p1_ * x;
        case ResidualFamily::GenGamma:
            return log_norm_ + (p1_ - 1.0) * lx - std::exp(p2_ * (lx - log_scale_));
        case ResidualFamily::Burr: {
            const double lr = lx - log_scale_;
            return log_norm_ + (p2_ - 1.0) * lr - (p1_ + 1.0) * softplus(p2_ * lr);
        }
    }
    return std::numeric_limits<double>::quiet_NaN();
}

double ResidualSpec::log_survival(double x) const noexcept {
    switch (family_) {
        case ResidualFamily::Exponential:
            return -x;
        case ResidualFamily::Gamma:
            return std::log(special::gamma_q(p1_, p1_ * x));
        case ResidualFamily::GenGamma:
            return std::log(special::gamma_q(gamma_shape_, std::exp(p2_ * (std::log(x) - log_scale_))));
        case ResidualFamily::Burr:
            return -p1_ * softplus(p2_ * (std::log(x) - log_scale_));
    }
    return std::numeric_limits<double>::quiet_NaN();
}

namespace {
void require_support(double x) {
    if (!(x > 0.0)) {
        throw DomainError("residual evaluation needs x > 0");
    }
}
}  // namespace

double ResidualSpec::pdf(double x) const {
    require_support(x);
    return std::exp(log_pdf(x));
}

double ResidualSpec::cdf(double x) const {
    require_support(x);
    switch (family_) {
        case ResidualFamily::Exponential:
            return -std::expm1(-x);
        case ResidualFamily::Gamma:
            return special::gamma_p(p1_, p1_ * x);
        case ResidualFamily::GenGamma:
            return special::gamma_p(gamma_shape_, std::exp(p2_ * (std::log(x) - log_scale_)));
        case ResidualFamily::Burr:
            return -std::expm1(log_survival(x));
    }
    return std::numeric_limits<double>::quiet_NaN();
}

double ResidualSpec::survival(double x) const {
    require_support(x);
    switch (family_) {
        case ResidualFamily::Gamma:
            return special::gamma_q(p1_, p1_ * x);
        case ResidualFamily::GenGamma:
            return special::gamma_q(gamma_shape_, std::exp(p2_ * (std::log(x) - log_scale_)));
        default:
            return std::exp(log_survival(x));
    }
}

double ResidualSpec::hazard(double x) const {
    require_support(x);
    switch (family_) {
        case ResidualFamily::Exponential:
            return 1.0;
        case ResidualFamily::Burr: {
            const double lr = std::log(x) - log_scale_;
            return std::exp(log_norm_ + (p2_ - 1.0) * lr - softplus(p2_ * lr));
        }
        default:
            return pdf(x) / survival(x);
    }
}

ResidualEvaluation ResidualSpec::evaluate(double x) const {
    require_support(x);
    const double density = pdf(x);
    const double surv = survival(x);
    const double lower = family_ == ResidualFamily::Exponential || family_ == ResidualFamily::Burr
                             ? -std::expm1(log_survival(x))
                             : cdf(x);
    return {density, lower, density / surv};
}

double ResidualSpec::quantile(double u) const {
    if (!(u > 0.0 && u < 1.0)) {
        throw DomainError("quantile needs u in (0, 1)");
    }
    switch (family_) {
        case ResidualFamily::Exponential:
            return -std::log1p(-u);
        case ResidualFamily::Gamma:
            return inverse_gamma_p(p1_, u) / p1_;
        case ResidualFamily::GenGamma:
            return std::exp(log_scale_ + std::log(inverse_gamma_p(gamma_shape_, u)) / p2_);
        case ResidualFamily::Burr:
            return std::exp(log_scale_ + std::log(std::expm1(-std::log1p(-u) / p1_)) / p2_);
    }
    return std::numeric_limits<double>::quiet_NaN();
}

double ResidualSpec::tail_integral(double t) const {
    if (t <= 0.0) {
        return 1.0 - t;
    }
    switch (family_) {
        case ResidualFamily::Exponential:
            return std::exp(-t);
        case ResidualFamily::Gamma:
            return special::gamma_q(p1_ + 1.0, p1_ * t) - t * special::gamma_q(p1_, p1_ * t);
        case ResidualFamily::GenGamma: {
            const double w = std::exp(p2_ * (std::log(t) - log_scale_));
            return special::gamma_q((p1_ + 1.0) / p2_, w) - t * special::gamma_q(gamma_shape_, w);
        }
        case ResidualFamily::Burr: {
            // E[eps 1{eps > t}] = I_v(s1 - 1/s2, 1 + 1/s2) with v = 1 / (1 + (t/c)^s2).
            const double z = p2_ * (std::log(t) - log_scale_);
            const double v = 1.0 / (1.0 + std::exp(z));
            const double partial = special::ibeta(p1_ - 1.0 / p2_, 1.0 + 1.0 / p2_, v);
            return partial - t * std::exp(-p1_ * softplus(z));
        }
    }
    return std::numeric_limits<double>::quiet_NaN();
}

double ResidualSpec::draw(Rng& rng) const {
    for (;;) {
        double value = 0.0;
        switch (family_) {
            case ResidualFamily::Exponential:
                value = std::exponential_distribution<double>{1.0}(rng);
                break;
            case ResidualFamily::Gamma:
                value = std::gamma_distribution<double>{p1_, 1.0 / p1_}(rng);
                break;
            case ResidualFamily::GenGamma: {
                const double g = std::gamma_distribution<double>{gamma_shape_, 1.0}(rng);
                value = g > 0.0 ? std::exp(log_scale_ + std::log(g) / p2_) : 0.0;
                break;
            }
            case ResidualFamily::Burr: {
                const double u = std::uniform_real_distribution<double>{0.0, 1.0}(rng);
                value = u > 0.0 ? quantile(u) : 0.0;
                break;
            }
        }
        if (value > 0.0 && std::isfinite(value)) {
            return value;
        }
    }
}

std::vector<double> ResidualSpec::sample(std::size_t count, std::uint64_t seed) const {
    Rng rng(seed);
    std::vector<double> out(count);
    for (auto& v : out) {
        v = draw(rng);
    }
    return out;
}

ResidualSpec make_residual(ResidualFamily family, std::span<const double> params) {
    if (params.size() != ResidualSpec::arity(family)) {
        throw DomainError("residual family '" + std::string(to_string(family)) + "' expects " +
                          std::to_string(ResidualSpec::arity(family)) + " parameter(s)");
    }
    switch (family) {
        case ResidualFamily::Exponential: return ResidualSpec::exponential();
        case ResidualFamily::Gamma: return ResidualSpec::gamma(params[0]);
        case ResidualFamily::GenGamma: return ResidualSpec::gen_gamma(params[0], params[1]);
        case ResidualFamily::Burr: return ResidualSpec::burr(params[0], params[1]);
    }
    throw DomainError("unknown residual family");
}

// Bracketed Newton on t = log w. Working in log space keeps the bracket
// meaningful for small shapes, where the density is unbounded at 0 and the
// lower quantiles sit many decades below 1.
double inverse_gamma_p(double shape, double u) {
    if (!(u > 0.0 && u < 1.0)) {
        throw DomainError("inverse_gamma_p needs u in (0, 1)");
    }
    const bool upper = u > 0.5;
    const double target = upper ? 1.0 - u : u;
    const double lg = special::lgamma(shape);
    auto gap = [&](double t) {
        const double w = std::exp(t);
        return upper ? target - special::gamma_q(shape, w) : special::gamma_p(shape, w) - target;
    };
    auto slope = [&](double t) {
        const double w = std::exp(t);
        return std::exp(shape * t - w - lg);
    };

    double t = std::log(shape);
    if (!upper) {
        // small-w asymptote P(s, w) ~ w^s / Gamma(s + 1)
        const double guess = (std::log(target) + special::lgamma(shape + 1.0)) / shape;
        if (guess < t) t = guess;
    }
    double lo = t;
    double hi = t;
    double g = gap(t);
    double step = 1.0;
    if (g > 0.0) {
        while (gap(lo) > 0.0) {
            lo -= step;
            step *= 2.0;
            if (lo < -745.0) {
                lo = -745.0;
                break;
            }
        }
    } else {
        while (gap(hi) < 0.0) {
            hi += step;
            step *= 2.0;
            if (hi > 710.0) throw NumericalError("inverse_gamma_p: failed to bracket root");
        }
    }

    for (int iter = 0; iter < 200; ++iter) {
        g = gap(t);
        if (g == 0.0) return std::exp(t);
        if (g > 0.0) {
            hi = t;
        } else {
            lo = t;
        }
        const double d = slope(t);
        double next = d > 0.0 ? t - g / d : 0.5 * (lo + hi);
        if (!(next > lo && next < hi)) {
            next = 0.5 * (lo + hi);
        }
        if (std::abs(next - t) <= 1e-15 * (1.0 + std::abs(t)) || hi - lo <= 1e-15 * (1.0 + std::abs(t))) {
            return std::exp(next);
        }
        t = next;
    }
    return std::exp(t);
}

}  // namespace flexdur
