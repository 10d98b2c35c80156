#include "flexdur/serialize.hpp"

#include "flexdur/errors.hpp"

#include <cmath>

namespace flexdur {

namespace {

Json number_or_null(double v) {
    return std::isfinite(v) ? Json(v) : Json(nullptr);
}

double required(const Json& obj, const std::string& key) {
    if (!obj.contains(key) || !obj.at(key).is_number()) {
        throw FormatError("model JSON lacks numeric field '" + key + "'");
    }
    return obj.at(key).get<double>();
}

std::string required_string(const Json& obj, const std::string& key) {
    if (!obj.contains(key) || !obj.at(key).is_string()) {
        throw FormatError("model JSON lacks string field '" + key + "'");
    }
    return obj.at(key).get<std::string>();
}

}  // namespace

Json to_json(const ModelSpec& model) {
    Json dyn;
    dyn["family"] = std::string(to_string(model.family()));
    const auto names = dynamics_param_names(model.family());
    const auto values = dynamics_params(model.dynamics());
    for (std::size_t i = 0; i < names.size(); ++i) dyn[names[i]] = values[i];
    Json res;
    res["family"] = std::string(to_string(model.residual().family()));
    const auto rnames = model.residual().param_names();
    const auto rvalues = model.residual().params();
    for (std::size_t i = 0; i < rnames.size(); ++i) res[rnames[i]] = rvalues[i];
    Json out;
    out["label"] = model.label();
    out["dynamics"] = dyn;
    out["residual"] = res;
    return out;
}

Json to_json(const FiLogAcdSpec& spec) {
    Json out;
    out["label"] = "FI-logACD";
    out["family"] = "fi-logacd";
    out["mu_log"] = spec.mu_log;
    out["d"] = spec.d;
    out["phi"] = spec.phi;
    out["theta"] = spec.theta;
    out["sigma"] = spec.sigma;
    out["truncation_lag"] = spec.truncation_lag;
    return out;
}

Json to_json(const FittedModel& model) {
    return std::visit([](const auto& m) { return to_json(m); }, model);
}

Json to_json(const FitResult& result) {
    Json out;
    out["label"] = result.label();
    out["model"] = to_json(result.model);
    Json params;
    for (std::size_t i = 0; i < result.params.size(); ++i) {
        Json p;
        p["value"] = result.params[i];
        p["std_error"] = result.std_errors_available() ? number_or_null(result.std_errors[i]) : Json(nullptr);
        params[result.param_names[i]] = p;
    }
    out["params"] = params;
    out["std_errors_available"] = result.std_errors_available();
    out["loglik"] = number_or_null(result.loglik);
    out["converged"] = result.converged;
    out["iterations"] = result.iterations;
    out["final_gradient_norm"] = number_or_null(result.final_gradient_norm);
    out["nobs"] = result.nobs;
    out["restarts"] = result.restarts;
    out["restarts_converged"] = result.restarts_converged;
    out["restart_spread"] = number_or_null(result.restart_spread);
    return out;
}

Json to_json(const DiagnosticsReport& report) {
    Json out;
    out["n_forecasts"] = report.n_forecasts;
    out["rrmse"] = number_or_null(report.rrmse);
    out["r_squared"] = number_or_null(report.r_squared);
    out["ks"] = report.ks;
    out["wasserstein"] = report.wasserstein;
    Json acf = Json::array();
    for (double v : report.residual_acf) acf.push_back(number_or_null(v));
    out["residual_acf"] = acf;
    return out;
}

Json to_json(const DescriptiveStats& stats) {
    Json out;
    out["count"] = stats.count;
    out["mean"] = stats.mean;
    out["sd"] = stats.sd;
    out["min"] = stats.min;
    out["median"] = stats.median;
    out["max"] = stats.max;
    out["skewness"] = stats.skewness ? Json(*stats.skewness) : Json(nullptr);
    out["kurtosis"] = stats.kurtosis ? Json(*stats.kurtosis) : Json(nullptr);
    out["overdispersion"] = stats.overdispersion;
    return out;
}

ModelSpec model_from_json(const Json& json) {
    if (!json.is_object() || !json.contains("dynamics") || !json.contains("residual")) {
        throw FormatError("model JSON needs 'dynamics' and 'residual' objects");
    }
    const auto& dyn = json.at("dynamics");
    const auto& res = json.at("residual");
    const auto family = parse_dynamics_family(required_string(dyn, "family"));
    const auto rfamily = parse_residual_family(required_string(res, "family"));
    std::vector<double> dparams;
    for (const auto& name : dynamics_param_names(family)) dparams.push_back(required(dyn, name));
    std::vector<double> rparams;
    for (const auto& name : ResidualSpec::param_names(rfamily)) rparams.push_back(required(res, name));
    return ModelSpec(make_dynamics(family, dparams), make_residual(rfamily, rparams));
}

FittedModel fitted_model_from_json(const Json& json) {
    const Json& body = json.contains("model") ? json.at("model") : json;
    if (body.contains("family") && body.at("family") == "fi-logacd") {
        const auto lag = body.contains("truncation_lag") ? body.at("truncation_lag").get<std::size_t>() : 100;
        const double d = required(body, "d");
        if (d == 0.0) {
            return FiLogAcdSpec::nested_arma(required(body, "mu_log"), required(body, "phi"), required(body, "theta"),
                                             required(body, "sigma"), lag);
        }
        return FiLogAcdSpec::create(required(body, "mu_log"), d, required(body, "phi"), required(body, "theta"),
                                    required(body, "sigma"), lag);
    }
    return model_from_json(body);
}

}  // namespace flexdur
