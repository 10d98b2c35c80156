#pragma once

#include "flexdur/diagnostics.hpp"
#include "flexdur/estimate.hpp"

#include "json.hpp"

namespace flexdur {

using Json = nlohmann::ordered_json;

[[nodiscard]] Json to_json(const ModelSpec& model);
[[nodiscard]] Json to_json(const FiLogAcdSpec& spec);
[[nodiscard]] Json to_json(const FittedModel& model);
[[nodiscard]] Json to_json(const FitResult& result);
[[nodiscard]] Json to_json(const DiagnosticsReport& report);
[[nodiscard]] Json to_json(const DescriptiveStats& stats);

/// Accepts a bare model object or a fit result holding one under "model".
[[nodiscard]] FittedModel fitted_model_from_json(const Json& json);
[[nodiscard]] ModelSpec model_from_json(const Json& json);

}  // namespace flexdur
