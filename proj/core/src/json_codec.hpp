#pragma once

#include <initializer_list>
#include <json.hpp>
#include <string_view>

#include "bgc/config.hpp"
#include "bgc/ensemble.hpp"
#include "bgc/psi.hpp"

namespace bgc::detail {

// Throws IoError naming the first key of `j` not in `allowed`.
void reject_unknown_keys(const nlohmann::json& j, std::initializer_list<std::string_view> allowed,
                         std::string_view where);

nlohmann::json psi_to_json(const PsiSpec& spec);
PsiSpec psi_from_json(const nlohmann::json& j);

nlohmann::json config_to_json(const EnsembleSource& source);
EnsembleSource config_from_json(const nlohmann::json& j);

}  // namespace bgc::detail
