#include "amrl/env.hpp"

#include "amrl/cmotp.hpp"
#include "amrl/errors.hpp"
#include "amrl/pommerman.hpp"

namespace amrl::env {

std::unique_ptr<Environment> make_environment(const std::string& domain, const nlohmann::json& config) {
    if (domain == "cmotp") return std::make_unique<CmotpEnv>(CmotpConfig::from_json(config));
    if (domain == "pommerman") return std::make_unique<PommermanEnv>(PomConfig::from_json(config));
    throw config_error("unknown domain: " + domain);
}

}  // namespace amrl::env
