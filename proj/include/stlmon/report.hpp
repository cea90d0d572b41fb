#pragma once

// JSON views of sets and verdicts.

#include <json.hpp>

#include "monitor.hpp"
#include "timesets.hpp"

namespace stlmon {

/// List of {lo, hi, polarity}; Universe is [{0, 0, true}] and Empty is [].
inline nlohmann::json to_json(const ApproxSet& t)
{
    nlohmann::json out = nlohmann::json::array();
    for (const auto& b : t.as_list()) {
        out.push_back({{"lo", b.s.lo()}, {"hi", b.s.hi()}, {"polarity", b.polarity}});
    }
    return out;
}

inline nlohmann::json to_json(const MonitorStats& s)
{
    return {{"integration_steps", s.integration_steps},
            {"search_zero_calls", s.search_zero_calls},
            {"newton_iterations", s.newton_iterations}};
}

inline nlohmann::json to_json(const Verdict& v, bool with_sets)
{
    nlohmann::json out;
    out["outcome"] = to_string(v.outcome);
    out["unknown_cause"] = v.unknown_cause ? nlohmann::json(to_string(*v.unknown_cause)) : nlohmann::json(nullptr);
    if (!v.message.empty()) {
        out["message"] = v.message;
    }
    out["horizon"] = v.horizon;
    out["stats"] = to_json(v.stats);
    if (with_sets) {
        nlohmann::json atoms = nlohmann::json::array();
        for (const auto& a : v.atom_sets) {
            atoms.push_back({{"formula", a.formula}, {"set", to_json(a.set)}});
        }
        out["atom_sets"] = std::move(atoms);
        nlohmann::json subs = nlohmann::json::array();
        for (const auto& a : v.subformula_sets) {
            subs.push_back({{"formula", a.formula}, {"set", to_json(a.set)}});
        }
        out["subformula_sets"] = std::move(subs);
        out["result"] = v.result ? to_json(*v.result) : nlohmann::json(nullptr);
    }
    return out;
}

} // namespace stlmon
