#pragma once

#include <string>
#include <string_view>

#include "ctxverify/stats.hpp"
#include "ctxverify/verifier.hpp"

namespace ctxverify {

inline constexpr int kModelSchemaVersion = 1;

// Counts are stored verbatim; derived probabilities are written for readers
// and re-derived (and cross-checked to 1e-12) on load.
std::string stats_model_to_json(const CooccurrenceModel& model);
CooccurrenceModel stats_model_from_json(std::string_view json_text);

std::string linear_model_to_json(const LinearModel& model);
LinearModel linear_model_from_json(std::string_view json_text);

// Writes the registry document at `path` and one statistics document per
// model next to it (<stem>.stats.<label>.json), referenced by relative path.
void save_registry(const std::string& path, const VerifierRegistry& registry);
VerifierRegistry load_registry(const std::string& path);

void save_stats_model(const std::string& path, const CooccurrenceModel& model);
CooccurrenceModel load_stats_model(const std::string& path);

std::string verdict_to_json(const Verdict& verdict);

}  // namespace ctxverify
