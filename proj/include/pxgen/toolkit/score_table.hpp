#pragma once

#include "pxgen/analysis.hpp"
#include "pxgen/criteria.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace pxgen::toolkit {

// CSV with a leading '#'-prefixed JSON metadata line:
//   # {"config":{...},"model_checksum":"...","thresholds":{...}|null}
//   id,intrinsic,extrinsic,anchor_value,quadrant
// Quadrants are UNSET until thresholds are attached; on load they are
// re-derived from the stored thresholds and must match.
struct ScoreTable {
    std::string model_checksum;
    std::optional<Thresholds> thresholds;
    nlohmann::json config = nlohmann::json::object();
    std::vector<AnchorScore> rows;

    friend bool operator==(const ScoreTable&, const ScoreTable&) = default;
};

nlohmann::json thresholds_to_json(const Thresholds& t);
Thresholds thresholds_from_json(const nlohmann::json& j);

// Shortest representation that parses back to the same double.
std::string format_double(double v);

std::string encode_score_table(const ScoreTable& table);
ScoreTable decode_score_table(std::string_view text);

void save_score_table(const std::string& path, const ScoreTable& table);
ScoreTable load_score_table(const std::string& path);

}  // namespace pxgen::toolkit
