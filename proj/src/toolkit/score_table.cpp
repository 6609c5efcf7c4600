#include "pxgen/toolkit/score_table.hpp"

#include "pxgen/errors.hpp"
#include "pxgen/toolkit/idx.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

namespace pxgen::toolkit {

nlohmann::json thresholds_to_json(const Thresholds& t) {
    return {{"intrinsic_cutoff", t.intrinsic_cutoff},
            {"extrinsic_cutoff", t.extrinsic_cutoff},
            {"mode", to_string(t.mode)},
            {"percentile", t.percentile},
            {"iterations", t.iterations},
            {"samples_per_iteration", t.samples_per_iteration},
            {"seed", t.seed},
            {"extrinsic", to_string(t.extrinsic_kind)}};
}

Thresholds thresholds_from_json(const nlohmann::json& j) {
    Thresholds t;
    try {
        t.intrinsic_cutoff = j.at("intrinsic_cutoff").get<double>();
        t.extrinsic_cutoff = j.at("extrinsic_cutoff").get<double>();
        t.mode = parse_threshold_mode(j.at("mode").get<std::string>());
        t.percentile = j.at("percentile").get<double>();
        t.iterations = j.at("iterations").get<int>();
        t.samples_per_iteration = j.at("samples_per_iteration").get<int>();
        t.seed = j.at("seed").get<std::uint64_t>();
        t.extrinsic_kind = parse_extrinsic_kind(j.at("extrinsic").get<std::string>());
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("thresholds: ") + e.what());
    } catch (const InvalidArgument& e) {
        throw FormatError(std::string("thresholds: ") + e.what());
    }
    return t;
}

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

namespace {

double parse_double(std::string_view s, std::size_t line) {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size() || !std::isfinite(v)) {
        throw FormatError("score table: bad number '" + std::string(s) + "' on line " +
                          std::to_string(line));
    }
    return v;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto at = s.find(sep, start);
        out.push_back(s.substr(start, at == std::string_view::npos ? at : at - start));
        if (at == std::string_view::npos) break;
        start = at + 1;
    }
    return out;
}

constexpr std::string_view kColumns = "id,intrinsic,extrinsic,anchor_value,quadrant";

}  // namespace

std::string encode_score_table(const ScoreTable& table) {
    nlohmann::json meta = {
        {"config", table.config},
        {"model_checksum", table.model_checksum},
        {"thresholds", table.thresholds ? thresholds_to_json(*table.thresholds) : nullptr},
    };
    std::ostringstream os;
    os << "# " << meta.dump() << '\n' << kColumns << '\n';
    for (const auto& r : table.rows) {
        os << r.id << ',' << format_double(r.intrinsic) << ',' << format_double(r.extrinsic) << ','
           << format_double(r.anchor_value) << ',' << to_string(r.quadrant) << '\n';
    }
    return os.str();
}

ScoreTable decode_score_table(std::string_view text) {
    const auto lines = split(text, '\n');
    if (lines.size() < 2 || lines[0].substr(0, 2) != "# ") {
        throw FormatError("score table: missing '#' metadata line at line 1");
    }
    ScoreTable t;
    try {
        const auto meta = nlohmann::json::parse(lines[0].substr(2));
        t.config = meta.at("config");
        t.model_checksum = meta.at("model_checksum").get<std::string>();
        if (!meta.at("thresholds").is_null()) {
            t.thresholds = thresholds_from_json(meta.at("thresholds"));
        }
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("score table: bad metadata on line 1: ") + e.what());
    }
    if (lines[1] != kColumns) {
        throw FormatError("score table: unexpected column header on line 2");
    }
    for (std::size_t i = 2; i < lines.size(); ++i) {
        const std::size_t lineno = i + 1;
        if (lines[i].empty()) {
            if (i + 1 == lines.size()) break;
            throw FormatError("score table: empty line " + std::to_string(lineno));
        }
        const auto f = split(lines[i], ',');
        if (f.size() != 5) {
            throw FormatError("score table: expected 5 fields on line " + std::to_string(lineno));
        }
        AnchorScore r;
        const auto id_res = std::from_chars(f[0].data(), f[0].data() + f[0].size(), r.id);
        if (id_res.ec != std::errc() || id_res.ptr != f[0].data() + f[0].size()) {
            throw FormatError("score table: bad id on line " + std::to_string(lineno));
        }
        r.intrinsic = parse_double(f[1], lineno);
        r.extrinsic = parse_double(f[2], lineno);
        r.anchor_value = parse_double(f[3], lineno);
        try {
            r.quadrant = parse_quadrant(f[4]);
        } catch (const InvalidArgument&) {
            throw FormatError("score table: bad quadrant on line " + std::to_string(lineno));
        }
        if (r.anchor_value != r.intrinsic + r.extrinsic) {
            throw FormatError("score table: anchor_value is not intrinsic + extrinsic on line " +
                              std::to_string(lineno));
        }
        const Quadrant expect = t.thresholds ? quadrant_of(r, *t.thresholds) : Quadrant::UNSET;
        if (r.quadrant != expect) {
            throw FormatError("score table: quadrant on line " + std::to_string(lineno) +
                              " disagrees with the stored thresholds");
        }
        t.rows.push_back(r);
    }
    return t;
}

void save_score_table(const std::string& path, const ScoreTable& table) {
    write_file(path, encode_score_table(table));
}

ScoreTable load_score_table(const std::string& path) {
    return decode_score_table(read_file(path));
}

}  // namespace pxgen::toolkit
