#pragma once

#include <json.hpp>
#include <string>

#include "loctail/asymptotics.hpp"
#include "loctail/field_model.hpp"
#include "loctail/kernel.hpp"
#include "loctail/path_sim.hpp"
#include "loctail/tour.hpp"

namespace loctail {

// Covariance models round-trip through JSON by kind; explicit kernels are
// code, not data, and are rejected.
nlohmann::json spec_to_json(const FieldSpec& spec);
FieldSpec spec_from_json(const nlohmann::json& j);

// bm | fbm:<h> | fbm2d:<h> | aniso:<h>:<p1>,<p2>,... | exceptional |
// intersect:<preset>x<preset>[x<preset>...]
FieldSpec preset_spec(const std::string& name);

// preset name, or a path to a spec JSON file
FieldSpec resolve_spec(const std::string& arg);

std::string spec_summary(const FieldSpec& spec);

std::string moments_csv(const MomentSeries& series);
nlohmann::json moments_json(const MomentSeries& series);
std::string tail_curve_csv(const TailCurve& curve);
nlohmann::json tail_fit_json(const TailFit& fit);
nlohmann::json verdict_json(const LimitVerdict& verdict);
nlohmann::json tour_json(const TourReport& report);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace loctail
