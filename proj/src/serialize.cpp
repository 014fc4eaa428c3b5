#include "loctail/serialize.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace loctail {

namespace {

using nlohmann::json;

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

json vector_to_json(const Eigen::VectorXd& v) {
    json a = json::array();
    for (int i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (int i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(row);
    }
    return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j) {
    if (!j.is_array() || j.empty()) throw std::invalid_argument("H must be a non-empty array of rows");
    const int rows = static_cast<int>(j.size());
    const int cols = static_cast<int>(j[0].size());
    Eigen::MatrixXd m(rows, cols);
    for (int i = 0; i < rows; ++i) {
        if (static_cast<int>(j[i].size()) != cols)
            throw std::invalid_argument("H rows have inconsistent lengths");
        for (int c = 0; c < cols; ++c) m(i, c) = j[i][c].get<double>();
    }
    return m;
}

json model_to_json(const CovModel& model);

json parts_to_json(const std::vector<std::shared_ptr<const CovModel>>& parts) {
    json a = json::array();
    for (const auto& p : parts) a.push_back(model_to_json(*p));
    return a;
}

json model_to_json(const CovModel& model) {
    json j;
    j["kind"] = model.name();
    if (const auto* m = dynamic_cast<const MultiFbm*>(&model)) {
        j["N"] = m->param_dim();
        j["hurst"] = m->hurst();
    } else if (const auto* m = dynamic_cast<const AnisoFbm*>(&model)) {
        j["c"] = m->c();
        j["p"] = m->p();
        j["hurst"] = m->hurst();
    } else if (const auto* m = dynamic_cast<const IndependentComponents*>(&model)) {
        j["components"] = parts_to_json(m->components());
    } else if (const auto* m = dynamic_cast<const IntersectionModel*>(&model)) {
        j["parts"] = parts_to_json(m->parts());
    } else {
        throw std::invalid_argument("model '" + model.name() +
                                    "' carries code, not data; write a named model instead");
    }
    return j;
}

std::shared_ptr<const CovModel> model_from_json(const json& j) {
    if (!j.is_object() || !j.contains("kind"))
        throw std::invalid_argument("model needs a 'kind' field");
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "multi_fbm") {
        return std::make_shared<MultiFbm>(j.at("N").get<int>(), j.at("hurst").get<double>());
    }
    if (kind == "aniso_fbm") {
        return std::make_shared<AnisoFbm>(j.at("c").get<std::vector<double>>(),
                                          j.at("p").get<std::vector<double>>(),
                                          j.at("hurst").get<double>());
    }
    if (kind == "independent") {
        std::vector<std::shared_ptr<const CovModel>> comps;
        for (const auto& cj : j.at("components")) comps.push_back(model_from_json(cj));
        return std::make_shared<IndependentComponents>(std::move(comps));
    }
    if (kind == "intersection") {
        std::vector<std::shared_ptr<const CovModel>> parts;
        for (const auto& pj : j.at("parts")) parts.push_back(model_from_json(pj));
        return std::make_shared<IntersectionModel>(std::move(parts));
    }
    throw std::invalid_argument("unknown model kind '" + kind + "'");
}

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

double parse_positive(const std::string& s, const std::string& what) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        throw std::invalid_argument("cannot parse " + what + " from '" + s + "'");
    }
    if (used != s.size() || !(v > 0.0))
        throw std::invalid_argument("cannot parse " + what + " from '" + s + "'");
    return v;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = s.find(sep, start);
        if (pos == std::string::npos) {
            out.push_back(s.substr(start));
            return out;
        }
        out.push_back(s.substr(start, pos - start));
        start = pos + 1;
    }
}

}  // namespace

json spec_to_json(const FieldSpec& spec) {
    json j;
    j["schema_version"] = 1;
    j["N"] = spec.N();
    j["d"] = spec.d();
    j["alpha"] = spec.alpha().alpha;
    j["H"] = matrix_to_json(spec.H().H);
    j["c0"] = spec.c0();
    j["model"] = model_to_json(spec.model());
    return j;
}

FieldSpec spec_from_json(const json& j) {
    if (!j.is_object()) throw std::invalid_argument("spec must be a JSON object");
    for (const char* key : {"N", "d", "alpha", "H", "model"})
        if (!j.contains(key))
            throw std::invalid_argument(std::string("spec is missing '") + key + "'");
    const int N = j.at("N").get<int>();
    const int d = j.at("d").get<int>();
    ScalingVector alpha(j.at("alpha").get<std::vector<double>>());
    ScalingMatrix H(matrix_from_json(j.at("H")));
    const double c0 = j.value("c0", 1.0);
    auto model = model_from_json(j.at("model"));
    SpecLimits limits{std::max(4, N), std::max(4, d)};
    return FieldSpec(N, d, std::move(alpha), std::move(H), std::move(model), c0, limits);
}

std::string FieldSpec::fingerprint() const {
    std::string canon;
    try {
        canon = spec_to_json(*this).dump();
    } catch (const std::invalid_argument&) {
        std::ostringstream os;  // explicit kernels: hash the description instead
        os << model_->describe() << "|N=" << N_ << "|d=" << d_ << "|c0=" << c0_;
        for (double a : alpha_.alpha) os << '|' << fmt_double(a);
        os << '|' << fmt_double(H_.trace());
        canon = os.str();
    }
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a(canon)));
    return model_->name() + "-" + buf;
}

FieldSpec preset_spec(const std::string& name) {
    if (name == "bm") {
        return FieldSpec(1, 1, ScalingVector({1.0}),
                         ScalingMatrix(Eigen::MatrixXd::Constant(1, 1, 0.5)),
                         std::make_shared<MultiFbm>(1, 0.5), 1.0);
    }
    if (name.rfind("fbm:", 0) == 0) {
        const double h = parse_positive(name.substr(4), "hurst index");
        if (h >= 1.0) throw std::invalid_argument("fbm needs hurst in (0,1)");
        return FieldSpec(1, 1, ScalingVector({1.0}),
                         ScalingMatrix(Eigen::MatrixXd::Constant(1, 1, h)),
                         std::make_shared<MultiFbm>(1, h), 1.0);
    }
    if (name.rfind("fbm2d:", 0) == 0) {
        const double h = parse_positive(name.substr(6), "hurst index");
        if (h >= 1.0) throw std::invalid_argument("fbm2d needs hurst in (0,1)");
        return FieldSpec(2, 1, ScalingVector({1.0, 1.0}),
                         ScalingMatrix(Eigen::MatrixXd::Constant(1, 1, h)),
                         std::make_shared<MultiFbm>(2, h), 1.0);
    }
    if (name.rfind("aniso:", 0) == 0) {
        // aniso:<h>:<p1>,<p2>,...  with unit weights
        auto fields = split(name.substr(6), ':');
        if (fields.size() != 2)
            throw std::invalid_argument("aniso preset is aniso:<h>:<p1>,<p2>,...");
        const double h = parse_positive(fields[0], "hurst index");
        if (!(h > 0.0 && h <= 0.5))
            throw std::invalid_argument("aniso needs hurst in (0, 0.5] for a valid covariance");
        std::vector<double> p;
        for (const auto& tok : split(fields[1], ','))
            p.push_back(parse_positive(tok, "shape exponent"));
        std::vector<double> c(p.size(), 1.0);
        std::vector<double> a;
        for (double pi : p) a.push_back(1.0 / pi);
        auto model = std::make_shared<AnisoFbm>(c, p, h);
        return FieldSpec(static_cast<int>(p.size()), 1, ScalingVector(a),
                         ScalingMatrix(Eigen::MatrixXd::Constant(1, 1, h)), model, 1.0);
    }
    if (name == "exceptional") {
        return intersection_field({preset_spec("bm"), preset_spec("bm")});
    }
    if (name.rfind("intersect:", 0) == 0) {
        std::vector<FieldSpec> parts;
        for (const auto& tok : split(name.substr(10), 'x')) parts.push_back(preset_spec(tok));
        if (parts.size() < 2)
            throw std::invalid_argument("intersect preset is intersect:<preset>x<preset>[x...]");
        return intersection_field(parts);
    }
    throw std::invalid_argument("unknown preset '" + name + "'");
}

FieldSpec resolve_spec(const std::string& arg) {
    const bool looks_like_file = arg.find('/') != std::string::npos ||
                                 (arg.size() > 5 && arg.compare(arg.size() - 5, 5, ".json") == 0);
    if (!looks_like_file) return preset_spec(arg);
    json j;
    try {
        j = json::parse(read_text_file(arg));
    } catch (const json::parse_error& e) {
        throw std::invalid_argument("spec file '" + arg + "' is not valid JSON: " + e.what());
    }
    return spec_from_json(j);
}

std::string spec_summary(const FieldSpec& spec) {
    std::ostringstream os;
    os << spec.model().describe() << ", N=" << spec.N() << ", d=" << spec.d() << ", alpha=(";
    for (int i = 0; i < spec.alpha().size(); ++i) os << (i ? "," : "") << spec.alpha()[i];
    os << "), tr(H)=" << spec.trace_H() << ", lambda=" << lambda_exponent(spec);
    return os.str();
}

std::string moments_csv(const MomentSeries& series) {
    std::ostringstream os;
    os << "n,value,stderr,samples,rejected,seed\n";
    for (const auto& e : series.entries) {
        os << e.n << ',' << fmt_double(e.value) << ',' << fmt_double(e.se) << ',' << e.samples
           << ',' << e.rejected << ',' << e.seed << '\n';
    }
    return os.str();
}

json moments_json(const MomentSeries& series) {
    json j;
    j["schema_version"] = 1;
    j["fingerprint"] = series.fingerprint;
    j["beta"] = series.beta;
    json entries = json::array();
    for (const auto& e : series.entries) {
        entries.push_back({{"n", e.n},
                           {"value", e.value},
                           {"stderr", e.se},
                           {"mean", e.mean},
                           {"mean_stderr", e.mean_se},
                           {"median_of_means", e.mom},
                           {"median_of_means_stderr", e.mom_se},
                           {"samples", e.samples},
                           {"rejected", e.rejected},
                           {"rejection_warning", e.warning},
                           {"seed", e.seed}});
    }
    j["entries"] = std::move(entries);
    return j;
}

std::string tail_curve_csv(const TailCurve& curve) {
    std::ostringstream os;
    os << "x,p_hat,ci_lo,ci_hi\n";
    for (std::size_t i = 0; i < curve.x.size(); ++i) {
        os << fmt_double(curve.x[i]) << ',' << fmt_double(curve.p_hat[i]) << ','
           << fmt_double(curve.lo[i]) << ',' << fmt_double(curve.hi[i]) << '\n';
    }
    return os.str();
}

json tail_fit_json(const TailFit& fit) {
    return json{{"schema_version", 1},
                {"slope", fit.slope},
                {"stderr", fit.se},
                {"ci_lo", fit.lo},
                {"ci_hi", fit.hi},
                {"curvature", fit.curvature},
                {"curvature_stderr", fit.curvature_se},
                {"curvature_flag", fit.curvature_flag},
                {"split_drift", fit.split_drift},
                {"lambda", fit.lambda},
                {"points_used", fit.n_used}};
}

json verdict_json(const LimitVerdict& verdict) {
    return json{{"schema_version", 1},
                {"lambda", verdict.lambda},
                {"a_plateau", verdict.a_plateau},
                {"a_plateau_stderr", verdict.a_plateau_se},
                {"a_extrapolated", verdict.a_extrapolated},
                {"a_extrapolated_stderr", verdict.a_extrapolated_se},
                {"a_ci", {verdict.a_lo, verdict.a_hi}},
                {"implied_constant", verdict.implied},
                {"implied_ci", {verdict.implied_lo, verdict.implied_hi}},
                {"tail_slope", verdict.slope},
                {"tail_slope_ci", {verdict.slope_lo, verdict.slope_hi}},
                {"curvature_flag", verdict.curvature_flag},
                {"consistent", verdict.consistent},
                {"insufficient", verdict.insufficient},
                {"note", verdict.note},
                {"orders_used", verdict.orders_used}};
}

json tour_json(const TourReport& report) {
    json j;
    j["schema_version"] = 1;
    j["n"] = report.n;
    j["length"] = report.length;
    j["bound"] = report.bound;
    j["alpha"] = report.alpha.alpha;
    j["restarts"] = report.restarts;
    j["best_restart"] = report.best_restart;
    j["seed"] = report.seed;
    json pts = json::array();
    for (const auto& p : report.points) pts.push_back(vector_to_json(p));
    j["points"] = std::move(pts);
    j["ordering"] = report.ordering;
    if (!report.sweep_n.empty()) {
        j["sweep"] = {{"n", report.sweep_n},
                      {"length", report.sweep_length},
                      {"slope", report.sweep_slope}};
    }
    return j;
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    out << content;
    if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read '" + path + "'");
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

}  // namespace loctail
