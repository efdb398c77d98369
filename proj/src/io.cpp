#include "sdeid/io.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

namespace sdeid::io {

namespace {

[[noreturn]] void bad(const std::string& where, const std::string& what) {
    throw InputError(where + ": " + what);
}

const json& field(const json& j, const std::string& key, const std::string& where) {
    if (!j.is_object()) {
        bad(where, "expected an object");
    }
    const auto it = j.find(key);
    if (it == j.end()) {
        bad(where, "missing field '" + key + "'");
    }
    return *it;
}

double number(const json& j, const std::string& where) {
    if (!j.is_number()) {
        bad(where, "expected a number");
    }
    return j.get<double>();
}

int integer(const json& j, const std::string& where) {
    if (!j.is_number_integer()) {
        bad(where, "expected an integer");
    }
    return j.get<int>();
}

std::string text(const json& j, const std::string& where) {
    if (!j.is_string()) {
        bad(where, "expected a string");
    }
    return j.get<std::string>();
}

double number_or(const json& j, const std::string& key, double fallback, const std::string& where) {
    return j.contains(key) ? number(j.at(key), where + "." + key) : fallback;
}

int integer_or(const json& j, const std::string& key, int fallback, const std::string& where) {
    return j.contains(key) ? integer(j.at(key), where + "." + key) : fallback;
}

void only_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
    if (!j.is_object()) {
        bad(where, "expected an object");
    }
    for (const auto& [k, v] : j.items()) {
        if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return k == a; })) {
            bad(where, "unknown field '" + k + "'");
        }
    }
}

json vector_json(const Eigen::VectorXd& v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        out.push_back(v[i]);
    }
    return out;
}

Eigen::VectorXd vector_from(const json& j, const std::string& where) {
    if (!j.is_array()) {
        bad(where, "expected an array of numbers");
    }
    Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        v[static_cast<Eigen::Index>(i)] = number(j[i], where + "[" + std::to_string(i) + "]");
    }
    return v;
}

MultiIndex alpha_from(const json& j, const std::string& where) {
    if (!j.is_array()) {
        bad(where, "expected an exponent array");
    }
    std::vector<int> e;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const int v = integer(j[i], where + "[" + std::to_string(i) + "]");
        if (v < 0) {
            bad(where, "exponents must be non-negative");
        }
        e.push_back(v);
    }
    return MultiIndex(e);
}

json coefficient_list(const std::map<MultiIndex, double>& coeffs) {
    json out = json::array();
    for (const auto& [a, v] : coeffs) {
        out.push_back({{"alpha", to_json(a)}, {"value", v}});
    }
    return out;
}

json entry_json(const InformationEntry& e) {
    return {{"theoretical", e.theoretical}, {"empirical", e.empirical}, {"stderr", e.stderr}};
}

// Wraps library validation so the message says which config field failed.
template <typename Fn>
auto in_context(const std::string& where, Fn&& fn) {
    try {
        return fn();
    } catch (const InputError& e) {
        const std::string msg = e.what();
        if (msg.rfind(where, 0) == 0) {
            throw;
        }
        bad(where, msg);
    }
}

} // namespace

json to_json(const MultiIndex& a) { return a.exponents; }

// ---------------------------------------------------------------- potentials

json to_json(const Potential& p) {
    if (const auto* poly = std::get_if<PolynomialPotential>(&p)) {
        return {{"kind", "polynomial"},
                {"d", poly->dimension()},
                {"k", poly->degree()},
                {"coeffs", coefficient_list(poly->coefficients())}};
    }
    const auto& named = std::get<NamedPotential>(p);
    return {{"kind", to_string(named.kind)},
            {"d", named.dimension},
            {"clip_radius", named.clip_radius},
            {"scale", named.scale}};
}

Potential potential_from_json(const json& j) {
    const std::string where = "potential";
    const std::string kind = text(field(j, "kind", where), where + ".kind");
    if (kind == "polynomial") {
        only_keys(j, {"kind", "d", "k", "coeffs"}, where);
        const int d = integer(field(j, "d", where), where + ".d");
        const int k = integer(field(j, "k", where), where + ".k");
        const json& list = field(j, "coeffs", where);
        if (!list.is_array()) {
            bad(where + ".coeffs", "expected an array");
        }
        std::map<MultiIndex, double> coeffs;
        for (std::size_t i = 0; i < list.size(); ++i) {
            const std::string at = where + ".coeffs[" + std::to_string(i) + "]";
            const MultiIndex a = alpha_from(field(list[i], "alpha", at), at + ".alpha");
            if (coeffs.count(a) != 0) {
                bad(at, "duplicate multi-index");
            }
            coeffs[a] = number(field(list[i], "value", at), at + ".value");
        }
        return in_context(where, [&] { return Potential(PolynomialPotential(d, k, coeffs)); });
    }
    only_keys(j, {"kind", "d", "clip_radius", "scale"}, where);
    const NamedKind nk = in_context(where + ".kind", [&] { return named_kind_from_string(kind); });
    const int d = integer_or(j, "d", 2, where);
    const double clip = number_or(j, "clip_radius", 10.0, where);
    NamedPotential np = in_context(where, [&] { return make_named(nk, d, clip); });
    np.scale = number_or(j, "scale", 1.0, where);
    if (!(np.scale > 0.0)) {
        bad(where + ".scale", "must be positive");
    }
    return np;
}

json to_json(const LangevinModel& m) { return {{"potential", to_json(m.potential)}, {"sigma2", m.sigma2}}; }

LangevinModel model_from_json(const json& j) {
    only_keys(j, {"potential", "sigma2"}, "model");
    LangevinModel m{potential_from_json(field(j, "potential", "model")),
                    number(field(j, "sigma2", "model"), "model.sigma2")};
    in_context("model.sigma2", [&] {
        m.validate();
        return 0;
    });
    return m;
}

// ---------------------------------------------------------------- initial laws

json to_json(const InitialDistribution& dist) {
    return std::visit(
        [](const auto& v) -> json {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, UniformBox>) {
                return {{"kind", "uniform"}, {"d", v.dimension}, {"half_length", v.half_length}};
            } else if constexpr (std::is_same_v<T, Gaussian>) {
                json cov = json::array();
                for (Eigen::Index r = 0; r < v.covariance.rows(); ++r) {
                    cov.push_back(vector_json(v.covariance.row(r).transpose()));
                }
                return {{"kind", "gaussian"}, {"mean", vector_json(v.mean)}, {"covariance", cov}};
            } else if constexpr (std::is_same_v<T, Rademacher>) {
                return {{"kind", "rademacher"}, {"d", v.dimension}, {"level", v.level}};
            } else if constexpr (std::is_same_v<T, Dirac>) {
                return {{"kind", "dirac"}, {"point", vector_json(v.point)}};
            } else if constexpr (std::is_same_v<T, GibbsOf>) {
                json out = {{"kind", "gibbs"}, {"steps", v.steps}};
                if (v.proposal_scale) {
                    out["proposal_scale"] = *v.proposal_scale;
                }
                return out;
            } else {
                return {{"kind", "burn_in"},
                        {"steps", v.steps},
                        {"dt", v.dt},
                        {"start_half_length", v.start_half_length}};
            }
        },
        dist);
}

InitialDistribution init_from_json(const json& j, const LangevinModel* model) {
    const std::string where = "init";
    const std::string kind = text(field(j, "kind", where), where + ".kind");
    auto positive = [&](double v, const std::string& name) {
        if (!(v > 0.0)) {
            bad(where + "." + name, "must be positive");
        }
        return v;
    };
    auto needs_model = [&] {
        if (model == nullptr) {
            bad(where, "'" + kind + "' needs the model it samples from");
        }
        return *model;
    };
    if (kind == "uniform") {
        only_keys(j, {"kind", "d", "half_length"}, where);
        return UniformBox{integer_or(j, "d", 2, where), positive(number_or(j, "half_length", 4.0, where), "half_length")};
    }
    if (kind == "gaussian") {
        only_keys(j, {"kind", "mean", "covariance"}, where);
        Gaussian g;
        g.mean = vector_from(field(j, "mean", where), where + ".mean");
        const json& cov = field(j, "covariance", where);
        if (!cov.is_array() || cov.size() != static_cast<std::size_t>(g.mean.size())) {
            bad(where + ".covariance", "expected a square array matching the mean");
        }
        g.covariance.resize(g.mean.size(), g.mean.size());
        for (std::size_t r = 0; r < cov.size(); ++r) {
            const Eigen::VectorXd row = vector_from(cov[r], where + ".covariance[" + std::to_string(r) + "]");
            if (row.size() != g.mean.size()) {
                bad(where + ".covariance", "expected a square array matching the mean");
            }
            g.covariance.row(static_cast<Eigen::Index>(r)) = row.transpose();
        }
        return g;
    }
    if (kind == "rademacher") {
        only_keys(j, {"kind", "d", "level"}, where);
        return Rademacher{integer_or(j, "d", 2, where), positive(number_or(j, "level", 1.0, where), "level")};
    }
    if (kind == "dirac") {
        only_keys(j, {"kind", "point"}, where);
        return Dirac{vector_from(field(j, "point", where), where + ".point")};
    }
    if (kind == "gibbs") {
        only_keys(j, {"kind", "steps", "proposal_scale"}, where);
        GibbsOf g{needs_model(), integer_or(j, "steps", 5000, where), std::nullopt};
        if (j.contains("proposal_scale")) {
            g.proposal_scale = positive(number(j.at("proposal_scale"), where + ".proposal_scale"), "proposal_scale");
        }
        return g;
    }
    if (kind == "burn_in") {
        only_keys(j, {"kind", "steps", "dt", "start_half_length"}, where);
        return LangevinBurnIn{needs_model(), integer_or(j, "steps", 100, where),
                              positive(number_or(j, "dt", 0.01, where), "dt"),
                              positive(number_or(j, "start_half_length", 4.0, where), "start_half_length")};
    }
    bad(where + ".kind", "unknown initial distribution '" + kind +
                             "' (expected uniform, gaussian, rademacher, dirac, gibbs or burn_in)");
}

// ---------------------------------------------------------------- estimation

json to_json(const EstimatorConfig& c) {
    return {{"degree", c.degree},
            {"tol", c.tol},
            {"max_outer", c.max_outer},
            {"sinkhorn",
             {{"epsilon_scale", c.sinkhorn.epsilon_scale}, {"max_iter", c.sinkhorn.max_iter}, {"tol", c.sinkhorn.tol}}},
            {"sigma2_floor", c.sigma2_floor},
            {"seed", c.seed},
            {"sigma2_init", to_string(c.sigma2_init)},
            {"stationarity_level", c.stationarity_level},
            {"stationarity_permutations", c.stationarity_permutations}};
}

EstimatorConfig estimator_config_from_json(const json& j) {
    const std::string where = "estimator";
    only_keys(j,
              {"degree", "tol", "max_outer", "sinkhorn", "sigma2_floor", "seed", "sigma2_init", "stationarity_level",
               "stationarity_permutations"},
              where);
    EstimatorConfig c;
    c.degree = integer_or(j, "degree", c.degree, where);
    c.tol = number_or(j, "tol", c.tol, where);
    c.max_outer = integer_or(j, "max_outer", c.max_outer, where);
    c.sigma2_floor = number_or(j, "sigma2_floor", c.sigma2_floor, where);
    if (j.contains("seed")) {
        if (!j.at("seed").is_number_unsigned()) {
            bad(where + ".seed", "expected a non-negative integer");
        }
        c.seed = j.at("seed").get<Seed>();
    }
    if (j.contains("sigma2_init")) {
        c.sigma2_init = in_context(where + ".sigma2_init",
                                   [&] { return sigma2_init_from_string(text(j.at("sigma2_init"), where + ".sigma2_init")); });
    }
    c.stationarity_level = number_or(j, "stationarity_level", c.stationarity_level, where);
    c.stationarity_permutations = integer_or(j, "stationarity_permutations", c.stationarity_permutations, where);
    if (j.contains("sinkhorn")) {
        const json& s = j.at("sinkhorn");
        const std::string sw = where + ".sinkhorn";
        only_keys(s, {"epsilon_scale", "max_iter", "tol"}, sw);
        c.sinkhorn.epsilon_scale = number_or(s, "epsilon_scale", c.sinkhorn.epsilon_scale, sw);
        c.sinkhorn.max_iter = integer_or(s, "max_iter", c.sinkhorn.max_iter, sw);
        c.sinkhorn.tol = number_or(s, "tol", c.sinkhorn.tol, sw);
    }
    if (c.degree < 1 || c.degree > 12) {
        bad(where + ".degree", "must lie in [1, 12]");
    }
    if (!(c.tol > 0.0) || c.max_outer < 1) {
        bad(where, "tol must be positive and max_outer at least 1");
    }
    if (!(c.sigma2_floor > 0.0)) {
        bad(where + ".sigma2_floor", "must be positive");
    }
    if (!(c.sinkhorn.epsilon_scale > 0.0) || c.sinkhorn.max_iter < 1 || !(c.sinkhorn.tol > 0.0)) {
        bad(where + ".sinkhorn", "epsilon_scale and tol must be positive, max_iter at least 1");
    }
    if (!(c.stationarity_level > 0.0 && c.stationarity_level < 1.0) || c.stationarity_permutations < 1) {
        bad(where, "stationarity_level must lie in (0, 1) and stationarity_permutations be at least 1");
    }
    return c;
}

json to_json(const EstimationResult& r) {
    json trace = json::array();
    for (double v : r.loglik_trace) {
        trace.push_back(v);
    }
    return {{"data_setting", to_string(r.data_setting)},
            {"degree", r.degree},
            {"sigma2_hat", r.sigma2_hat},
            {"iterations", r.iterations},
            {"converged", r.converged},
            {"null_space_dim", r.null_space_dim},
            {"loglik_trace", trace},
            {"potential", to_json(Potential(r.potential))},
            {"warnings", r.warnings}};
}

EstimationResult estimation_result_from_json(const json& j) {
    const std::string where = "result";
    EstimationResult r;
    const Potential p = potential_from_json(field(j, "potential", where));
    if (!std::holds_alternative<PolynomialPotential>(p)) {
        bad(where + ".potential", "estimates are polynomial potentials");
    }
    r.potential = std::get<PolynomialPotential>(p);
    r.sigma2_hat = number(field(j, "sigma2_hat", where), where + ".sigma2_hat");
    r.degree = integer_or(j, "degree", r.potential.degree(), where);
    r.iterations = integer_or(j, "iterations", 0, where);
    r.null_space_dim = integer_or(j, "null_space_dim", 0, where);
    if (j.contains("converged")) {
        r.converged = j.at("converged").get<bool>();
    }
    if (j.contains("data_setting")) {
        const std::string s = text(j.at("data_setting"), where + ".data_setting");
        if (s != "trajectories" && s != "marginals") {
            bad(where + ".data_setting", "expected trajectories or marginals");
        }
        r.data_setting = s == "trajectories" ? DataSetting::Trajectories : DataSetting::Marginals;
    }
    if (j.contains("loglik_trace")) {
        const Eigen::VectorXd t = vector_from(j.at("loglik_trace"), where + ".loglik_trace");
        r.loglik_trace.assign(t.data(), t.data() + t.size());
    }
    if (j.contains("warnings")) {
        r.warnings = j.at("warnings").get<std::vector<std::string>>();
    }
    if (!(r.sigma2_hat > 0.0)) {
        bad(where + ".sigma2_hat", "must be positive");
    }
    return r;
}

json to_json(const FisherReport& r) {
    json coeffs = json::array();
    for (const auto& [a, e] : r.per_coefficient) {
        json row = entry_json(e);
        row["alpha"] = to_json(a);
        coeffs.push_back(row);
    }
    return {{"n", r.n},
            {"dt", r.dt},
            {"d", r.d},
            {"sigma2", r.sigma2},
            {"per_coefficient", coeffs},
            {"diffusion", entry_json(r.diffusion)}};
}

json to_json(const GapReport& r) {
    json coeffs = json::array();
    for (const auto& [a, e] : r.per_coefficient) {
        coeffs.push_back({{"alpha", to_json(a)}, {"gap", e.empirical}, {"stderr", e.stderr}});
    }
    return {{"resamples", r.resamples},
            {"per_coefficient", coeffs},
            {"diffusion", {{"gap", r.diffusion.empirical}, {"stderr", r.diffusion.stderr}}}};
}

json to_json(const StationarityRecord& r) {
    return {{"t_i", r.t_i}, {"t_j", r.t_j}, {"statistic", r.statistic}, {"p_value", r.p_value}};
}

// ---------------------------------------------------------------- CSV

std::string format_double(double v) {
    require(std::isfinite(v), "cannot write a non-finite value");
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        out.push_back(line.substr(start, comma - start));
        if (comma == std::string::npos) {
            break;
        }
        start = comma + 1;
    }
    return out;
}

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) {
        return "";
    }
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

double parse_cell(const std::string& raw, std::size_t line, const std::string& column) {
    const std::string cell = trim(raw);
    double v = 0.0;
    const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (cell.empty() || res.ec != std::errc() || res.ptr != cell.data() + cell.size() || !std::isfinite(v)) {
        throw InputError("row " + std::to_string(line) + ": column '" + column + "' is not a finite number: '" + cell +
                         "'");
    }
    return v;
}

long long parse_id(const std::string& raw, std::size_t line, const std::string& column) {
    const std::string cell = trim(raw);
    long long v = 0;
    const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (cell.empty() || res.ec != std::errc() || res.ptr != cell.data() + cell.size() || v < 0) {
        throw InputError("row " + std::to_string(line) + ": column '" + column +
                         "' is not a non-negative integer: '" + cell + "'");
    }
    return v;
}

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::size_t> line_numbers;
};

CsvTable read_table(const std::string& content, const std::string& first, const std::string& second) {
    std::istringstream in(content);
    std::string line;
    CsvTable t;
    std::size_t no = 0;
    while (std::getline(in, line)) {
        ++no;
        if (trim(line).empty()) {
            continue;
        }
        auto cells = split_csv_line(line);
        if (t.header.empty()) {
            for (auto& c : cells) {
                c = trim(c);
            }
            t.header = cells;
            if (t.header.size() < 3 || t.header[0] != first || t.header[1] != second) {
                throw InputError("row " + std::to_string(no) + ": expected header '" + first + "," + second +
                                 ",x1,...'");
            }
            for (std::size_t i = 2; i < t.header.size(); ++i) {
                if (t.header[i] != "x" + std::to_string(i - 1)) {
                    throw InputError("row " + std::to_string(no) + ": header column " + std::to_string(i + 1) +
                                     " should be 'x" + std::to_string(i - 1) + "'");
                }
            }
            continue;
        }
        if (cells.size() != t.header.size()) {
            throw InputError("row " + std::to_string(no) + ": expected " + std::to_string(t.header.size()) +
                             " fields, found " + std::to_string(cells.size()));
        }
        t.rows.push_back(std::move(cells));
        t.line_numbers.push_back(no);
    }
    if (t.header.empty()) {
        throw InputError("row 1: empty file, no header");
    }
    if (t.rows.empty()) {
        throw InputError("row " + std::to_string(no + 1) + ": no data rows");
    }
    return t;
}

} // namespace

std::string snapshots_to_csv(const SnapshotSeries& s) {
    s.validate();
    std::ostringstream out;
    out << "time,sample_id";
    for (int i = 1; i <= s.dimension(); ++i) {
        out << ",x" << i;
    }
    out << '\n';
    for (std::size_t t = 0; t < s.size(); ++t) {
        const auto& m = s.samples[t];
        const std::string time = format_double(s.times[t]);
        for (Eigen::Index n = 0; n < m.rows(); ++n) {
            out << time << ',' << n;
            for (Eigen::Index i = 0; i < m.cols(); ++i) {
                out << ',' << format_double(m(n, i));
            }
            out << '\n';
        }
    }
    return out.str();
}

SnapshotSeries snapshots_from_csv(const std::string& content) {
    const CsvTable t = read_table(content, "time", "sample_id");
    const auto d = static_cast<Eigen::Index>(t.header.size() - 2);
    // time -> sample_id -> (row, line)
    std::map<double, std::map<long long, std::pair<Eigen::VectorXd, std::size_t>>> groups;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const auto line = t.line_numbers[r];
        const double time = parse_cell(t.rows[r][0], line, "time");
        const long long id = parse_id(t.rows[r][1], line, "sample_id");
        Eigen::VectorXd x(d);
        for (Eigen::Index i = 0; i < d; ++i) {
            x[i] = parse_cell(t.rows[r][static_cast<std::size_t>(i) + 2], line, t.header[static_cast<std::size_t>(i) + 2]);
        }
        auto& g = groups[time];
        if (!g.emplace(id, std::make_pair(x, line)).second) {
            throw InputError("row " + std::to_string(line) + ": duplicate sample_id " + std::to_string(id) +
                             " at time " + format_double(time));
        }
    }
    SnapshotSeries s;
    for (const auto& [time, g] : groups) {
        SampleMatrix m(static_cast<Eigen::Index>(g.size()), d);
        Eigen::Index n = 0;
        for (const auto& [id, row] : g) {
            m.row(n++) = row.first.transpose();
        }
        s.times.push_back(time);
        s.samples.push_back(std::move(m));
    }
    s.validate();
    return s;
}

std::string trajectories_to_csv(const TrajectorySet& tr) {
    tr.validate();
    std::ostringstream out;
    out << "path_id,time";
    for (int i = 1; i <= tr.dimension(); ++i) {
        out << ",x" << i;
    }
    out << '\n';
    for (std::size_t p = 0; p < tr.num_paths(); ++p) {
        for (std::size_t t = 0; t < tr.num_times(); ++t) {
            out << p << ',' << format_double(tr.times[t]);
            for (Eigen::Index i = 0; i < tr.positions[t].cols(); ++i) {
                out << ',' << format_double(tr.positions[t](static_cast<Eigen::Index>(p), i));
            }
            out << '\n';
        }
    }
    return out.str();
}

TrajectorySet trajectories_from_csv(const std::string& content) {
    const CsvTable t = read_table(content, "path_id", "time");
    const auto d = static_cast<Eigen::Index>(t.header.size() - 2);
    std::map<long long, std::map<double, std::pair<Eigen::VectorXd, std::size_t>>> paths;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const auto line = t.line_numbers[r];
        const long long id = parse_id(t.rows[r][0], line, "path_id");
        const double time = parse_cell(t.rows[r][1], line, "time");
        Eigen::VectorXd x(d);
        for (Eigen::Index i = 0; i < d; ++i) {
            x[i] = parse_cell(t.rows[r][static_cast<std::size_t>(i) + 2], line, t.header[static_cast<std::size_t>(i) + 2]);
        }
        if (!paths[id].emplace(time, std::make_pair(x, line)).second) {
            throw InputError("row " + std::to_string(line) + ": path " + std::to_string(id) + " repeats time " +
                             format_double(time));
        }
    }
    TrajectorySet tr;
    for (const auto& [time, row] : paths.begin()->second) {
        tr.times.push_back(time);
    }
    const auto n = static_cast<Eigen::Index>(paths.size());
    tr.positions.assign(tr.times.size(), SampleMatrix(n, d));
    Eigen::Index p = 0;
    for (const auto& [id, samples] : paths) {
        std::size_t ti = 0;
        for (const auto& [time, row] : samples) {
            if (ti >= tr.times.size() || time != tr.times[ti]) {
                throw InputError("row " + std::to_string(row.second) + ": path " + std::to_string(id) +
                                 " is observed at times that differ from path " +
                                 std::to_string(paths.begin()->first));
            }
            tr.positions[ti++].row(p) = row.first.transpose();
        }
        if (ti != tr.times.size()) {
            throw InputError("row " + std::to_string(samples.rbegin()->second.second) + ": path " + std::to_string(id) +
                             " has " + std::to_string(ti) + " times, expected " + std::to_string(tr.times.size()));
        }
        ++p;
    }
    tr.validate();
    return tr;
}

DatasetKind detect_dataset(const std::string& content) {
    std::istringstream in(content);
    std::string line;
    while (std::getline(in, line)) {
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        if (line.rfind("time,sample_id", 0) == 0) {
            return DatasetKind::Snapshots;
        }
        if (line.rfind("path_id,time", 0) == 0) {
            return DatasetKind::Trajectories;
        }
        throw InputError("row 1: unrecognized dataset header '" + line +
                         "' (expected time,sample_id,... or path_id,time,...)");
    }
    throw InputError("row 1: empty dataset");
}

// ---------------------------------------------------------------- files

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw InputError("cannot open '" + path.string() + "' for reading");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    std::error_code ec;
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path(), ec);
        if (ec) {
            throw InputError("cannot create directory '" + path.parent_path().string() + "': " + ec.message());
        }
    }
    std::random_device rd;
    const auto tmp = std::filesystem::path(path.string() + ".tmp" + std::to_string(rd()));
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw InputError("cannot write '" + path.string() + "'");
        }
        out << content;
        out.flush();
        if (!out) {
            std::filesystem::remove(tmp, ec);
            throw InputError("write to '" + path.string() + "' failed");
        }
    }
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw InputError("cannot move temporary file onto '" + path.string() + "'");
    }
}

json read_json_file(const std::filesystem::path& path) {
    const std::string content = read_file(path);
    try {
        return json::parse(content);
    } catch (const json::parse_error& e) {
        const auto upto = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, content.size());
        const auto line = 1 + std::count(content.begin(), content.begin() + static_cast<std::ptrdiff_t>(upto), '\n');
        throw InputError(path.string() + ":" + std::to_string(line) + ": invalid JSON (" + e.what() + ")");
    }
}

void write_json_file(const std::filesystem::path& path, const json& j) { write_file_atomic(path, j.dump(2) + "\n"); }

std::string sha256_hex(const std::string& content) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(content.data(), content.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw NumericalError("SHA-256 computation failed");
    }
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 15]);
    }
    return out;
}

} // namespace sdeid::io
