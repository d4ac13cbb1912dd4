#include "clickpnr/dataio.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace clickpnr {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

std::string read_whole_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open " + path.string());
    std::ostringstream os;
    os << in.rdbuf();
    if (in.bad()) throw io_error("read failure on " + path.string());
    return std::move(os).str();
}

void write_whole_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw io_error("cannot open " + path.string() + " for writing");
    out << content;
    if (!out) throw io_error("write failure on " + path.string());
}

void append_double(std::string& out, double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    out.append(buf, res.ptr);
}

}  // namespace

ShotFile read_shots(const std::filesystem::path& path) {
    const std::string content = read_whole_file(path);
    ShotFile file;
    bool have_version = false, have_n = false;
    std::vector<std::string> bad_lines;
    std::optional<std::uint64_t> last_id;

    std::size_t pos = 0, line_no = 0;
    while (pos < content.size()) {
        ++line_no;
        std::size_t eol = content.find('\n', pos);
        if (eol == std::string::npos) eol = content.size();
        std::string_view line(content.data() + pos, eol - pos);
        pos = eol + 1;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) continue;

        auto record_bad = [&](const std::string& why) {
            if (bad_lines.size() < 10)
                bad_lines.push_back("line " + std::to_string(line_no) + ": " + why);
        };

        if (line.front() == '#') {
            std::string_view kv = line.substr(1);
            while (!kv.empty() && kv.front() == ' ') kv.remove_prefix(1);
            const std::size_t eq = kv.find('=');
            if (eq == std::string_view::npos) continue;  // plain comment
            const std::string_view key = kv.substr(0, eq);
            const std::string_view value = kv.substr(eq + 1);
            auto parse_u64 = [&](std::uint64_t& out) {
                auto res = std::from_chars(value.data(), value.data() + value.size(), out);
                return res.ec == std::errc() && res.ptr == value.data() + value.size();
            };
            if (key == "version") {
                std::uint64_t v = 0;
                if (!parse_u64(v)) {
                    record_bad("unparseable version");
                    continue;
                }
                file.header.version = static_cast<int>(v);
                have_version = true;
                if (file.header.version != kShotFormatVersion)
                    throw validation_error(path.string() + ": unsupported shot format version " +
                                           std::to_string(file.header.version));
            } else if (key == "N") {
                std::uint64_t v = 0;
                if (!parse_u64(v) || v < 1 || v > static_cast<std::uint64_t>(kMaxBins)) {
                    record_bad("bad bin count");
                    continue;
                }
                file.header.n_bins = static_cast<int>(v);
                have_n = true;
            } else if (key == "seed") {
                std::uint64_t v = 0;
                if (parse_u64(v)) file.header.seed = v;
            } else if (key == "nbar") {
                double v = 0;
                auto res = std::from_chars(value.data(), value.data() + value.size(), v);
                if (res.ec == std::errc()) file.header.nbar = v;
            }
            // Unknown keys are tolerated as comments.
            continue;
        }

        if (!have_version || !have_n) {
            record_bad("data row before complete header (need version and N)");
            continue;
        }
        const std::size_t comma = line.find(',');
        if (comma == std::string_view::npos) {
            record_bad("missing comma");
            continue;
        }
        const std::string_view id_part = line.substr(0, comma);
        const std::string_view pattern = line.substr(comma + 1);
        std::uint64_t shot_id = 0;
        auto res = std::from_chars(id_part.data(), id_part.data() + id_part.size(), shot_id);
        if (res.ec != std::errc() || res.ptr != id_part.data() + id_part.size()) {
            record_bad("unparseable shot_id");
            continue;
        }
        if (pattern.size() != static_cast<std::size_t>(file.header.n_bins)) {
            record_bad("pattern length " + std::to_string(pattern.size()) + " != N = " +
                       std::to_string(file.header.n_bins));
            continue;
        }
        std::uint32_t bits = 0;
        bool ok = true;
        for (std::size_t j = 0; j < pattern.size(); ++j) {
            if (pattern[j] == '1')
                bits |= (1u << j);
            else if (pattern[j] != '0') {
                record_bad("pattern contains characters outside {0,1}");
                ok = false;
                break;
            }
        }
        if (!ok) continue;
        if (last_id && shot_id <= *last_id) {
            record_bad("shot_id not strictly increasing (duplicate or out of order)");
            continue;
        }
        last_id = shot_id;
        file.records.push_back({shot_id, bits});
    }

    if (!have_version || !have_n)
        throw validation_error(path.string() + ": header must declare version and N");
    if (!bad_lines.empty()) {
        std::string msg = path.string() + ": malformed rows:";
        for (const auto& l : bad_lines) msg += "\n  " + l;
        throw validation_error(msg);
    }
    return file;
}

void write_shots(const std::filesystem::path& path, const ShotFile& file) {
    if (file.header.n_bins < 1 || file.header.n_bins > kMaxBins)
        throw validation_error("write_shots: bin count must be in [1, 32]");
    std::string out;
    out.reserve(64 + file.records.size() * (file.header.n_bins + 10));
    out += "# version=" + std::to_string(file.header.version) + "\n";
    out += "# N=" + std::to_string(file.header.n_bins) + "\n";
    if (file.header.seed) out += "# seed=" + std::to_string(*file.header.seed) + "\n";
    if (file.header.nbar) {
        out += "# nbar=";
        append_double(out, *file.header.nbar);
        out += "\n";
    }
    char buf[24];
    for (const auto& rec : file.records) {
        auto res = std::to_chars(buf, buf + sizeof(buf), rec.shot_id);
        out.append(buf, res.ptr);
        out += ',';
        for (int j = 0; j < file.header.n_bins; ++j) out += rec.bit(j) ? '1' : '0';
        out += '\n';
    }
    write_whole_file(path, out);
}

namespace {

Aggregates aggregate_range(std::span<const ShotRecord> records, int n_bins) {
    Aggregates agg;
    agg.n_bins = n_bins;
    agg.shots = records.size();
    agg.click_counts.assign(n_bins + 1, 0);
    agg.bin_marginals.assign(n_bins, 0);
    agg.pair_joint.assign(static_cast<std::size_t>(n_bins) * n_bins, 0);
    int set_bits[kMaxBins];
    for (const auto& rec : records) {
        if (rec.bits >> n_bins)
            throw validation_error("aggregate: pattern has bits beyond bin count");
        int count = 0;
        std::uint32_t bits = rec.bits;
        while (bits) {
            const int j = std::countr_zero(bits);
            bits &= bits - 1;
            set_bits[count++] = j;
        }
        ++agg.click_counts[count];
        for (int a = 0; a < count; ++a) {
            const int j = set_bits[a];
            ++agg.bin_marginals[j];
            ++agg.pair_joint[static_cast<std::size_t>(j) * n_bins + j];
            for (int b = a + 1; b < count; ++b) {
                const int jp = set_bits[b];
                ++agg.pair_joint[static_cast<std::size_t>(j) * n_bins + jp];
                ++agg.pair_joint[static_cast<std::size_t>(jp) * n_bins + j];
            }
        }
    }
    return agg;
}

void merge_into(Aggregates& into, const Aggregates& from) {
    into.shots += from.shots;
    for (std::size_t i = 0; i < into.click_counts.size(); ++i)
        into.click_counts[i] += from.click_counts[i];
    for (std::size_t i = 0; i < into.bin_marginals.size(); ++i)
        into.bin_marginals[i] += from.bin_marginals[i];
    for (std::size_t i = 0; i < into.pair_joint.size(); ++i)
        into.pair_joint[i] += from.pair_joint[i];
}

void check_bins(int n_bins) {
    if (n_bins < 1 || n_bins > kMaxBins)
        throw validation_error("aggregate: bin count must be in [1, 32]");
}

}  // namespace

Aggregates aggregate_serial(std::span<const ShotRecord> records, int n_bins) {
    check_bins(n_bins);
    return aggregate_range(records, n_bins);
}

Aggregates aggregate(std::span<const ShotRecord> records, int n_bins) {
    check_bins(n_bins);
#ifdef _OPENMP
    Aggregates total;
    total.n_bins = n_bins;
    total.shots = 0;
    total.click_counts.assign(n_bins + 1, 0);
    total.bin_marginals.assign(n_bins, 0);
    total.pair_joint.assign(static_cast<std::size_t>(n_bins) * n_bins, 0);
    std::exception_ptr err;
#pragma omp parallel
    {
        const int threads = omp_get_num_threads();
        const int tid = omp_get_thread_num();
        const std::size_t chunk = (records.size() + threads - 1) / threads;
        const std::size_t begin = std::min(records.size(), chunk * tid);
        const std::size_t end = std::min(records.size(), begin + chunk);
        try {
            // Integer partials merge exactly, so the result is independent of
            // the thread count and merge order.
            const Aggregates part = aggregate_range(records.subspan(begin, end - begin), n_bins);
#pragma omp critical
            merge_into(total, part);
        } catch (...) {
#pragma omp critical
            if (!err) err = std::current_exception();
        }
    }
    if (err) std::rethrow_exception(err);
    return total;
#else
    return aggregate_range(records, n_bins);
#endif
}

ClickDistribution click_distribution_from(const Aggregates& agg) {
    if (agg.shots == 0) throw validation_error("click_distribution_from: no shots");
    std::vector<double> values(agg.click_counts.size());
    for (std::size_t k = 0; k < values.size(); ++k)
        values[k] = static_cast<double>(agg.click_counts[k]) / static_cast<double>(agg.shots);
    return ClickDistribution(std::move(values), agg.n_bins, agg.shots);
}

// ---------------------------------------------------------------------------
// JSON report

namespace {

using nlohmann::json;

json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }
double num_back(const json& j) { return j.is_null() ? kNan : j.get<double>(); }

json vec_to_json(std::span<const double> v) {
    json a = json::array();
    for (double x : v) a.push_back(num(x));
    return a;
}

std::vector<double> vec_from_json(const json& a) {
    std::vector<double> v;
    v.reserve(a.size());
    for (const auto& x : a) v.push_back(num_back(x));
    return v;
}

json q_estimate_to_json(const QEstimate& e) {
    json j{{"q", num(e.q)},
           {"sigma", num(e.sigma)},
           {"degenerate", e.degenerate},
           {"resamples_used", e.resamples_used}};
    if (!e.flag.empty()) j["flag"] = e.flag;
    if (e.sigma_delta) j["sigma_delta"] = num(*e.sigma_delta);
    return j;
}

QEstimate q_estimate_from_json(const json& j) {
    QEstimate e;
    e.q = num_back(j.at("q"));
    e.sigma = num_back(j.at("sigma"));
    e.degenerate = j.at("degenerate").get<bool>();
    e.resamples_used = j.at("resamples_used").get<int>();
    if (j.contains("flag")) e.flag = j.at("flag").get<std::string>();
    if (j.contains("sigma_delta")) e.sigma_delta = num_back(j.at("sigma_delta"));
    return e;
}

json warnings_to_json(const Warnings& warnings) {
    json a = json::array();
    for (const auto& w : warnings) a.push_back(json{{"code", w.code}, {"message", w.message}});
    return a;
}

Warnings warnings_from_json(const json& a) {
    Warnings w;
    for (const auto& e : a)
        w.push_back({e.at("code").get<std::string>(), e.at("message").get<std::string>()});
    return w;
}

json click_dist_to_json(const ClickDistribution& d) {
    return json{{"n_bins", d.n_bins()},
                {"shot_count", d.shot_count()},
                {"tail_mass", num(d.tail_mass())},
                {"values", vec_to_json(d.values())}};
}

ClickDistribution click_dist_from_json(const json& j) {
    return ClickDistribution(vec_from_json(j.at("values")), j.at("n_bins").get<int>(),
                             j.at("shot_count").get<std::uint64_t>(),
                             num_back(j.at("tail_mass")));
}

json photon_dist_to_json(const PhotonDistribution& d) {
    return json{{"eta_tag", num(d.eta_tag())},
                {"kind", to_string(d.kind())},
                {"tail_mass", num(d.tail_mass())},
                {"values", vec_to_json(d.values())}};
}

PhotonDistribution photon_dist_from_json(const json& j) {
    return PhotonDistribution(vec_from_json(j.at("values")), num_back(j.at("eta_tag")),
                              distribution_kind_from_string(j.at("kind").get<std::string>()),
                              num_back(j.at("tail_mass")));
}

json fit_to_json(const ResponseFit& f) {
    json cov = json::array();
    for (const auto& row : f.covariance) {
        json r = json::array();
        for (double v : row) r.push_back(num(v));
        cov.push_back(r);
    }
    return json{{"order", to_string(f.order)},
                {"n_bins", f.n_bins},
                {"n_points", f.n_points},
                {"nu", num(f.nu)},
                {"eta", num(f.eta)},
                {"gamma", num(f.gamma)},
                {"std_errors", vec_to_json(f.std_errors)},
                {"rel_errors", vec_to_json(f.rel_errors)},
                {"significance", vec_to_json(f.significance)},
                {"covariance", cov},
                {"r_squared", num(f.r_squared)},
                {"weighted", f.weighted},
                {"warnings", warnings_to_json(f.warnings)}};
}

ResponseFit fit_from_json(const json& j) {
    ResponseFit f;
    f.order = fit_order_from_string(j.at("order").get<std::string>());
    f.n_bins = j.at("n_bins").get<int>();
    f.n_points = j.at("n_points").get<int>();
    f.nu = num_back(j.at("nu"));
    f.eta = num_back(j.at("eta"));
    f.gamma = num_back(j.at("gamma"));
    const auto se = vec_from_json(j.at("std_errors"));
    const auto re = vec_from_json(j.at("rel_errors"));
    const auto sig = vec_from_json(j.at("significance"));
    for (std::size_t i = 0; i < 3; ++i) {
        f.std_errors[i] = se.at(i);
        f.rel_errors[i] = re.at(i);
        f.significance[i] = sig.at(i);
    }
    const auto& cov = j.at("covariance");
    for (std::size_t r = 0; r < 3; ++r)
        for (std::size_t c = 0; c < 3; ++c) f.covariance[r][c] = num_back(cov.at(r).at(c));
    f.r_squared = num_back(j.at("r_squared"));
    f.weighted = j.at("weighted").get<bool>();
    f.warnings = warnings_from_json(j.at("warnings"));
    return f;
}

json negativity_to_json(const NegativityReport& n) {
    json j{{"neg_mass", num(n.neg_mass)}};
    j["worst_index"] = n.worst_index ? json(*n.worst_index) : json(nullptr);
    j["significance"] = n.significance ? num(*n.significance) : json(nullptr);
    return j;
}

NegativityReport negativity_from_json(const json& j) {
    NegativityReport n;
    n.neg_mass = num_back(j.at("neg_mass"));
    if (!j.at("worst_index").is_null()) n.worst_index = j.at("worst_index").get<int>();
    if (!j.at("significance").is_null()) n.significance = num_back(j.at("significance"));
    return n;
}

}  // namespace

void write_report(const std::filesystem::path& path, const ReportFile& report) {
    json j;
    j["schema_version"] = report.schema_version;
    j["kind"] = report.kind;
    j["config"] = report.config;
    j["warnings"] = warnings_to_json(report.warnings);

    json clicks = json::array();
    for (const auto& c : report.clicks) {
        json e{{"label", c.label}, {"distribution", click_dist_to_json(c.dist)}};
        if (c.q_mandel) e["q_mandel"] = q_estimate_to_json(*c.q_mandel);
        if (c.q_binomial) e["q_binomial"] = q_estimate_to_json(*c.q_binomial);
        clicks.push_back(e);
    }
    j["clicks"] = clicks;

    json dists = json::array();
    for (const auto& d : report.distributions) {
        json e{{"label", d.label}, {"distribution", photon_dist_to_json(d.dist)}};
        if (!d.sigma.empty()) e["sigma"] = vec_to_json(d.sigma);
        if (d.q_mandel) e["q_mandel"] = q_estimate_to_json(*d.q_mandel);
        if (d.negativity) e["negativity"] = negativity_to_json(*d.negativity);
        if (d.negativity_sigma) e["negativity_sigma"] = num(*d.negativity_sigma);
        dists.push_back(e);
    }
    j["distributions"] = dists;

    if (report.fit) j["response_fit"] = fit_to_json(*report.fit);
    if (report.fit_alternate) j["response_fit_alternate"] = fit_to_json(*report.fit_alternate);
    if (report.bins)
        j["bin_means"] = json{{"mean", vec_to_json(report.bins->mean)},
                              {"sigma", vec_to_json(report.bins->sigma)},
                              {"shots", report.bins->shots}};
    if (report.covariances)
        j["bin_covariances"] = json{{"n_bins", report.covariances->n_bins},
                                    {"cov", vec_to_json(report.covariances->cov)},
                                    {"sigma", vec_to_json(report.covariances->sigma)}};
    if (report.uniformity)
        j["uniformity"] = json{{"chi2", num(report.uniformity->chi2)},
                               {"dof", report.uniformity->dof},
                               {"p_value", num(report.uniformity->p_value)},
                               {"degenerate", report.uniformity->degenerate}};

    json qvals = json::array();
    for (const auto& q : report.q_values)
        qvals.push_back(json{{"label", q.label},
                             {"which", q.which == QKind::mandel ? "mandel" : "binomial"},
                             {"estimate", q_estimate_to_json(q.estimate)}});
    j["q_values"] = qvals;

    json scalars = json::object();
    for (const auto& [k, v] : report.scalars) scalars[k] = num(v);
    j["scalars"] = scalars;

    write_whole_file(path, j.dump(2) + "\n");
}

ReportFile read_report(const std::filesystem::path& path) {
    const std::string content = read_whole_file(path);
    json j;
    try {
        j = json::parse(content);
    } catch (const json::parse_error& e) {
        throw validation_error(path.string() + ": invalid JSON: " + e.what());
    }
    if (!j.contains("schema_version") || !j.at("schema_version").is_number_integer())
        throw validation_error(path.string() + ": missing schema_version");
    const int version = j.at("schema_version").get<int>();
    if (version != kReportSchemaVersion)
        throw validation_error(path.string() + ": unsupported report schema version " +
                               std::to_string(version));

    ReportFile report;
    report.schema_version = version;
    report.kind = j.at("kind").get<std::string>();
    report.config = j.at("config");
    report.warnings = warnings_from_json(j.at("warnings"));

    for (const auto& e : j.at("clicks")) {
        ClickEntry c{e.at("label").get<std::string>(), click_dist_from_json(e.at("distribution")),
                     std::nullopt, std::nullopt};
        if (e.contains("q_mandel")) c.q_mandel = q_estimate_from_json(e.at("q_mandel"));
        if (e.contains("q_binomial")) c.q_binomial = q_estimate_from_json(e.at("q_binomial"));
        report.clicks.push_back(std::move(c));
    }
    for (const auto& e : j.at("distributions")) {
        DistributionEntry d{e.at("label").get<std::string>(),
                            photon_dist_from_json(e.at("distribution")),
                            {},
                            std::nullopt,
                            std::nullopt,
                            std::nullopt};
        if (e.contains("sigma")) d.sigma = vec_from_json(e.at("sigma"));
        if (e.contains("q_mandel")) d.q_mandel = q_estimate_from_json(e.at("q_mandel"));
        if (e.contains("negativity")) d.negativity = negativity_from_json(e.at("negativity"));
        if (e.contains("negativity_sigma")) d.negativity_sigma = num_back(e.at("negativity_sigma"));
        report.distributions.push_back(std::move(d));
    }
    if (j.contains("response_fit")) report.fit = fit_from_json(j.at("response_fit"));
    if (j.contains("response_fit_alternate"))
        report.fit_alternate = fit_from_json(j.at("response_fit_alternate"));
    if (j.contains("bin_means")) {
        BinMeans b;
        b.mean = vec_from_json(j.at("bin_means").at("mean"));
        b.sigma = vec_from_json(j.at("bin_means").at("sigma"));
        b.shots = j.at("bin_means").at("shots").get<std::uint64_t>();
        report.bins = std::move(b);
    }
    if (j.contains("bin_covariances")) {
        BinCovariances c;
        c.n_bins = j.at("bin_covariances").at("n_bins").get<int>();
        c.cov = vec_from_json(j.at("bin_covariances").at("cov"));
        c.sigma = vec_from_json(j.at("bin_covariances").at("sigma"));
        report.covariances = std::move(c);
    }
    if (j.contains("uniformity")) {
        UniformityTest u;
        u.chi2 = num_back(j.at("uniformity").at("chi2"));
        u.dof = j.at("uniformity").at("dof").get<int>();
        u.p_value = num_back(j.at("uniformity").at("p_value"));
        u.degenerate = j.at("uniformity").at("degenerate").get<bool>();
        report.uniformity = u;
    }
    for (const auto& e : j.at("q_values")) {
        QValue q;
        q.label = e.at("label").get<std::string>();
        q.which = e.at("which").get<std::string>() == "mandel" ? QKind::mandel : QKind::binomial;
        q.estimate = q_estimate_from_json(e.at("estimate"));
        report.q_values.push_back(std::move(q));
    }
    for (const auto& [k, v] : j.at("scalars").items()) report.scalars[k] = num_back(v);
    return report;
}

void write_plot_csv(const std::filesystem::path& path, std::span<const std::string> columns,
                    std::span<const std::vector<double>> rows) {
    std::string out;
    for (std::size_t i = 0; i < columns.size(); ++i) {
        if (i) out += ',';
        out += columns[i];
    }
    out += '\n';
    for (const auto& row : rows) {
        if (row.size() != columns.size())
            throw validation_error("write_plot_csv: row width mismatch");
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out += ',';
            if (std::isfinite(row[i]))
                append_double(out, row[i]);
            else
                out += "nan";
        }
        out += '\n';
    }
    write_whole_file(path, out);
}

}  // namespace clickpnr
