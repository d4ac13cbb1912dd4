#ifndef CLICKPNR_DATAIO_HPP
#define CLICKPNR_DATAIO_HPP

#include "clickpnr/errors.hpp"
#include "clickpnr/forward_model.hpp"
#include "clickpnr/reconstruction.hpp"
#include "clickpnr/statistics.hpp"
#include "clickpnr/tomography.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace clickpnr {

// Shot file: '#'-prefixed key=value header block followed by `shot_id,pattern`
// rows, pattern as a fixed-width 0/1 string with bin 1 leftmost. Plain text so
// small files stay human-inspectable and external lab software can generate
// them trivially.
struct ShotFileHeader {
    int version = 1;
    int n_bins = 0;
    std::optional<std::uint64_t> seed;
    std::optional<double> nbar;
};

struct ShotFile {
    ShotFileHeader header;
    std::vector<ShotRecord> records;
};

constexpr int kShotFormatVersion = 1;

ShotFile read_shots(const std::filesystem::path& path);
void write_shots(const std::filesystem::path& path, const ShotFile& file);

// Exact integer aggregation of shot records: total-click histogram, per-bin
// marginals, and pairwise both-clicked counts (diagonal = marginals).
// Probabilities are formed only at the statistics boundary.
struct Aggregates {
    int n_bins = 0;
    std::uint64_t shots = 0;
    std::vector<std::uint64_t> click_counts;   // length N+1
    std::vector<std::uint64_t> bin_marginals;  // length N
    std::vector<std::uint64_t> pair_joint;     // N*N row-major
};

Aggregates aggregate(std::span<const ShotRecord> records, int n_bins);
Aggregates aggregate_serial(std::span<const ShotRecord> records, int n_bins);

ClickDistribution click_distribution_from(const Aggregates& agg);

// Structured JSON analysis report. Every float survives a write/read round trip
// exactly; NaN serializes as null. Reports always embed the producing command's
// configuration for provenance.
struct ClickEntry {
    std::string label;
    ClickDistribution dist;
    std::optional<QEstimate> q_mandel;
    std::optional<QEstimate> q_binomial;
};

struct DistributionEntry {
    std::string label;
    PhotonDistribution dist;
    std::vector<double> sigma;  // per-entry bootstrap sigma, may be empty
    std::optional<QEstimate> q_mandel;
    std::optional<NegativityReport> negativity;
    std::optional<double> negativity_sigma;
};

struct QValue {
    std::string label;
    QKind which = QKind::mandel;
    QEstimate estimate;
};

struct ReportFile {
    int schema_version = 1;
    std::string kind;        // producing command
    nlohmann::json config;   // RunConfig provenance
    Warnings warnings;
    std::vector<ClickEntry> clicks;
    std::vector<DistributionEntry> distributions;
    std::optional<ResponseFit> fit;
    std::optional<ResponseFit> fit_alternate;
    std::optional<BinMeans> bins;
    std::optional<BinCovariances> covariances;
    std::optional<UniformityTest> uniformity;
    std::vector<QValue> q_values;
    std::map<std::string, double> scalars;  // named figures of merit
};

constexpr int kReportSchemaVersion = 1;

void write_report(const std::filesystem::path& path, const ReportFile& report);
ReportFile read_report(const std::filesystem::path& path);

// Plot-ready CSV companion: one header line, comma-separated numeric columns,
// shortest round-trip float formatting, '.' decimal separator.
void write_plot_csv(const std::filesystem::path& path, std::span<const std::string> columns,
                    std::span<const std::vector<double>> rows);

}  // namespace clickpnr

#endif
