#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "diqnn/analysis.hpp"
#include "diqnn/margin.hpp"
#include "diqnn/train.hpp"

namespace diqnn {

/// Run provenance written before any long computation starts.
struct RunManifest {
    std::string command;
    std::map<std::string, std::string> config; // resolved values, stringified
    std::uint64_t seed = 0;
    std::uint64_t dataset_fingerprint = 0;
    std::string code_version;
    std::string started_at;  // ISO-8601 UTC
    std::string finished_at; // filled by finalize()

    void write(const std::string& path) const;
};

std::string iso8601_now();

/// step,epoch,loss,... rows with full double precision.
void write_trace_csv(const TrainTrace& trace, const std::string& path);

/// One JSON object per line; `step` tags the training step.
class NdjsonWriter {
public:
    explicit NdjsonWriter(const std::string& path);
    ~NdjsonWriter();
    NdjsonWriter(const NdjsonWriter&) = delete;
    NdjsonWriter& operator=(const NdjsonWriter&) = delete;

    void write_margin(long step, const MarginReport& report);
    void write_diagnostics(long step, const TheoremDiagnostics& diag);

private:
    struct Impl;
    Impl* impl_;
};

void write_rank_curve_csv(const RankCurve& curve, const std::string& path);
void write_sta_csv(const StaReport& report, const std::string& path,
                   const std::string& vectors_path = "");
void write_homogeneity_csv(const HomogeneityReport& report, const std::string& path);
void write_euler_csv(const EulerReport& report, const std::string& path);
void write_diagnostics_json(const TheoremDiagnostics& diag, const std::string& path);

} // namespace diqnn
