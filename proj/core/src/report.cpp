#include "diqnn/report.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>

#include <json.hpp>

#include "diqnn/error.hpp"

namespace diqnn {

using nlohmann::json;

std::string iso8601_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void RunManifest::write(const std::string& path) const {
    json j;
    j["command"] = command;
    j["config"] = config;
    j["seed"] = seed;
    j["dataset_fingerprint"] = dataset_fingerprint;
    j["code_version"] = code_version;
    j["started_at"] = started_at;
    if (!finished_at.empty()) j["finished_at"] = finished_at;
    std::ofstream out(path);
    if (!out) throw FormatError("manifest: cannot open for writing: " + path);
    out << j.dump(2) << "\n";
}

void write_trace_csv(const TrainTrace& trace, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw FormatError("trace: cannot open for writing: " + path);
    out << TrainTrace::csv_header() << "\n";
    char buf[512];
    for (const TraceRecord& r : trace.records) {
        std::snprintf(buf, sizeof buf, "%ld,%ld,%.17g,%.17g,%.17g,%.17g,%.17g,%.3f\n",
                      r.step, r.epoch, r.loss, r.train_acc, r.test_acc, r.delta_mu,
                      r.theta_norm, r.wall_ms);
        out << buf;
    }
}

struct NdjsonWriter::Impl {
    std::ofstream out;
};

NdjsonWriter::NdjsonWriter(const std::string& path) : impl_(new Impl) {
    impl_->out.open(path);
    if (!impl_->out) {
        delete impl_;
        throw FormatError("ndjson: cannot open for writing: " + path);
    }
}

NdjsonWriter::~NdjsonWriter() { delete impl_; }

void NdjsonWriter::write_margin(long step, const MarginReport& report) {
    json j;
    j["step"] = step;
    j["delta_mu"] = report.delta_mu;
    j["mu1"] = report.mu1;
    j["mu2"] = report.mu2;
    j["theta_norm"] = report.theta_norm;
    j["degenerate_count"] = report.degenerate_count;
    impl_->out << j.dump() << "\n";
}

namespace {

json diagnostics_json(const TheoremDiagnostics& diag) {
    json j;
    j["epsilon_sep"] = std::isinf(diag.epsilon_sep) ? json("inf") : json(diag.epsilon_sep);
    j["M"] = diag.M;
    j["cond_c"] = std::isinf(diag.cond_c) ? json("inf") : json(diag.cond_c);
    j["m_cos"] = diag.m_cos;
    j["bound"] = diag.bound;
    j["assumption3_ok"] = diag.assumption3_ok;
    j["degree"] = diag.degree;
    j["gram_dim"] = diag.gram.rows();
    return j;
}

} // namespace

void NdjsonWriter::write_diagnostics(long step, const TheoremDiagnostics& diag) {
    json j = diagnostics_json(diag);
    j["step"] = step;
    impl_->out << j.dump() << "\n";
}

void write_diagnostics_json(const TheoremDiagnostics& diag, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw FormatError("diagnostics: cannot open for writing: " + path);
    out << diagnostics_json(diag).dump(2) << "\n";
}

void write_rank_curve_csv(const RankCurve& curve, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw FormatError("rank curve: cannot open for writing: " + path);
    out << "rank,test_accuracy\n";
    char buf[128];
    for (const auto& p : curve.points) {
        std::snprintf(buf, sizeof buf, "%zu,%.17g\n", p.rank, p.accuracy);
        out << buf;
    }
    std::snprintf(buf, sizeof buf, "full,%.17g\n", curve.full_rank_accuracy);
    out << buf;
}

void write_sta_csv(const StaReport& report, const std::string& path,
                   const std::string& vectors_path) {
    std::ofstream out(path);
    if (!out) throw FormatError("sta: cannot open for writing: " + path);
    out << "class,defined,abs_cosine\n";
    for (const auto& pc : report.classes)
        out << pc.cls << "," << (pc.defined ? 1 : 0) << "," << pc.abs_cosine << "\n";
    if (vectors_path.empty()) return;
    std::ofstream vec(vectors_path);
    if (!vec) throw FormatError("sta: cannot open for writing: " + vectors_path);
    // one row per class: kind (sta / eig), then the raw vector
    for (const auto& pc : report.classes) {
        if (!pc.defined) continue;
        vec << "sta," << pc.cls;
        for (double v : pc.sta) vec << "," << v;
        vec << "\n";
        vec << "eig," << pc.cls;
        for (double v : pc.leading_eigenvector) vec << "," << v;
        vec << "\n";
    }
}

void write_homogeneity_csv(const HomogeneityReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw FormatError("homogeneity: cannot open for writing: " + path);
    out << "scale,rel_error\n";
    char buf[128];
    for (const auto& c : report.cases) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", c.scale, c.rel_error);
        out << buf;
    }
}

void write_euler_csv(const EulerReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw FormatError("euler: cannot open for writing: " + path);
    out << "output,lhs,rhs\n";
    char buf[160];
    for (std::size_t i = 0; i < report.lhs.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g\n", i, report.lhs[i],
                      report.rhs[i]);
        out << buf;
    }
}

} // namespace diqnn
