// Scenario runner and metrics exporter for the proof-of-inference
// simulator. Subcommands:
//   baseline            fixed correctness mix (13 valid / 16 invalid cases)
//   combined            baseline plus 1000-record / 1000-hub scale pass
//   run <scenario.json> full multi-node simulation of a scenario file
//
// Outputs metrics.json, latency.json (suites), consensus.jsonl,
// harness.jsonl, and trace.jsonl (with --trace) under --out. Exit code 0
// iff every scenario assertion holds.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <poi/scenario.hpp>
#include <poi/suite.hpp>

namespace fs = std::filesystem;
using namespace poi;

namespace {

void write_file(const fs::path& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << contents;
}

void write_lines(const fs::path& path, const std::vector<std::string>& lines) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    for (const std::string& line : lines) out << line << "\n";
}

int finish_run(const MetricsReport& report, const RunOutput* run, const LatencyRecorder* latency,
               const std::string& out_dir, bool write_trace) {
    fs::create_directories(out_dir);
    fs::path dir(out_dir);
    write_file(dir / "metrics.json", report.to_json().dump(2) + "\n");
    if (latency && !latency->empty())
        write_file(dir / "latency.json", latency->summary().dump(2) + "\n");
    write_lines(dir / "consensus.jsonl", run ? run->consensus_log : std::vector<std::string>{});
    write_lines(dir / "harness.jsonl", run ? run->harness_log : std::vector<std::string>{});
    if (write_trace)
        write_lines(dir / "trace.jsonl", run ? run->trace_log : std::vector<std::string>{});

    std::cout << report.name << ": " << report.valid_cases << " valid / "
              << report.invalid_cases << " invalid cases, detection "
              << report.detection_rate() * 100.0 << "%, false positives "
              << report.false_positive_rate() * 100.0 << "%, blocks "
              << report.committed_blocks << ", chain "
              << (report.chain_valid ? "valid" : "INVALID") << "\n"
              << "wrote " << (dir / "metrics.json").string() << "\n";
    if (!report.ok()) {
        std::cout << "FAILED: scenario assertions did not hold\n";
        return 1;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"proof-of-inference blockchain simulator"};
    app.require_subcommand(1);

    std::string out_dir = "out";
    uint64_t seed = 0;
    bool trace = false;
    app.add_option("--out", out_dir, "output directory")->capture_default_str();
    app.add_option("--seed", seed, "override the scenario seed");
    app.add_flag("--trace", trace, "write per-delivery trace.jsonl");

    auto* baseline = app.add_subcommand("baseline", "fixed correctness case mix");
    auto* combined = app.add_subcommand("combined", "baseline plus scale evaluation");
    auto* run_cmd = app.add_subcommand("run", "run a scenario file");
    for (auto* sub : {baseline, combined, run_cmd}) sub->fallthrough();
    std::string scenario_path;
    run_cmd->add_option("scenario", scenario_path, "scenario JSON file")
        ->required()
        ->check(CLI::ExistingFile);

    CLI11_PARSE(app, argc, argv);

    if (baseline->parsed() || combined->parsed()) {
        LatencyRecorder latency;
        uint64_t suite_seed = seed != 0 ? seed : 7;
        SuiteRun suite = combined->parsed() ? run_combined_suite(suite_seed, &latency)
                                            : run_baseline_suite(suite_seed, &latency);
        return finish_run(suite.report, nullptr, &latency, out_dir, trace);
    }

    std::ifstream in(scenario_path);
    Json j;
    try {
        j = Json::parse(in);
    } catch (const Json::exception& e) {
        std::cerr << "cannot parse " << scenario_path << ": " << e.what() << "\n";
        return 2;
    }
    auto parsed = scenario_from_json(j);
    if (!parsed.ok()) {
        std::cerr << "invalid scenario: " << parsed.error() << "\n";
        return 2;
    }
    Scenario sc = parsed.value();
    if (seed != 0) sc.net.seed = seed;

    auto out = run_scenario(sc, trace);
    if (!out.ok()) {
        std::cerr << "invalid scenario: " << out.error() << "\n";
        return 2;
    }
    return finish_run(out.value().report, &out.value(), nullptr, out_dir, trace);
}
