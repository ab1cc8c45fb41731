#include "lcslab/manifest.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#ifndef LCSLAB_FIXTURE_DIR
#define LCSLAB_FIXTURE_DIR "fixtures"
#endif

namespace {

constexpr int kExitPass = 0;
constexpr int kExitFail = 1;
constexpr int kExitSchema = 2;
constexpr int kExitIo = 3;

int run(const std::string& path, const std::string& format, const std::string& out_path) {
    lcslab::Manifest m;
    try {
        m = lcslab::parse_manifest(path);
    } catch (const lcslab::IoError& e) {
        std::cerr << "lcslab: " << e.what() << "\n";
        return kExitIo;
    } catch (const lcslab::SchemaError& e) {
        std::cerr << "lcslab: schema error at " << e.what() << "\n";
        return kExitSchema;
    }
    const auto report = lcslab::execute(m);
    const auto fmt = format == "text" ? lcslab::ReportFormat::text : lcslab::ReportFormat::json;
    std::string bytes = lcslab::emit_report(report, fmt);
    if (fmt == lcslab::ReportFormat::json) bytes += "\n";
    if (out_path.empty()) {
        std::cout << bytes;
    } else {
        std::ofstream out(out_path, std::ios::binary);
        out << bytes;
        if (!out) {
            std::cerr << "lcslab: cannot write " << out_path << "\n";
            return kExitIo;
        }
    }
    return report.all_pass() ? kExitPass : kExitFail;
}

int list_fixtures() {
    namespace fs = std::filesystem;
    std::vector<std::string> names;
    std::error_code ec;
    for (const auto& entry : fs::directory_iterator(LCSLAB_FIXTURE_DIR, ec))
        if (entry.path().extension() == ".json") names.push_back(entry.path().string());
    if (ec) {
        std::cerr << "lcslab: cannot list " << LCSLAB_FIXTURE_DIR << ": " << ec.message() << "\n";
        return kExitIo;
    }
    std::sort(names.begin(), names.end());
    for (const auto& n : names) std::cout << n << "\n";
    return kExitPass;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Locally conformally symplectic structures: exact checks and invariants"};
    app.require_subcommand(1);

    std::string manifest, format = "json", out_path;
    auto* run_cmd = app.add_subcommand("run", "Execute the jobs of a manifest and print a report");
    run_cmd->add_option("manifest", manifest, "Manifest file")->required();
    run_cmd->add_option("--format", format, "Report format")->check(CLI::IsMember({"json", "text"}));
    run_cmd->add_option("--out", out_path, "Write the report to this file instead of stdout");

    auto* fixtures_cmd = app.add_subcommand("fixtures", "List the bundled manifests");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitPass : kExitSchema;
    }
    if (*run_cmd) return run(manifest, format, out_path);
    if (*fixtures_cmd) return list_fixtures();
    return kExitPass;
}
