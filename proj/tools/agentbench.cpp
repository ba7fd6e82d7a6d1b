#include "agentbench/cli.hpp"
#include "agentbench/host.hpp"
#include "agentbench/manifest.hpp"
#include "agentbench/registry.hpp"
#include "agentbench/tokenizer.hpp"
#include "agentbench/usage.hpp"

#include <CLI11.hpp>

#include <iostream>

using namespace agentbench;

int main(int argc, char** argv)
{
    CLI::App app{"Agent evaluation gateway: run task suites against tool servers and report scaling metrics"};
    app.require_subcommand(1);

    RunConfig run;
    std::string mode = "single";
    std::string grid;
    std::optional<std::size_t> compress;
    bool minimal = false;
    auto* run_cmd = app.add_subcommand("run", "Run a task suite and write trajectory logs");
    run_cmd->add_option("--servers", run.servers, "Server manifest (JSON)")->required();
    run_cmd->add_option("--tasks", run.tasks, "Task suite (JSONL)")->required();
    run_cmd->add_option("--prices", run.prices, "Price sheet (JSON), recorded for the report step");
    run_cmd->add_option("--mode", mode, "single, parallel or sequential")->capture_default_str();
    run_cmd->add_option("--k", run.k, "Samples per task in parallel mode")->capture_default_str();
    run_cmd->add_option("--grid", grid, "Checkpoint grid for sequential mode, e.g. 8k,16k,32k");
    run_cmd->add_option("--compress-tools", compress, "Compress tool descriptions to this many characters");
    run_cmd->add_flag("--minimal-tools", minimal, "Render the toolset as one line per tool");
    run_cmd->add_option("--temperature", run.temperature)->capture_default_str();
    run_cmd->add_option("--seed", run.seed)->capture_default_str();
    run_cmd->add_option("--out", run.out, "Output directory")->required();
    run_cmd->add_option("--workers", run.workers, "Tasks run concurrently")->capture_default_str();
    run_cmd->add_option("--model", run.model, "Model tag for scripts that do not name one")->capture_default_str();
    run_cmd->add_option("--max-turns", run.max_turns, "Assistant turns per round")->capture_default_str();
    run_cmd->add_option("--context-budget", run.context_budget, "Forced-final threshold in tokens")->capture_default_str();
    run_cmd->add_option("--max-injections", run.max_injections, "Continuations per sequential episode")->capture_default_str();
    run_cmd->add_option("--judge-accuracy", run.judge_accuracy, "Agreement rate of the simulated self-judge")
        ->capture_default_str();

    ReportConfig report;
    auto* report_cmd = app.add_subcommand("report", "Summarize run artifacts as CSV tables");
    report_cmd->add_option("log_dir", report.log_dir, "Directory written by `run`")->required();
    report_cmd->add_option("--out", report.out, "Output directory (default: <log_dir>/report)");
    report_cmd->add_option("--prices", report.prices, "Price sheet (default: the one recorded by `run`)");
    report_cmd->add_option("--scores", report.scores, "Published scores CSV (model,domain,setting,score)");

    std::filesystem::path registry_servers;
    std::string registry_mode = "full";
    std::size_t registry_target = 120;
    auto* registry_cmd = app.add_subcommand("registry", "Connect to servers and print the rendered toolset");
    registry_cmd->add_option("--servers", registry_servers, "Server manifest (JSON)")->required();
    registry_cmd->add_option("--mode", registry_mode, "full, compressed or minimal")->capture_default_str();
    registry_cmd->add_option("--compress-tools", registry_target)->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitBadConfig;
    }

    if (*run_cmd) {
        try {
            run.mode = run_mode_from_string(mode);
            if (!grid.empty())
                run.grid = parse_grid(grid);
            if (minimal && compress)
                throw InvalidConfig("--minimal-tools and --compress-tools are exclusive");
            if (minimal)
                run.toolset_mode = ToolsetMode::minimal;
            if (compress) {
                run.toolset_mode = ToolsetMode::compressed;
                run.compress_target = *compress;
            }
        } catch (const std::exception& e) {
            std::cerr << "agentbench run: " << e.what() << '\n';
            return kExitBadConfig;
        }
        return cmd_run(run, std::cerr);
    }
    if (*report_cmd)
        return cmd_report(report, std::cerr);

    try {
        const auto manifests = load_manifests(registry_servers);
        const auto mode_value = toolset_mode_from_string(registry_mode);
        auto host = Host::broadcast_connect(manifests);
        const auto text = render_toolset(host->registry(), mode_value, registry_target);
        std::cout << text;
        if (!text.empty() && text.back() != '\n')
            std::cout << '\n';
        std::cerr << host->registry().size() << " tools, " << text.size() << " bytes, ~"
                  << default_tokenizer().count(text) << " tokens\n";
        host->shutdown();
    } catch (const ConnectFailed& e) {
        std::cerr << "agentbench registry: " << e.what() << '\n';
        return kExitConnectAbort;
    } catch (const std::exception& e) {
        std::cerr << "agentbench registry: " << e.what() << '\n';
        return kExitBadConfig;
    }
    return kExitOk;
}
