// ttedopa command line: chain coefficients, runs, export, chain-length estimate.
#include <iostream>

#include "CLI11.hpp"
#include "ttedopa/ttedopa.hpp"

namespace {

using namespace ttedopa;

int cmd_chain(const std::string& sd_path, std::size_t N, const std::optional<double>& beta, std::size_t quad_points,
              const std::string& out) {
    const auto J = load_spectral_density(sd_path);
    const auto temp = beta ? TemperatureSpec::inverse(*beta) : TemperatureSpec::zero();
    const auto c = chain_coefficients(J, N, temp, quad_points);
    write_chain_coefficients(out, c);
    std::cout << "wrote " << N << " modes to " << out << " (c0 = " << round_trip(c.c0) << ")\n";
    return 0;
}

int cmd_run(const std::string& config_path, const std::optional<std::string>& out) {
    const auto cfg = load_config(config_path);
    std::optional<std::filesystem::path> dir;
    if (out) dir = *out;
    const auto result = run(cfg, results_dir(cfg, dir));
    std::cout << result.dir.string() << '\n';
    for (const auto& b : result.branches)
        if (!b.ok())
            std::cerr << "error: branch " << cfg.strength_name() << "=" << b.strength << ": "
                      << b.results.manifest.value("error", "") << '\n';
    if (!result.all_ok()) return 1;
    std::cout << "max deviation across " << cfg.strength_name() << ": "
              << round_trip(result.convergence["max_deviation"].get<double>()) << '\n';
    return 0;
}

int cmd_export(const std::string& results, const std::string& what, const std::string& out, const std::string& format) {
    if (format != "csv") throw std::invalid_argument("--format: only csv is supported");
    for (const auto& p : export_results(results, what, out)) std::cout << p.string() << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Chain-mapped open quantum system dynamics with matrix product states"};
    app.require_subcommand(1);

    auto* chain = app.add_subcommand("chain", "Spectral density file -> chain coefficient file");
    std::string sd_path, chain_out;
    std::size_t chain_N = 0, quad_points = 0;
    std::optional<double> chain_beta;
    bool chain_zero = false;
    chain->add_option("--sd", sd_path, "Spectral density file")->required()->check(CLI::ExistingFile);
    chain->add_option("--N", chain_N, "Number of chain modes")->required()->check(CLI::PositiveNumber);
    auto* cb = chain->add_option("--beta", chain_beta, "Inverse temperature");
    chain->add_flag("--zero-t", chain_zero, "Zero temperature (default)")->excludes(cb);
    chain->add_option("--quad-points", quad_points, "Quadrature points per panel (default 10 N)");
    chain->add_option("-o,--out", chain_out, "Output coefficient file")->required();

    auto* runc = app.add_subcommand("run", "Run a simulation config into a results directory");
    std::string config_path;
    std::optional<std::string> run_out;
    runc->add_option("config", config_path, "Config file")->required()->check(CLI::ExistingFile);
    runc->add_option("-o,--out", run_out, "Results directory (default <root>/<name>, root from TTEDOPA_OUTPUT_ROOT)");

    auto* exp = app.add_subcommand("export", "Write observable series of a results directory as CSV");
    std::string results_path, what = "all", export_out, format = "csv";
    exp->add_option("results", results_path, "Results directory")->required();
    exp->add_option("--what", what, "Series name or 'all'");
    exp->add_option("--out", export_out, "Output directory")->required();
    exp->add_option("--format", format, "Output format (csv)");

    auto* est = app.add_subcommand("estimate-n", "Chain length from the propagation-speed rule of thumb");
    double tfinal = 0.0, omegac = 0.0;
    std::optional<double> est_beta;
    bool est_zero = false;
    est->add_option("--tfinal", tfinal, "Final time")->required();
    est->add_option("--omegac", omegac, "Cutoff frequency")->required();
    auto* eb = est->add_option("--beta", est_beta, "Inverse temperature");
    est->add_flag("--zero-t", est_zero, "Zero temperature")->excludes(eb);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*chain) return cmd_chain(sd_path, chain_N, chain_beta, quad_points, chain_out);
        if (*runc) return cmd_run(config_path, run_out);
        if (*exp) return cmd_export(results_path, what, export_out, format);
        if (*est) {
            if (!est_zero && !est_beta) throw std::invalid_argument("estimate-n: give --zero-t or --beta");
            const auto temp = est_beta ? TemperatureSpec::inverse(*est_beta) : TemperatureSpec::zero();
            std::cout << find_chain_length(tfinal, omegac, temp) << '\n';
            return 0;
        }
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const ResultsError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return 2;
    }
    return 2;
}
