// wavegrf: experiment runner for Gaussian random fields on closed curves in
// wavelet coordinates. See README.md for the subcommands and outputs.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <CLI11.hpp>

#include <wavegrf/experiments.hpp>

namespace fs = std::filesystem;
using namespace wavegrf;

namespace {

OutputMeta meta_for(const RunConfig& c, const std::string& command)
{
    OutputMeta m;
    m.command = command;
    m.config_hash = c.hash();
    m.seed = c.seed;
    m.set("curve", c.curve)
        .set("kernel_domain", c.unit_diameter ? "unit-diameter" : "unscaled")
        .set("kernel", c.kernel)
        .set("ell", c.ell)
        .set("wavelet", std::to_string(c.d) + "," + std::to_string(c.dt))
        .set("measure", c.measure)
        .set("distance", c.distance);
    return m;
}

void write_sidecar(const RunConfig& c, const std::string& name, const OutputMeta& meta,
                   nlohmann::ordered_json extra = {})
{
    nlohmann::ordered_json j;
    j["meta"] = meta.to_json();
    j["config"] = c.to_json();
    if (!extra.is_null())
        j["results"] = std::move(extra);
    write_json(fs::path(c.out) / (name + ".json"), j);
}

std::string num(double v) { return format_number(v); }

void cmd_tables(const RunConfig& c)
{
    const auto rows = run_tables(c);
    const auto meta = meta_for(c, "tables");
    CsvWriter w(fs::path(c.out) / "tables.csv", meta,
                {"J", "p", "cond_single_scale", "cond_wavelet", "cond_tapered", "min_eig_tapered", "nnz",
                 "nnz_percent"});
    for (const auto& r : rows)
        w.row({std::to_string(r.J), std::to_string(r.p), num(r.cond_single), num(r.cond_wavelet),
               num(r.cond_tapered), num(r.min_eig_tapered), std::to_string(r.nnz), num(100.0 * r.nnz_fraction)});
    write_sidecar(c, "tables", meta);
}

void cmd_decay(const RunConfig& c)
{
    const auto r = run_decay(c);
    auto meta = meta_for(c, "decay");
    meta.set("J", r.J);
    {
        CsvWriter w(fs::path(c.out) / "decay_diagonal.csv", meta, {"index", "level", "diagonal"});
        for (std::size_t i = 0; i < r.flat.size(); ++i)
            w.row({std::to_string(r.flat[i]), std::to_string(r.level[i]), num(r.diagonal[i])});
    }
    CsvWriter w(fs::path(c.out) / "decay_levels.csv", meta, {"level", "mean_diagonal", "ratio_to_next"});
    for (std::size_t i = 0; i < r.mean.size(); ++i)
        w.row({std::to_string(r.mean_level[i]), num(r.mean[i]), i < r.ratio.size() ? num(r.ratio[i]) : ""});
    nlohmann::ordered_json res;
    res["r_hat"] = r.r_hat;
    write_sidecar(c, "decay", meta, res);
}

void cmd_corrlen(const RunConfig& c)
{
    const auto rows = run_corrlen(c);
    auto meta = meta_for(c, "corrlen");
    meta.set("J", c.J_max);
    CsvWriter w(fs::path(c.out) / "corrlen.csv", meta, {"ell", "cond_single_scale", "cond_wavelet", "cond_tapered"});
    for (const auto& r : rows)
        w.row(std::vector<double>{r.ell, r.cond_single, r.cond_wavelet, r.cond_tapered});
    write_sidecar(c, "corrlen", meta);
}

void cmd_sqrt_bench(const RunConfig& c)
{
    const auto b = run_sqrt_bench(c);
    auto meta = meta_for(c, "sqrt-bench");
    meta.set("J", b.J).set("lambda_min", b.bounds.lambda_min).set("lambda_max", b.bounds.lambda_max);
    CsvWriter w(fs::path(c.out) / "sqrt_bench.csv", meta,
                {"K", "error_exact_bounds", "error_kappa_over_2x", "error_kappa_under_2x"});
    for (const auto& r : b.rows)
        w.row({std::to_string(r.K), num(r.exact), num(r.over), num(r.under)});
    write_sidecar(c, "sqrt_bench", meta);
}

void cmd_sample(const RunConfig& c)
{
    const auto s = run_sample(c);
    auto meta = meta_for(c, "sample");
    meta.set("J", c.J_max)
        .set("K", s.contour.K)
        .set("lambda_min", s.contour.bounds.lambda_min)
        .set("lambda_max", s.contour.bounds.lambda_max)
        .set("kappa_hat", s.contour.bounds.condition())
        .set("a", s.setup.params.a)
        .set("a_prime", s.setup.params.a_prime)
        .set("d_prime", s.setup.params.d_prime);
    {
        std::vector<std::string> cols{"sample"};
        for (Eigen::Index i = 0; i < s.coefficients.rows(); ++i)
            cols.push_back("z" + std::to_string(i));
        CsvWriter w(fs::path(c.out) / "sample_coefficients.csv", meta, cols);
        for (Eigen::Index n = 0; n < s.coefficients.cols(); ++n) {
            std::vector<std::string> row{std::to_string(n)};
            for (Eigen::Index i = 0; i < s.coefficients.rows(); ++i)
                row.push_back(num(s.coefficients(i, n)));
            w.row(row);
        }
    }
    std::vector<std::string> cols{"t"};
    for (Eigen::Index n = 0; n < s.field.cols(); ++n)
        cols.push_back("sample" + std::to_string(n));
    meta.set("grid_level", s.grid_level);
    CsvWriter w(fs::path(c.out) / "sample_field.csv", meta, cols);
    const double h = std::ldexp(1.0, -s.grid_level);
    for (Eigen::Index i = 0; i < s.field.rows(); ++i) {
        std::vector<std::string> row{num(double(i) * h)};
        for (Eigen::Index n = 0; n < s.field.cols(); ++n)
            row.push_back(num(s.field(i, n)));
        w.row(row);
    }
    write_sidecar(c, "sample", meta);
}

void cmd_mlmc(const RunConfig& c)
{
    const auto rows = run_mlmc(c);
    auto meta = meta_for(c, "mlmc");
    meta.set("runs", c.runs).set("M_finest", static_cast<int>(c.M_finest)).set("alpha", c.alpha);
    CsvWriter w(fs::path(c.out) / "mlmc.csv", meta,
                {"J", "p", "error", "error_sd", "relative_error", "contraction", "work", "samples_per_level"});
    double prev = std::nan("");
    for (const auto& r : rows) {
        std::string samples;
        for (std::size_t i = 0; i < r.samples.size(); ++i)
            samples += (i ? ";" : "") + std::to_string(r.samples[i]);
        w.row({std::to_string(r.J), std::to_string(r.p), num(r.error), num(r.error_sd), num(r.relative_error),
               std::isnan(prev) ? "" : num(prev / r.error), num(r.work), samples});
        prev = r.error;
    }
    write_sidecar(c, "mlmc", meta);
}

void cmd_krige(const RunConfig& c)
{
    const auto k = run_krige(c);
    auto meta = meta_for(c, "krige");
    meta.set("J", c.J_max).set("observations", k.obs.size()).set("noise", c.noise);
    {
        CsvWriter w(fs::path(c.out) / "krige_observations.csv", meta, {"center", "width", "value"});
        for (int i = 0; i < k.obs.size(); ++i)
            w.row(std::vector<double>{k.obs.centers[static_cast<std::size_t>(i)],
                                      k.obs.widths[static_cast<std::size_t>(i)],
                                      k.obs.values[static_cast<std::size_t>(i)]});
    }
    {
        std::vector<std::string> cols{"target", "value"};
        if (k.synthetic)
            cols.push_back("truth");
        CsvWriter w(fs::path(c.out) / "krige_predictions.csv", meta, cols);
        for (std::size_t i = 0; i < k.targets.size(); ++i) {
            std::vector<std::string> row{num(k.targets[i]), num(k.prediction[static_cast<Eigen::Index>(i)])};
            if (k.synthetic)
                row.push_back(num(k.truth_field[static_cast<Eigen::Index>(i)]));
            w.row(row);
        }
    }
    const auto& s = k.setup;
    write_matrix_market(fs::path(c.out) / "krige_G_single_scale.mtx", k.G.single_scale, meta);
    write_matrix_market(fs::path(c.out) / "krige_Ceps.mtx", s.Ceps, meta);
    Matrix T(s.idx.size(), s.idx.size());
    for (int i = 0; i < s.idx.size(); ++i)
        T.col(i) = s.sys.ifwt_dual(Vector::Unit(s.idx.size(), i));
    write_matrix_market(fs::path(c.out) / "krige_dual_transform.mtx", T, meta, 1e-14);
    nlohmann::ordered_json res;
    res["cg_iterations"] = k.result.iterations;
    res["cg_relative_residual"] = k.result.relative_residual;
    res["gram_lambda_min"] = k.gram.lambda_min;
    res["gram_lambda_max"] = k.gram.lambda_max;
    res["gram_condition"] = k.gram.condition();
    res["G_single_scale_nnz"] = k.G.single_scale.nonZeros();
    write_sidecar(c, "krige", meta, res);
}

void cmd_pattern(const RunConfig& c)
{
    const int J = c.J_max;
    const bool dense = J <= c.cond_max_J;
    const auto s = make_covariance(c, J, dense);
    auto meta = meta_for(c, "pattern");
    meta.set("J", J).set("nnz", static_cast<double>(s.pattern.nnz())).set("a", s.params.a)
        .set("a_prime", s.params.a_prime).set("d_prime", s.params.d_prime);
    CsvWriter w(fs::path(c.out) / "pattern_blocks.csv", meta, {"block", "block_prime", "level", "level_prime", "nnz"});
    const auto& idx = s.idx;
    for (int b = 0; b < idx.num_blocks(); ++b)
        for (int bp = 0; bp < idx.num_blocks(); ++bp)
            w.row({std::to_string(b), std::to_string(bp), std::to_string(idx.level(b)), std::to_string(idx.level(bp)),
                   std::to_string(s.pattern.block_nnz(b, bp))});
    if (dense) {
        write_matrix_market(fs::path(c.out) / "pattern.mtx", s.Ceps, meta);
    } else {
        std::vector<double> ones(s.pattern.cols().size(), 1.0);
        write_matrix_market(fs::path(c.out) / "pattern.mtx",
                            SparseSymMatrix(idx.size(), s.pattern.row_ptr(), s.pattern.cols(), ones), meta);
    }
    write_sidecar(c, "pattern", meta);
}

void cmd_filters(const RunConfig& c)
{
    const auto sys = make_system(c);
    auto meta = meta_for(c, "filters-dump");
    meta.set("j0", sys.j0()).set("gamma_t", sys.gamma_t());
    CsvWriter w(fs::path(c.out) / "filters.csv", meta,
                {"k", "primal_low", "dual_low", "primal_high", "dual_high", "dual_low_numerator"});
    const auto& m = sys.primal_low();
    const auto& mt = sys.dual_low();
    const auto& g = sys.primal_high();
    const auto& gt = sys.dual_high();
    const auto& ex = sys.dual_low_exact();
    const int lo = std::min({m.first, mt.first, g.first, gt.first});
    const int hi = std::max({m.last(), mt.last(), g.last(), gt.last()});
    for (int k = lo; k <= hi; ++k) {
        const int e = k - ex.first;
        const std::string numer =
            (e >= 0 && e < static_cast<int>(ex.numer.size())) ? std::to_string(ex.numer[static_cast<std::size_t>(e)])
                                                              : "0";
        w.row({std::to_string(k), num(m[k]), num(mt[k]), num(g[k]), num(gt[k]), numer});
    }
    nlohmann::ordered_json res;
    res["dual_low_log2_denominator"] = ex.log2_denom;
    write_sidecar(c, "filters", meta, res);
}

int fail(const std::string& kind, int code, const std::string& message, const std::string& command,
         const std::string& out)
{
    const auto rec = error_record(kind, code, message, command);
    std::cerr << rec.dump() << '\n';
    try {
        if (!out.empty())
            write_json(fs::path(out) / "error.json", rec);
    } catch (...) {
    }
    return code;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Gaussian random fields on closed curves in wavelet coordinates"};
    app.set_version_flag("--version", std::string(version));
    app.set_config("--config", "", "TOML/INI configuration file");
    app.require_subcommand(1);
    app.fallthrough();

    RunConfig c;
    std::string dprime;
    app.add_option("--curve", c.curve, "paper-boundary or circle")->capture_default_str();
    app.add_option("--radius", c.radius, "circle radius")->capture_default_str();
    app.add_option("--unit-diameter", c.unit_diameter, "evaluate kernels on the unit-diameter curve")
        ->capture_default_str();
    app.add_option("--kernel", c.kernel, "matern12, matern32 or matern52")->capture_default_str();
    app.add_option("--ell", c.ell, "correlation length")->capture_default_str();
    app.add_option("--variance", c.variance, "kernel variance")->capture_default_str();
    app.add_option("--d", c.d, "primal order")->capture_default_str();
    app.add_option("--dt", c.dt, "dual order")->capture_default_str();
    app.add_option("--j0", c.j0, "coarsest level (-1: default)")->capture_default_str();
    app.add_option("--J-min", c.J_min, "smallest J, p = 2^J")->capture_default_str();
    app.add_option("--J-max", c.J_max, "largest J, p = 2^J")->capture_default_str();
    app.add_option("--a", c.a, "tapering constant a")->capture_default_str();
    app.add_option("--a-prime", c.a_prime, "tapering constant a'")->capture_default_str();
    app.add_option("--d-prime", dprime, "tapering exponent d' (default d + (dt - d + r)/4)");
    app.add_option("--distance", c.distance, "parameter or chordal")->capture_default_str();
    app.add_option("--measure", c.measure, "parameter or arclength")->capture_default_str();
    app.add_option("--quadrature-points", c.quadrature_points)->capture_default_str();
    app.add_option("--seed", c.seed, "random seed")->capture_default_str();
    app.add_option("--out", c.out, "output directory")->capture_default_str();
    app.add_option("--threads", c.threads, "OpenMP threads (0: WAVEGRF_THREADS or runtime default)")
        ->capture_default_str();
    app.add_option("--cond-max-J", c.cond_max_J, "dense condition numbers up to this J")->capture_default_str();
    app.add_option("--ell-list", c.ell_list, "correlation lengths for corrlen")->delimiter(',');
    app.add_option("--K", c.K, "contour nodes (0: from --sqrt-tol)")->capture_default_str();
    app.add_option("--sqrt-tol", c.sqrt_tol)->capture_default_str();
    app.add_option("--K-max", c.K_max)->capture_default_str();
    app.add_option("--samples", c.samples)->capture_default_str();
    app.add_option("--grid-extra", c.grid_extra, "field grid level J + grid-extra")->capture_default_str();
    app.add_option("--runs", c.runs, "MLMC runs to average")->capture_default_str();
    app.add_option("--M-finest", c.M_finest, "MLMC samples on the finest level")->capture_default_str();
    app.add_option("--alpha", c.alpha, "MLMC rate alpha")->capture_default_str();
    app.add_option("--observations", c.observations)->capture_default_str();
    app.add_option("--width-cells", c.width_cells, "observation width in fine cells")->capture_default_str();
    app.add_option("--noise", c.noise, "observation noise variance")->capture_default_str();
    app.add_option("--obs-file", c.obs_file, "CSV center,width,value");
    app.add_option("--cg-tol", c.cg_tol)->capture_default_str();

    struct Command
    {
        const char* name;
        const char* help;
        void (*run)(const RunConfig&);
    };
    const Command commands[] = {
        {"tables", "condition numbers and compression rates over J", cmd_tables},
        {"decay", "diagonal entries and per-level means", cmd_decay},
        {"corrlen", "condition numbers over correlation lengths", cmd_corrlen},
        {"sqrt-bench", "square-root error against K", cmd_sqrt_bench},
        {"sample", "draw GRF samples", cmd_sample},
        {"mlmc", "multilevel Monte Carlo covariance estimation", cmd_mlmc},
        {"krige", "kriging posterior mean", cmd_krige},
        {"pattern", "taper pattern dump", cmd_pattern},
        {"filters-dump", "filter coefficients", cmd_filters},
    };
    for (const auto& cmd : commands)
        app.add_subcommand(cmd.name, cmd.help);

    std::string command = "wavegrf";
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return fail("config", 2, e.what(), command, "");
    }

    try {
        if (!dprime.empty())
            c.d_prime = std::stod(dprime);
        int threads = c.threads;
        if (threads == 0)
            if (const char* env = std::getenv("WAVEGRF_THREADS"))
                threads = std::atoi(env);
#ifdef _OPENMP
        if (threads > 0)
            omp_set_num_threads(threads);
#endif
        const auto* sub = app.get_subcommands().front();
        command = sub->get_name();
        validate(c);
        for (const auto& cmd : commands)
            if (command == cmd.name) {
                const auto t0 = std::chrono::steady_clock::now();
                cmd.run(c);
                std::cerr << command << ": done in " << seconds_since(t0) << " s, output in " << c.out << '\n';
            }
    } catch (const ConfigError& e) {
        return fail("config", 2, e.what(), command, c.out);
    } catch (const NumericalError& e) {
        return fail("numerical", 3, e.what(), command, c.out);
    } catch (const std::invalid_argument& e) {
        return fail("config", 2, std::string("bad number: ") + e.what(), command, c.out);
    } catch (const std::exception& e) {
        return fail("internal", 1, e.what(), command, c.out);
    }
    return 0;
}
