#ifndef WAVEGRF_EXPERIMENTS_HPP
#define WAVEGRF_EXPERIMENTS_HPP

//
// Run configuration and the experiment pipelines behind the command line
// tool. Every pipeline is a function of the configuration alone (including
// its seed).
//

#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "assembly.hpp"
#include "compression.hpp"
#include "error.hpp"
#include "io.hpp"
#include "kernel.hpp"
#include "kriging.hpp"
#include "manifold.hpp"
#include "mlmc.hpp"
#include "mra.hpp"
#include "sampler.hpp"
#include "spectral.hpp"

namespace wavegrf {

struct RunConfig
{
    std::string curve = "paper-boundary"; // or "circle"
    double radius = 1.0;
    bool unit_diameter = true;

    std::string kernel = "matern12";
    double ell = 1.0;
    double variance = 1.0;

    int d = 2;
    int dt = 6;
    int j0 = -1; // -1: default for the pair
    int J_min = 5;
    int J_max = 10;

    double a = 2.0;
    double a_prime = 2.0;
    double d_prime = std::numeric_limits<double>::quiet_NaN(); // NaN: d + (dt - d + r)/4
    std::string distance = "parameter";
    std::string measure = "parameter";
    int quadrature_points = 8;

    std::uint64_t seed = 1;
    std::string out = "out";
    int threads = 0;

    int cond_max_J = 10;          // dense condition numbers up to this level
    std::vector<double> ell_list{0.125, 0.25, 0.5, 1.0, 2.0, 4.0};
    int K = 0;                    // contour nodes; 0 chooses from tolerance
    double sqrt_tol = 1e-12;
    int K_max = 60;
    int samples = 1;
    int grid_extra = 2;           // field grid level J + grid_extra
    int runs = 10;
    long M_finest = 100;
    double alpha = 0.5;
    double alpha0 = 2.0;
    int observations = 32;
    double width_cells = 4.0;
    double noise = 1e-2;
    std::string obs_file;
    double cg_tol = 1e-10;

    nlohmann::ordered_json to_json() const
    {
        nlohmann::ordered_json j;
        j["curve"] = curve;
        j["radius"] = radius;
        j["unit_diameter"] = unit_diameter;
        j["kernel"] = kernel;
        j["ell"] = ell;
        j["variance"] = variance;
        j["d"] = d;
        j["dt"] = dt;
        j["j0"] = j0;
        j["J_min"] = J_min;
        j["J_max"] = J_max;
        j["a"] = a;
        j["a_prime"] = a_prime;
        j["d_prime"] = std::isnan(d_prime) ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(d_prime);
        j["distance"] = distance;
        j["measure"] = measure;
        j["quadrature_points"] = quadrature_points;
        j["seed"] = seed;
        j["cond_max_J"] = cond_max_J;
        j["ell_list"] = ell_list;
        j["K"] = K;
        j["sqrt_tol"] = sqrt_tol;
        j["K_max"] = K_max;
        j["samples"] = samples;
        j["grid_extra"] = grid_extra;
        j["runs"] = runs;
        j["M_finest"] = M_finest;
        j["alpha"] = alpha;
        j["alpha0"] = alpha0;
        j["observations"] = observations;
        j["width_cells"] = width_cells;
        j["noise"] = noise;
        j["obs_file"] = obs_file;
        j["cg_tol"] = cg_tol;
        return j;
    }

    /// Hash of the settings that influence results (not out or threads).
    std::string hash() const { return fnv1a_hex(to_json().dump()); }
};

inline UnitParametrization make_curve(const RunConfig& c)
{
    CurveSpec spec;
    if (c.curve == "paper-boundary")
        spec = CurveSpec::paper_boundary();
    else if (c.curve == "circle")
        spec = CurveSpec::circle(c.radius);
    else
        throw ConfigError("unknown curve '" + c.curve + "' (expected paper-boundary or circle)");
    validate(spec);
    if (c.unit_diameter)
        spec = normalize_to_unit_diameter(spec);
    return UnitParametrization(spec);
}

inline KernelSpec make_kernel(const RunConfig& c)
{
    KernelSpec k;
    k.nu = parse_kernel_id(c.kernel);
    k.ell = c.ell;
    k.sigma2 = c.variance;
    validate(k);
    return k;
}

inline WaveletSystem make_system(const RunConfig& c)
{
    return c.j0 < 0 ? WaveletSystem::with_default_level(c.d, c.dt) : WaveletSystem(c.d, c.dt, c.j0);
}

inline QuadratureRule make_quadrature(const RunConfig& c)
{
    QuadratureRule q;
    q.q = c.quadrature_points;
    q.weight_exponent = weight_exponent(parse_measure(c.measure));
    return q;
}

inline CompressionParams make_compression(const RunConfig& c, double r)
{
    auto p = CompressionParams::defaults(c.d, c.dt, r);
    p.a = c.a;
    p.a_prime = c.a_prime;
    if (!std::isnan(c.d_prime))
        p.d_prime = c.d_prime;
    validate(p);
    return p;
}

/// All checks that do not need any computation.
inline void validate(const RunConfig& c)
{
    make_kernel(c);
    const auto sys = make_system(c);
    if (c.J_min < sys.j0() || c.J_max < c.J_min)
        throw ConfigError("need j0 <= J_min <= J_max");
    if (c.J_max > 20)
        throw ConfigError("J_max above 20 is not supported");
    make_compression(c, operator_order(make_kernel(c), 1).r);
    parse_distance_mode(c.distance);
    parse_measure(c.measure);
    if (c.curve != "paper-boundary" && c.curve != "circle")
        throw ConfigError("unknown curve '" + c.curve + "' (expected paper-boundary or circle)");
    if (!(c.radius > 0.0))
        throw ConfigError("circle radius must be positive");
    if (c.quadrature_points < 2 || c.quadrature_points > 32)
        throw ConfigError("quadrature points must lie in [2, 32]");
    if (c.K < 0 || c.K_max < 1)
        throw ConfigError("contour node counts must be positive");
    if (!(c.sqrt_tol > 0.0) || !(c.cg_tol > 0.0))
        throw ConfigError("tolerances must be positive");
    if (c.samples < 1 || c.runs < 1 || c.M_finest < 1)
        throw ConfigError("sample and run counts must be positive");
    if (c.grid_extra < 0 || c.grid_extra > 8)
        throw ConfigError("grid_extra must lie in [0, 8]");
    if (c.observations < 1 || !(c.width_cells >= 1.0))
        throw ConfigError("need at least one observation of width >= 1 cell");
    if (!(c.noise > 0.0))
        throw ConfigError("kriging noise variance must be positive");
    if (c.threads < 0)
        throw ConfigError("thread count must be non-negative");
    for (double l : c.ell_list)
        if (!(l > 0.0))
            throw ConfigError("correlation lengths must be positive");
}

inline double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

/// Covariance matrix in wavelet coordinates with everything derived from it.
struct CovarianceSetup
{
    WaveletSystem sys;
    LevelIndexSet idx;
    KernelSpec kernel;
    OperatorOrder order;
    CompressionParams params;
    Matrix single_scale; // A_p
    Matrix C;            // wavelet coordinates
    TaperPattern pattern;
    SparseSymMatrix Ceps;
};

inline CovarianceSetup make_covariance(const RunConfig& c, int J, bool dense = true)
{
    auto sys = make_system(c);
    auto idx = sys.index_set(J);
    const auto kernel = make_kernel(c);
    const auto order = operator_order(kernel, 1);
    const auto params = make_compression(c, order.r);
    const auto curve = make_curve(c);
    auto pattern = build_pattern(sys, curve, params, J, parse_distance_mode(c.distance));
    Matrix A, C;
    SparseSymMatrix Ceps;
    if (dense) {
        A = assemble_single_scale(curve, kernel, J, make_quadrature(c));
        C = to_wavelet_coordinates(sys, A);
        Ceps = apply_pattern(C, pattern);
    }
    return {std::move(sys), std::move(idx), kernel, order, params, std::move(A), std::move(C), std::move(pattern),
            std::move(Ceps)};
}

/// ||A||_2 of a symmetric matrix.
inline double sym_norm(const Matrix& A)
{
    return A.selfadjointView<Eigen::Lower>().operatorNorm();
}

struct TableRow
{
    int J = 0;
    long p = 0;
    double cond_single = std::nan("");
    double cond_wavelet = std::nan("");
    double cond_tapered = std::nan("");
    double min_eig_tapered = std::nan("");
    long nnz = 0;
    double nnz_fraction = 0.0;
};

inline std::vector<TableRow> run_tables(const RunConfig& c)
{
    std::vector<TableRow> rows;
    for (int J = c.J_min; J <= c.J_max; ++J) {
        const bool dense = J <= c.cond_max_J;
        const auto s = make_covariance(c, J, dense);
        TableRow r;
        r.J = J;
        r.p = s.idx.size();
        r.nnz = s.pattern.nnz();
        r.nnz_fraction = s.pattern.nnz_fraction();
        if (dense) {
            const auto D = diag_scaling(s.idx, s.order.ra);
            r.cond_single = condition_number(s.single_scale);
            r.cond_wavelet = condition_number(precondition(s.C, D));
            const auto orc = dense_oracle(precondition(s.Ceps.to_dense(), D));
            r.cond_tapered = orc.eigenvalues(orc.eigenvalues.size() - 1) / orc.eigenvalues(0);
            Eigen::SelfAdjointEigenSolver<Matrix> es(s.Ceps.to_dense(), Eigen::EigenvaluesOnly);
            r.min_eig_tapered = es.eigenvalues()(0);
        }
        rows.push_back(r);
    }
    return rows;
}

struct DecayResult
{
    int J = 0;
    std::vector<int> flat;           // indices
    std::vector<int> level;          // level label per index
    std::vector<double> diagonal;    // (C_psi)_{lambda, lambda}
    std::vector<int> mean_level;     // wavelet levels
    std::vector<double> mean;        // per-level mean of the diagonal
    std::vector<double> ratio;       // mean_{j} / mean_{j+1}
    double r_hat = std::nan("");     // slope of log2 mean against level
};

inline DecayResult run_decay(const RunConfig& c)
{
    const auto sys = make_system(c);
    const int J = c.J_max;
    const auto curve = make_curve(c);
    const auto kernel = make_kernel(c);
    CompressedAssembler<KernelSpec> asmb(curve, kernel, sys, J, make_quadrature(c));
    const auto& idx = asmb.index_set();
    DecayResult r;
    r.J = J;
    for (int i = 0; i < idx.size(); ++i) {
        r.flat.push_back(i);
        r.level.push_back(idx.level(idx.block_of(i)));
        r.diagonal.push_back(asmb.entry(i, i));
    }
    for (int b = 1; b < idx.num_blocks(); ++b) {
        double m = 0.0;
        for (int k = 0; k < idx.block_size(b); ++k)
            m += r.diagonal[static_cast<std::size_t>(idx.flatten(b, k))];
        r.mean_level.push_back(idx.level(b));
        r.mean.push_back(m / idx.block_size(b));
    }
    for (std::size_t i = 0; i + 1 < r.mean.size(); ++i)
        r.ratio.push_back(r.mean[i] / r.mean[i + 1]);
    if (r.mean.size() >= 2) {
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        const double n = double(r.mean.size());
        for (std::size_t i = 0; i < r.mean.size(); ++i) {
            const double x = r.mean_level[i], y = std::log2(r.mean[i]);
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
        }
        r.r_hat = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    }
    return r;
}

struct CorrlenRow
{
    double ell = 0.0;
    double cond_single = 0.0;
    double cond_wavelet = 0.0;
    double cond_tapered = 0.0;
};

/// Condition numbers at level J_max for each correlation length.
inline std::vector<CorrlenRow> run_corrlen(RunConfig c)
{
    std::vector<CorrlenRow> rows;
    for (double ell : c.ell_list) {
        c.ell = ell;
        const auto s = make_covariance(c, c.J_max);
        const auto D = diag_scaling(s.idx, s.order.ra);
        CorrlenRow r;
        r.ell = ell;
        r.cond_single = condition_number(s.single_scale);
        r.cond_wavelet = condition_number(precondition(s.C, D));
        r.cond_tapered = condition_number(precondition(s.Ceps.to_dense(), D));
        rows.push_back(r);
    }
    return rows;
}

struct SqrtBenchRow
{
    int K = 0;
    double exact = 0.0; // relative 2-norm error with the true bounds
    double over = 0.0;  // condition number overestimated twofold (c- halved)
    double under = 0.0; // condition number underestimated twofold (c- doubled)
};

struct SqrtBench
{
    int J = 0;
    SpectralBounds bounds;
    std::vector<SqrtBenchRow> rows;
};

/// Error of S_K against the dense square root of R = D^{ra} C^eps D^{ra}
/// at level J_max, K = 1..K_max.
inline SqrtBench run_sqrt_bench(const RunConfig& c)
{
    const auto s = make_covariance(c, c.J_max);
    const auto D = diag_scaling(s.idx, s.order.ra);
    const auto orc = dense_oracle(precondition(s.Ceps.to_dense(), D));
    const Matrix S = orc.sqrt();
    const double nS = sym_norm(S);
    SqrtBench out;
    out.J = c.J_max;
    out.bounds = orc.bounds();
    const SpectralBounds over{out.bounds.lambda_min / 2, out.bounds.lambda_max, "overestimated", 0.0};
    const SpectralBounds under{out.bounds.lambda_min * 2, out.bounds.lambda_max, "underestimated", 0.0};
    auto err = [&](const SpectralBounds& b, int K) {
        return sym_norm(contour_matrix(orc, build_contour(b, K)) - S) / nS;
    };
    for (int K = 1; K <= c.K_max; ++K)
        out.rows.push_back({K, err(out.bounds, K), err(over, K), err(under, K)});
    return out;
}

/// Spectral bounds of R: dense for p <= 2048, Lanczos (widened by 5%) above.
inline SpectralBounds sampler_bounds(const SparseSymMatrix& R, std::uint64_t seed)
{
    if (R.size() <= 2048)
        return dense_oracle(R.to_dense()).bounds();
    return lanczos_extremes(R.as_operator(), R.size(), 1e-6, seed).widened(0.05);
}

struct SampleRun
{
    CovarianceSetup setup;
    ContourQuadrature contour;
    Matrix coefficients; // one column per sample
    Matrix field;        // grid points x samples
    int grid_level = 0;
};

inline SampleRun run_sample(const RunConfig& c)
{
    SampleRun out{make_covariance(c, c.J_max), {}, {}, {}, 0};
    const auto& s = out.setup;
    const auto D = diag_scaling(s.idx, s.order.ra);
    const auto bounds = sampler_bounds(precondition(s.Ceps, D), c.seed);
    const int K = c.K > 0 ? c.K : choose_nodes(bounds, c.sqrt_tol, c.K_max);
    out.contour = build_contour(bounds, K);
    GrfSampler sampler(s.idx, s.Ceps, s.order.ra, out.contour, c.seed);
    out.coefficients = sampler.draw_batch(0, c.samples);
    out.grid_level = c.J_max + c.grid_extra;
    const auto curve = make_curve(c);
    const double e = weight_exponent(parse_measure(c.measure));
    out.field.resize(Eigen::Index{1} << out.grid_level, c.samples);
    for (int n = 0; n < c.samples; ++n)
        out.field.col(n) = synthesize_field(s.sys, out.coefficients.col(n), out.grid_level, curve, e);
    return out;
}

struct MlmcRow
{
    int J = 0;
    long p = 0;
    double error = 0.0;          // mean over runs of ||C - C_mlmc||_2
    double relative_error = 0.0; // mean over runs
    double error_sd = 0.0;       // sample standard deviation of the error over runs
    double work = 0.0;           // sum over blocks of samples times length
    std::vector<long> samples;   // M_j, j = j0..finest label
};

inline std::vector<MlmcRow> run_mlmc(const RunConfig& c)
{
    std::vector<MlmcRow> rows;
    for (int J = c.J_min; J <= c.J_max; ++J) {
        const auto s = make_covariance(c, J);
        const auto sched = schedule(s.idx.level(0), s.idx.finest_level(), 1, c.alpha, c.alpha0, c.M_finest);
        MlmcRow r;
        r.J = J;
        r.p = s.idx.size();
        r.samples = sched.M;
        CholeskySource src(s.C, c.seed);
        double sq = 0.0;
        for (int run = 0; run < c.runs; ++run) {
            const std::uint64_t seed = c.seed + static_cast<std::uint64_t>(run);
            src.reseed(seed);
            const auto est = estimate(s.pattern, sched, src, seed);
            const auto rep = error_report(est.matrix, s.C, s.idx, 0.0, 0.0);
            r.error += rep.op_norm_error / c.runs;
            r.relative_error += rep.relative_error / c.runs;
            sq += rep.op_norm_error * rep.op_norm_error;
            r.work = est.work;
        }
        if (c.runs > 1)
            r.error_sd = std::sqrt(std::max(0.0, (sq - c.runs * r.error * r.error) / (c.runs - 1.0)));
        rows.push_back(r);
    }
    return rows;
}

struct KrigeRun
{
    CovarianceSetup setup;
    ObservationSet obs;
    ObservationMatrix G;
    KrigingResult result;
    GramSpectrum gram;
    std::vector<double> targets;
    Vector prediction;
    Vector truth_field; // synthetic data only: the sample the data came from
    bool synthetic = false;
};

/// Observations from obs_file, or synthetic: equispaced boxes of width_cells
/// fine cells observing one GRF sample plus noise.
inline KrigeRun run_krige(const RunConfig& c)
{
    KrigeRun out{make_covariance(c, c.J_max), {}, {}, {}, {}, {}, {}, {}, false};
    auto& s = out.setup;
    const int J = c.J_max;
    const auto curve = make_curve(c);
    const double e = weight_exponent(parse_measure(c.measure));
    const long p = s.idx.size();
    for (long i = 0; i < 4 * p; ++i)
        out.targets.push_back(double(i) / double(4 * p));
    if (!c.obs_file.empty()) {
        out.obs = read_observation_csv(c.obs_file, c.noise);
        out.G = build_observation_matrix(s.sys, out.obs, J, &curve, e);
    } else {
        out.synthetic = true;
        out.obs = equispaced_observations(c.observations, c.width_cells / double(p), c.noise);
        out.G = build_observation_matrix(s.sys, out.obs, J, &curve, e);
        const auto D = diag_scaling(s.idx, s.order.ra);
        const auto bounds = sampler_bounds(precondition(s.Ceps, D), c.seed);
        const int K = c.K > 0 ? c.K : choose_nodes(bounds, c.sqrt_tol, c.K_max);
        GrfSampler sampler(s.idx, s.Ceps, s.order.ra, build_contour(bounds, K), c.seed);
        const Vector z = sampler.draw_batch(0, 1).col(0);
        const NormalStream noise(c.seed, 0x4E4F495345ULL);
        const Vector y = out.G.wavelet * z + std::sqrt(c.noise) * noise.vector(0, out.obs.size());
        for (int i = 0; i < out.obs.size(); ++i)
            out.obs.values[static_cast<std::size_t>(i)] = y[i];
        out.truth_field = predict_at(s.sys, z, out.targets, &curve, e);
    }
    const Vector y = Eigen::Map<const Vector>(out.obs.values.data(), out.obs.size());
    out.result = posterior_mean(s.sys, s.Ceps, out.G, y, c.noise, c.cg_tol);
    if (out.obs.size() <= 2048)
        out.gram = gram_condition(s.Ceps, out.G, c.noise);
    out.prediction = predict_at(s.sys, out.result.mu, out.targets, &curve, e);
    return out;
}

} // namespace wavegrf

#endif
