// srs: spin-resonance scattering simulator for microwave-pumped,
// electron-probed samples. Subcommands cover angular and position-space
// probability maps, Bloch-vector pulse sweeps, Fisher-information reports,
// shot-noise mask optimization and the electron-induced purity loss.

#include <CLI11.hpp>
#include <json.hpp>

#include <complex>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "srs/analysis.hpp"
#include "srs/backaction.hpp"
#include "srs/bloch.hpp"
#include "srs/diffraction.hpp"
#include "srs/imaging.hpp"
#include "srs/io.hpp"
#include "srs/metrology.hpp"
#include "srs/parallel.hpp"
#include "srs/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace srs;

namespace {

constexpr int exit_config_error = 2;
constexpr int exit_validity_error = 3;

struct config_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct PhysicsOptions {
    std::string preset = "200keV-broad";
    std::optional<double> k_z0, dk_perp, dk_z, z_p, a0, zeeman_mev;

    KernelContext resolve(bool force) const
    {
        PhysConsts pc;
        BeamParams beam;
        SpinParams spin;
        default_params_200keV(pc, beam, spin);
        beam = beam_preset(preset);
        if (k_z0)
            beam.k_z0 = *k_z0;
        if (dk_perp)
            beam.dk_perp = *dk_perp;
        if (dk_z)
            beam.dk_z = *dk_z;
        if (z_p)
            beam.z_p = *z_p;
        if (a0)
            spin.a0 = *a0;
        if (zeeman_mev)
            spin.omega0 = *zeeman_mev * 1e-3 * pc.e_charge / pc.hbar;
        if (force) {
            KernelContext ctx;
            ctx.beam = beam;
            ctx.spin = spin;
            ctx.consts = pc;
            ctx.gamma0 = beam.gamma0(pc);
            ctx.energy0 = beam.energy0(pc);
            ctx.v0 = beam.v0(pc);
            ctx.delta_k = spin.delta_k(pc, ctx.gamma0);
            return ctx;
        }
        return KernelContext(beam, spin, pc);
    }
};

struct CommonOptions {
    std::string out_dir = "srs-out";
    bool force = false;
    bool no_pgm = false;
    std::string complex_format = "absarg"; // or reim
    std::uint64_t seed = 1;
    int threads = 0;
};

void add_physics_options(CLI::App* cmd, PhysicsOptions& p)
{
    cmd->add_option("--preset", p.preset, "beam preset: 200keV-broad|200keV-mid|200keV-narrow")
        ->capture_default_str();
    cmd->add_option("--kz0", p.k_z0, "mean longitudinal wavenumber [1/m]");
    cmd->add_option("--dk-perp", p.dk_perp, "transverse momentum spread [1/m]");
    cmd->add_option("--dk-z", p.dk_z, "longitudinal momentum spread [1/m]");
    cmd->add_option("--zp", p.z_p, "probe defocus at the sample [m]");
    cmd->add_option("--a0", p.a0, "spin smearing radius [m]");
    cmd->add_option("--zeeman-mev", p.zeeman_mev, "Zeeman splitting [meV]");
}

struct Manifest {
    json doc;
    json outputs = json::array();
    json warnings = json::array();

    explicit Manifest(const std::string& subcommand)
    {
        doc["schema_version"] = manifest_schema_version;
        doc["tool_version"] = version_string;
        doc["subcommand"] = subcommand;
    }

    void set_params(const json& params)
    {
        doc["parameters"] = params;
        char buf[20];
        std::snprintf(buf, sizeof buf, "%016llx", (unsigned long long)io::fnv1a64(params.dump()));
        doc["parameter_hash"] = buf;
    }

    void set_context(const KernelContext& ctx)
    {
        json v;
        const OverlapCondition oc = check_overlap_condition(ctx);
        v["longitudinal_overlap_ok"] = oc.ok;
        v["overlap_deflection_ratio"] = oc.deflection_ratio;
        v["overlap_exchange_ratio"] = oc.exchange_ratio;
        v["overlap_worst_case"] = oc.min_overlap;
        doc["validity"] = v;
        if (!oc.ok)
            warn("longitudinal-overlap condition violated; contrast is over-estimated");
        if (ctx.beam.z_p != 0.0)
            warn("probe defocus z_p affects only kernel-level evaluation; "
                 "map generation assumes a probe focused at the sample");
    }

    void add_map_stats(const ProbabilityMap& map, double interp_check = -1.0)
    {
        doc["validity"]["clipped_pixels"] = map.clipped_pixels;
        doc["validity"]["max_negative_fraction"] = map.max_negative_fraction;
        if (interp_check >= 0) {
            doc["validity"]["radial_interpolation_error"] = interp_check;
            if (interp_check > 1e-6)
                warn("radial interpolation check above 1e-6");
        }
    }

    void add_output(const std::string& file, const std::string& kind)
    {
        outputs.push_back({{"file", file}, {"kind", kind}});
    }
    void add_output(const std::string& file, const std::string& kind, const io::PgmWindow& win)
    {
        outputs.push_back({{"file", file}, {"kind", kind}, {"window", {win.lo, win.hi}}});
    }
    void warn(const std::string& msg) { warnings.push_back(msg); }

    void write(const fs::path& dir)
    {
        doc["outputs"] = outputs;
        doc["warnings"] = warnings;
        std::ofstream out(dir / "manifest.json", std::ios::binary);
        out << doc.dump(2) << "\n";
    }
};

json physics_json(const KernelContext& ctx)
{
    return {{"k_z0", ctx.beam.k_z0},
            {"dk_perp", ctx.beam.dk_perp},
            {"dk_z", ctx.beam.dk_z},
            {"z_p", ctx.beam.z_p},
            {"fwhm", ctx.beam.fwhm()},
            {"a0", ctx.spin.a0},
            {"omega0", ctx.spin.omega0},
            {"delta_k", ctx.delta_k},
            {"gamma0", ctx.gamma0},
            {"r_e", ctx.consts.r_e}};
}

fs::path prepare_out_dir(const CommonOptions& common)
{
    fs::path dir = common.out_dir;
    if (const char* env = std::getenv("SRS_OUT_DIR"))
        dir = env;
    fs::create_directories(dir);
    return dir;
}

std::vector<double> parse_list(const std::string& text)
{
    std::vector<double> out;
    std::string token;
    std::istringstream in(text);
    while (std::getline(in, token, ','))
        if (!token.empty()) {
            try {
                std::size_t used = 0;
                out.push_back(std::stod(token, &used));
                if (used != token.size())
                    throw std::invalid_argument(token);
            } catch (const std::exception&) {
                throw config_error("not a number in list: '" + token + "'");
            }
        }
    return out;
}

struct SweepEntry {
    std::string label;
    BlochState state;
    double delta_over_omega0 = 0;
};

std::vector<SweepEntry> resolve_detuning_sweep(const std::string& sweep_arg, double omega0)
{
    const double omega1 = 0.01 * omega0;
    std::vector<double> ratios;
    if (sweep_arg == "table-b1")
        ratios = {0.0, 0.025, 0.05, 0.075};
    else
        ratios = parse_list(sweep_arg);
    if (ratios.empty())
        throw std::invalid_argument("empty detuning list");
    std::vector<double> deltas;
    for (double r : ratios)
        deltas.push_back(r * omega0);
    const auto states = detuning_sweep(deltas, omega1, omega0);
    std::vector<SweepEntry> out;
    for (std::size_t i = 0; i < states.size(); ++i) {
        const char label = (i < 26) ? (char)('a' + i) : 'z';
        out.push_back({std::string(1, label), states[i], ratios[i]});
    }
    return out;
}

void write_map_outputs(Manifest& manifest, const fs::path& dir, const std::string& stem,
                       const ProbabilityMap& map, const std::vector<SweepEntry>& sweep, bool no_pgm)
{
    const std::string map_csv = stem + "_map.csv";
    io::write_map_csv((dir / map_csv).string(), map);
    manifest.add_output(map_csv, "coefficient-map-csv");
    if (!no_pgm) {
        const std::string pgm = stem + "_p0.pgm";
        const auto win = io::write_pgm16((dir / pgm).string(), map.p0, map.grid.n);
        manifest.add_output(pgm, "p0-pgm16", win);
    }
    const BlochState reference = ground_state();
    for (const auto& entry : sweep) {
        const auto diff = differential_map(map, entry.state, reference);
        const std::string label = stem + "_diff_" + entry.label;
        const bool angular = map.grid.space == MapSpace::angular;
        const double unit = angular ? 1e6 : 1e10;
        io::CsvWriter csv((dir / (label + ".csv")).string(),
                          {angular ? "theta_x_urad" : "x_angstrom",
                           angular ? "theta_y_urad" : "y_angstrom", "dp"});
        for (int j = 0; j < map.grid.n; ++j)
            for (int i = 0; i < map.grid.n; ++i)
                csv.row({map.grid.coord(i) * unit, map.grid.coord(j) * unit,
                         diff[(std::size_t)j * map.grid.n + i]});
        manifest.add_output(label + ".csv", "differential-map-csv");
        if (!no_pgm) {
            const auto win = io::write_pgm16((dir / (label + ".pgm")).string(), diff, map.grid.n);
            manifest.add_output(label + ".pgm", "differential-pgm16", win);
        }
    }
}

// ------------------------------------------------------------------ commands

int run_diffraction(const CommonOptions& common, const PhysicsOptions& phys, int grid_n,
                    double theta_max_frac, const std::string& sweep_arg)
{
    const KernelContext ctx = phys.resolve(common.force);
    Manifest manifest("diffraction");
    manifest.set_context(ctx);
    const AngularGrid grid{theta_max_frac * ctx.beam.dk_perp / ctx.beam.k_z0, grid_n};
    double interp_check = 0;
    const ProbabilityMap map = p_diff_map(grid, ctx, {}, &interp_check);
    manifest.add_map_stats(map, interp_check);

    json params = physics_json(ctx);
    params["grid_n"] = grid_n;
    params["theta_max"] = grid.theta_max;
    params["detuning_sweep"] = sweep_arg;
    manifest.set_params(params);

    const auto sweep = sweep_arg.empty() ? std::vector<SweepEntry>{}
                                         : resolve_detuning_sweep(sweep_arg, ctx.spin.omega0);
    const fs::path dir = prepare_out_dir(common);
    write_map_outputs(manifest, dir, "diffraction", map, sweep, common.no_pgm);
    manifest.write(dir);
    return 0;
}

int run_image(const CommonOptions& common, const PhysicsOptions& phys, bool zernike, int grid_n,
              double z_d, double x_max, double k_max, bool no_mask, const std::string& sweep_arg)
{
    const KernelContext ctx = phys.resolve(common.force);
    Manifest manifest(zernike ? "zernike" : "image");
    manifest.set_context(ctx);
    MaskFunction mask;
    if (no_mask)
        mask = MaskFunction::none();
    else
        mask.k_max = k_max;
    const SpatialGrid grid{x_max, grid_n, z_d};
    double interp_check = 0;
    const ProbabilityMap map = p_img_map(grid, ctx, mask, zernike, &interp_check);
    manifest.add_map_stats(map, interp_check);

    json params = physics_json(ctx);
    params["grid_n"] = grid_n;
    params["z_d"] = z_d;
    params["x_max"] = x_max;
    params["mask_k_max"] = no_mask ? 0.0 : k_max;
    params["zernike"] = zernike;
    params["detuning_sweep"] = sweep_arg;
    manifest.set_params(params);

    const auto sweep = sweep_arg.empty() ? std::vector<SweepEntry>{}
                                         : resolve_detuning_sweep(sweep_arg, ctx.spin.omega0);
    const fs::path dir = prepare_out_dir(common);
    write_map_outputs(manifest, dir, zernike ? "zernike" : "image", map, sweep, common.no_pgm);
    manifest.write(dir);
    return 0;
}

int run_coherent(const CommonOptions& common, const PhysicsOptions& phys, int grid_n, double z,
                 double x_max)
{
    const KernelContext ctx = phys.resolve(common.force);
    Manifest manifest("coherent");
    manifest.set_context(ctx);
    const SpatialGrid grid{x_max, grid_n, 0.0};
    const CoherentField field = coherent_wavefunction(grid, z, ctx);

    json params = physics_json(ctx);
    params["grid_n"] = grid_n;
    params["z"] = z;
    params["x_max"] = x_max;
    params["complex_format"] = common.complex_format;
    manifest.set_params(params);
    manifest.doc["validity"]["captured_norm"] = field.captured_norm;
    if (std::fabs(field.captured_norm - 1.0) > 0.05)
        manifest.warn("window captures less than 95% of the coherent amplitude");

    const fs::path dir = prepare_out_dir(common);
    const bool absarg = common.complex_format == "absarg";
    auto dump = [&](const std::string& name, const std::vector<std::complex<double>>& a) {
        io::CsvWriter csv((dir / (name + ".csv")).string(),
                          {"x_angstrom", "y_angstrom", absarg ? "abs" : "re",
                           absarg ? "arg" : "im"});
        for (int j = 0; j < grid_n; ++j)
            for (int i = 0; i < grid_n; ++i) {
                const auto v = a[(std::size_t)j * grid_n + i];
                csv.row({field.grid.coord(i) * 1e10, field.grid.coord(j) * 1e10,
                         absarg ? std::abs(v) : v.real(), absarg ? std::arg(v) : v.imag()});
            }
        manifest.add_output(name + ".csv", "complex-field-csv");
        if (!common.no_pgm) {
            std::vector<double> mag(a.size());
            for (std::size_t k = 0; k < a.size(); ++k)
                mag[k] = std::abs(a[k]);
            const auto win = io::write_pgm16((dir / (name + "_abs.pgm")).string(), mag, grid_n);
            manifest.add_output(name + "_abs.pgm", "amplitude-pgm16", win);
        }
    };
    dump("coherent_psi", field.psi);
    dump("coherent_beta_plus", field.beta_plus);
    dump("coherent_beta_minus", field.beta_minus);
    manifest.write(dir);
    return 0;
}

int run_cfi(const CommonOptions& common, const PhysicsOptions& phys, const std::string& mode,
            int grid_n, double z_d, double x_max, double n_e)
{
    const KernelContext ctx = phys.resolve(common.force);
    Manifest manifest("cfi");
    manifest.set_context(ctx);
    const BlochState on_res{{0.0, 1.0, 0.0}};
    CfiReport rep;
    if (mode == "diffraction") {
        const AngularGrid grid = AngularGrid::full_region(ctx, grid_n);
        const ProbabilityMap map = p_diff_map(grid, ctx);
        manifest.add_map_stats(map);
        rep = cfi(map, on_res, Region::disk(grid.theta_max));
    } else {
        const SpatialGrid grid{x_max, grid_n, z_d};
        double interp_check = 0;
        const ProbabilityMap map = p_img_map(grid, ctx, {}, mode == "zernike", &interp_check);
        manifest.add_map_stats(map, interp_check);
        rep = cfi(map, on_res, Region::square(x_max));
    }
    const SnrBound bound = snr_bound(rep, n_e);

    json params = physics_json(ctx);
    params["mode"] = mode;
    params["grid_n"] = grid_n;
    params["z_d"] = z_d;
    params["x_max"] = x_max;
    params["n_e"] = n_e;
    manifest.set_params(params);

    json report{{"mu_b2_cfi", rep.mu_b2_cfi},
                {"region", rep.region},
                {"detected_fraction", rep.detected_fraction},
                {"snr_bound_per_sqrt_s", rep.snr_bound_per_sqrt_s},
                {"snr_bound_absolute", bound.absolute},
                {"excluded_pixels", rep.excluded_pixels},
                {"current", rep.current}};
    const fs::path dir = prepare_out_dir(common);
    std::ofstream(dir / "cfi.json") << report.dump(2) << "\n";
    manifest.add_output("cfi.json", "cfi-report-json");
    manifest.write(dir);
    std::cout << report.dump(2) << "\n";
    return 0;
}

int run_cfi_sweep(const CommonOptions& common, const PhysicsOptions& phys, const std::string& mode,
                  int grid_n, const std::string& zd_list, const std::string& xmax_list)
{
    const KernelContext ctx = phys.resolve(common.force);
    Manifest manifest("cfi-sweep");
    manifest.set_context(ctx);
    const ImagingMode m = (mode == "diffraction") ? ImagingMode::diffraction
                          : (mode == "zernike")   ? ImagingMode::zernike
                                                  : ImagingMode::defocused;
    const std::vector<double> zds =
        (m == ImagingMode::diffraction) ? std::vector<double>{0.0} : parse_list(zd_list);
    const std::vector<double> xmaxs = parse_list(xmax_list);
    const auto rows = defocus_region_sweep(ctx, zds, xmaxs, m, {}, grid_n);

    json params = physics_json(ctx);
    params["mode"] = mode;
    params["grid_n"] = grid_n;
    params["zd_list"] = zds;
    params["xmax_list"] = xmaxs;
    manifest.set_params(params);

    const fs::path dir = prepare_out_dir(common);
    io::CsvWriter csv((dir / "cfi_sweep.csv").string(),
                      {"z_d_m", "x_max_m", "mu_b2_cfi", "snr_bound_per_sqrt_s"});
    for (const auto& r : rows)
        csv.row({r.z_d, r.x_max, r.mu_b2_cfi, r.snr_bound_per_sqrt_s});
    manifest.add_output("cfi_sweep.csv", "cfi-sweep-csv");
    manifest.write(dir);
    return 0;
}

int run_mask_opt(const CommonOptions& common, const PhysicsOptions& phys, const std::string& mode,
                 int grid_n, double z_d, double x_max, double pixel_size, double n_e, int mc_draws)
{
    const KernelContext ctx = phys.resolve(common.force);
    Manifest manifest("mask-opt");
    manifest.set_context(ctx);
    ProbabilityMap map;
    double interp_check = 0;
    if (mode == "diffraction")
        map = p_diff_map(AngularGrid::full_region(ctx, grid_n), ctx, {}, &interp_check);
    else
        map = p_img_map(SpatialGrid{x_max, grid_n, z_d}, ctx, {}, mode == "zernike", &interp_check);
    manifest.add_map_stats(map, interp_check);

    const BlochState on_res{{0.0, 1.0, 0.0}};
    const PixelImage img = pixelate(map, on_res, ground_state(), n_e, pixel_size);
    const auto snr = snr_px(img);
    const MaskSelection mask = optimize_mask(img);

    json params = physics_json(ctx);
    params["mode"] = mode;
    params["grid_n"] = grid_n;
    params["z_d"] = z_d;
    params["x_max"] = x_max;
    params["pixel_size"] = pixel_size;
    params["n_e"] = n_e;
    params["seed"] = common.seed;
    params["mc_draws"] = mc_draws;
    manifest.set_params(params);
    if (img.first_order_flags > 0)
        manifest.warn("pixels outside the first-order regime: " +
                      std::to_string(img.first_order_flags));

    const fs::path dir = prepare_out_dir(common);
    {
        io::CsvWriter csv((dir / "pixels.csv").string(),
                          {"pixel", "n0", "n1", "snr_px", "selected"});
        for (std::size_t j = 0; j < img.size(); ++j)
            csv.row({(double)j, img.n0[j], img.n1[j], snr[j], (double)mask.selected[j]});
        manifest.add_output("pixels.csv", "pixel-image-csv");
    }
    {
        io::CsvWriter csv((dir / "mask_trace.csv").string(), {"threshold", "total_snr"});
        for (const auto& [thr, tot] : mask.trace)
            csv.row({thr, tot});
        manifest.add_output("mask_trace.csv", "mask-trace-csv");
    }
    json report{
        {"total_snr", mask.total_snr},
        {"threshold", mask.threshold},
        {"pixels_selected", (long)std::count(mask.selected.begin(), mask.selected.end(), 1)},
        {"npx", img.npx}};
    if (mc_draws > 0) {
        io::CsvWriter csv((dir / "estimates.csv").string(), {"draw", "mu_ratio", "std"});
        double mean = 0, m2 = 0;
        for (int r = 0; r < mc_draws; ++r) {
            const auto obs = sample_differential(img, split_seed(common.seed, (std::uint64_t)r));
            const MuEstimate est = estimate_mu_b(obs, img, mask);
            csv.row({(double)r, est.ratio, est.std_dev});
            mean += est.ratio;
            m2 += est.ratio * est.ratio;
        }
        mean /= mc_draws;
        report["mc_mean_ratio"] = mean;
        if (mc_draws > 1)
            report["mc_std_ratio"] = std::sqrt((m2 - mc_draws * mean * mean) / (mc_draws - 1));
        manifest.add_output("estimates.csv", "estimator-mc-csv");
    }
    std::ofstream(dir / "mask_opt.json") << report.dump(2) << "\n";
    manifest.add_output("mask_opt.json", "mask-report-json");
    manifest.write(dir);
    std::cout << report.dump(2) << "\n";
    return 0;
}

int run_backaction(const CommonOptions& common, const PhysicsOptions& phys)
{
    const KernelContext ctx = phys.resolve(common.force);
    Manifest manifest("backaction");
    manifest.set_context(ctx);
    const PurityReport rep = purity_loss(ctx);

    manifest.set_params(physics_json(ctx));
    json report{{"delta_p", rep.delta_p},
                {"q_cutoff_scaled", rep.q_cutoff},
                {"z_halfwidth_scaled", rep.z_halfwidth},
                {"integrand_evaluations", rep.evaluations},
                {"purity_after_1e8_electrons", rep.purity_after(1e8)}};
    const fs::path dir = prepare_out_dir(common);
    std::ofstream(dir / "backaction.json") << report.dump(2) << "\n";
    manifest.add_output("backaction.json", "purity-report-json");
    manifest.write(dir);
    std::cout << report.dump(2) << "\n";
    return 0;
}

int run_bloch_sweep(const CommonOptions& common, const std::string& deltas_arg, double omega1_frac,
                    double zeeman_mev)
{
    PhysConsts pc;
    const double omega0 = zeeman_mev * 1e-3 * pc.e_charge / pc.hbar;
    std::vector<double> ratios = (deltas_arg == "table-b1")
                                     ? std::vector<double>{0.0, 0.025, 0.05, 0.075}
                                     : parse_list(deltas_arg);
    if (ratios.empty())
        throw std::invalid_argument("empty detuning list");
    std::vector<double> deltas;
    for (double r : ratios)
        deltas.push_back(r * omega0);
    const auto states = detuning_sweep(deltas, omega1_frac * omega0, omega0);

    Manifest manifest("bloch-sweep");
    manifest.set_params(json{{"omega0", omega0},
                             {"omega1_frac", omega1_frac},
                             {"zeeman_mev", zeeman_mev},
                             {"deltas_over_omega0", ratios}});
    const fs::path dir = prepare_out_dir(common);
    io::CsvWriter csv((dir / "bloch_sweep.csv").string(), {"delta_over_omega0", "sx", "sy", "sz"});
    for (std::size_t i = 0; i < states.size(); ++i)
        csv.row({ratios[i], states[i].s[0], states[i].s[1], states[i].s[2]});
    manifest.add_output("bloch_sweep.csv", "bloch-sweep-csv");
    manifest.write(dir);
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"spin-resonance scattering simulator (diffraction, defocused and Zernike "
                 "imaging, Bloch sweeps, Fisher-information and shot-noise analysis)"};
    app.require_subcommand(1);
    app.set_config("--config", "", "INI-style configuration file (key=value, [subcommand] section)");
    app.allow_config_extras(CLI::config_extras_mode::error); // misspelled keys must not pass silently

    CommonOptions common;
    app.add_option("--out", common.out_dir, "output directory (env SRS_OUT_DIR overrides)")
        ->capture_default_str();
    app.add_flag("--force", common.force, "proceed despite parameter-validity violations");
    app.add_flag("--no-pgm", common.no_pgm, "skip PGM heatmaps");
    app.add_option("--complex-format", common.complex_format, "complex CSV columns: absarg|reim")
        ->check(CLI::IsMember({"absarg", "reim"}))
        ->capture_default_str();
    app.add_option("--seed", common.seed, "random seed for synthetic draws")->capture_default_str();
    app.add_option("--threads", common.threads, "worker threads (0 = machine parallelism)")
        ->capture_default_str();

    PhysicsOptions phys;

    auto* diff = app.add_subcommand("diffraction", "angular probability map near the beam axis");
    diff->fallthrough();
    int diff_n = 512;
    double diff_frac = 8.0;
    std::string diff_sweep = "table-b1";
    add_physics_options(diff, phys);
    diff->add_option("--grid-n", diff_n, "simulation pixels per side")->capture_default_str();
    diff->add_option("--theta-max-frac", diff_frac,
                     "detection radius in units of dk_perp/k_z0 (max 8)")
        ->check(CLI::Range(0.1, 8.0))
        ->capture_default_str();
    diff->add_option("--detuning-sweep", diff_sweep,
                     "'table-b1', comma list of detunings in units of omega0, or 'none'")
        ->capture_default_str();
    diff->footer("writes diffraction_map.csv (theta_x_urad,theta_y_urad,p0,cx,cy), per-detuning "
                 "diffraction_diff_<label>.csv (theta_x_urad,theta_y_urad,dp), PGM heatmaps and "
                 "manifest.json");

    int img_n = 512;
    double img_zd = 800e-10, img_xmax = 10e-10, img_kmax = 2.0 * M_PI / 50e-12;
    bool img_nomask = false;
    std::string img_sweep = "table-b1";
    auto* img = app.add_subcommand("image", "defocused position-space probability map");
    auto* zrn = app.add_subcommand("zernike", "Zernike phase-contrast probability map");
    for (auto* cmd : {img, zrn}) {
        cmd->fallthrough();
        add_physics_options(cmd, phys);
        cmd->add_option("--grid-n", img_n, "simulation pixels per side")->capture_default_str();
        cmd->add_option("--zd", img_zd, "defocus [m]")->capture_default_str();
        cmd->add_option("--xmax", img_xmax, "detection half-side [m]")->capture_default_str();
        cmd->add_option("--kmax", img_kmax, "aperture cutoff [1/m]")->capture_default_str();
        cmd->add_flag("--no-mask", img_nomask, "ideal lens (no aperture cutoff)");
        cmd->add_option("--detuning-sweep", img_sweep,
                        "'table-b1', comma list of detunings in units of omega0, or 'none'")
            ->capture_default_str();
        cmd->footer("writes <mode>_map.csv (x_angstrom,y_angstrom,p0,cx,cy), per-detuning "
                    "<mode>_diff_<label>.csv (x_angstrom,y_angstrom,dp), PGM heatmaps and "
                    "manifest.json");
    }

    auto* coh = app.add_subcommand("coherent", "coherent wavefunction snapshot past the sample");
    coh->fallthrough();
    int coh_n = 384;
    double coh_z = 800e-10, coh_xmax = 40e-10;
    add_physics_options(coh, phys);
    coh->add_option("--grid-n", coh_n, "pixels per side")->capture_default_str();
    coh->add_option("--z", coh_z, "observation plane distance [m]")->capture_default_str();
    coh->add_option("--xmax", coh_xmax, "window half-side [m]")->capture_default_str();
    coh->footer("writes coherent_psi.csv / coherent_beta_plus.csv / coherent_beta_minus.csv "
                "(x_angstrom,y_angstrom,abs,arg or re,im per --complex-format) and manifest.json");

    auto* cfi_cmd = app.add_subcommand("cfi", "Fisher-information report for one configuration");
    cfi_cmd->fallthrough();
    std::string cfi_mode = "diffraction";
    int cfi_n = 512;
    double cfi_zd = 800e-10, cfi_xmax = 10e-10, cfi_ne = default_electron_count;
    add_physics_options(cfi_cmd, phys);
    cfi_cmd->add_option("--mode", cfi_mode, "diffraction|image|zernike")
        ->check(CLI::IsMember({"diffraction", "image", "zernike"}))
        ->capture_default_str();
    cfi_cmd->add_option("--grid-n", cfi_n, "simulation pixels per side")->capture_default_str();
    cfi_cmd->add_option("--zd", cfi_zd, "defocus [m] (image modes)")->capture_default_str();
    cfi_cmd->add_option("--xmax", cfi_xmax, "detection half-side [m] (image modes)")
        ->capture_default_str();
    cfi_cmd->add_option("--ne", cfi_ne, "electron count for the absolute bound")
        ->capture_default_str();
    cfi_cmd->footer("writes cfi.json and manifest.json; the report is also printed");

    auto* sweep_cmd = app.add_subcommand("cfi-sweep", "CFI over defocus and detection size");
    sweep_cmd->fallthrough();
    std::string sweep_mode = "image", sweep_zds = "0,4e-8,8e-8",
                sweep_xmaxs = "2.5e-10,5e-10,1e-9,2e-9";
    int sweep_n = 384;
    add_physics_options(sweep_cmd, phys);
    sweep_cmd->add_option("--mode", sweep_mode, "diffraction|image|zernike")
        ->check(CLI::IsMember({"diffraction", "image", "zernike"}))
        ->capture_default_str();
    sweep_cmd->add_option("--grid-n", sweep_n, "simulation pixels per side")->capture_default_str();
    sweep_cmd->add_option("--zd-list", sweep_zds, "comma list of defocus values [m]")
        ->capture_default_str();
    sweep_cmd
        ->add_option("--xmax-list", sweep_xmaxs,
                     "comma list of half-sides [m] (collection angles [rad] for diffraction)")
        ->capture_default_str();
    sweep_cmd->footer("writes cfi_sweep.csv (z_d_m,x_max_m,mu_b2_cfi,snr_bound_per_sqrt_s)");

    auto* mask_cmd = app.add_subcommand("mask-opt", "pixelation, SNR mask optimization, estimator");
    mask_cmd->fallthrough();
    std::string mask_mode = "diffraction";
    int mask_n = 512, mask_draws = 0;
    double mask_zd = 800e-10, mask_xmax = 10e-10, mask_px = 2.12e-6,
           mask_ne = default_electron_count;
    add_physics_options(mask_cmd, phys);
    mask_cmd->add_option("--mode", mask_mode, "diffraction|image|zernike")
        ->check(CLI::IsMember({"diffraction", "image", "zernike"}))
        ->capture_default_str();
    mask_cmd->add_option("--grid-n", mask_n, "simulation pixels per side")->capture_default_str();
    mask_cmd->add_option("--zd", mask_zd, "defocus [m] (image modes)")->capture_default_str();
    mask_cmd->add_option("--xmax", mask_xmax, "detection half-side [m] (image modes)")
        ->capture_default_str();
    mask_cmd->add_option("--pixel-size", mask_px, "detector pixel size [rad or m]")
        ->capture_default_str();
    mask_cmd->add_option("--ne", mask_ne, "electron count")->capture_default_str();
    mask_cmd->add_option("--mc-draws", mask_draws, "synthetic Poisson experiments to run")
        ->capture_default_str();
    mask_cmd->footer("writes pixels.csv (pixel,n0,n1,snr_px,selected), mask_trace.csv "
                     "(threshold,total_snr), mask_opt.json, optional estimates.csv "
                     "(draw,mu_ratio,std)");

    auto* back_cmd = app.add_subcommand("backaction", "single-electron spin purity loss");
    back_cmd->fallthrough();
    add_physics_options(back_cmd, phys);
    back_cmd->footer("writes backaction.json and manifest.json; the report is also printed");

    auto* bloch_cmd = app.add_subcommand("bloch-sweep", "pi/2-pulse end states vs detuning");
    bloch_cmd->fallthrough();
    std::string bloch_deltas = "table-b1";
    double bloch_w1 = 0.01, bloch_zeeman = 0.208;
    bloch_cmd->add_option("--deltas", bloch_deltas,
                          "'table-b1' or comma list of detunings in units of omega0")
        ->capture_default_str();
    bloch_cmd->add_option("--omega1-frac", bloch_w1, "Rabi frequency as a fraction of omega0")
        ->capture_default_str();
    bloch_cmd->add_option("--zeeman-mev", bloch_zeeman, "Zeeman splitting [meV]")
        ->capture_default_str();
    bloch_cmd->footer("writes bloch_sweep.csv (delta_over_omega0,sx,sy,sz) and manifest.json");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n";
        return exit_config_error;
    }

    if (common.threads > 0)
        max_threads() = common.threads;
    if (diff_sweep == "none")
        diff_sweep.clear();
    if (img_sweep == "none")
        img_sweep.clear();

    try {
        if (diff->parsed())
            return run_diffraction(common, phys, diff_n, diff_frac, diff_sweep);
        if (img->parsed())
            return run_image(common, phys, false, img_n, img_zd, img_xmax, img_kmax, img_nomask,
                             img_sweep);
        if (zrn->parsed())
            return run_image(common, phys, true, img_n, img_zd, img_xmax, img_kmax, img_nomask,
                             img_sweep);
        if (coh->parsed())
            return run_coherent(common, phys, coh_n, coh_z, coh_xmax);
        if (cfi_cmd->parsed())
            return run_cfi(common, phys, cfi_mode, cfi_n, cfi_zd, cfi_xmax, cfi_ne);
        if (sweep_cmd->parsed())
            return run_cfi_sweep(common, phys, sweep_mode, sweep_n, sweep_zds, sweep_xmaxs);
        if (mask_cmd->parsed())
            return run_mask_opt(common, phys, mask_mode, mask_n, mask_zd, mask_xmax, mask_px,
                                mask_ne, mask_draws);
        if (back_cmd->parsed())
            return run_backaction(common, phys);
        if (bloch_cmd->parsed())
            return run_bloch_sweep(common, bloch_deltas, bloch_w1, bloch_zeeman);
    } catch (const config_error& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return exit_config_error;
    } catch (const std::invalid_argument& e) {
        std::cerr << "parameter validity error: " << e.what() << "\n"
                  << "(rerun with --force to override)\n";
        return exit_validity_error;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
