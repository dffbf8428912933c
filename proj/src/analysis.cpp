#include "acd/analysis.hpp"

#include "acd/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

namespace acd {

namespace {

void append_csv_value(std::string& line, double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), ",%.17g", v);
    line += buf;
}

FomRow base_row(const SweepSpec& spec, int order, double tau, const std::string& kind,
                double value) {
    FomRow row;
    row.system = spec.system.name();
    row.N = spec.system.sites;
    row.k = spec.k;
    row.E0 = spec.E0;
    row.d_E = spec.d_E;
    row.order = order;
    row.tau = tau;
    row.fom_kind = kind;
    row.value = value;
    row.seed = spec.seed;
    row.M = spec.M;
    return row;
}

} // namespace

void write_fom_csv(std::ostream& os, const std::vector<FomRow>& rows) {
    os << "system,N,k,E0,dE,order,tau,fom_kind,value,seed,M\n";
    for (const auto& r : rows) {
        std::string line = r.system;
        line += ',' + std::to_string(r.N) + ',' + std::to_string(r.k);
        append_csv_value(line, r.E0);
        append_csv_value(line, r.d_E);
        line += ',' + std::to_string(r.order);
        append_csv_value(line, r.tau);
        line += ',' + r.fom_kind;
        append_csv_value(line, r.value);
        line += ',' + std::to_string(r.seed) + ',' + std::to_string(r.M);
        os << line << '\n';
    }
}

std::vector<double> log_tau_grid(double tau_min, double tau_max, int points) {
    if (points < 2 || tau_min <= 0 || tau_max <= tau_min)
        throw std::invalid_argument("invalid tau grid");
    std::vector<double> grid(static_cast<std::size_t>(points));
    const double l0 = std::log(tau_min), l1 = std::log(tau_max);
    for (int i = 0; i < points; ++i)
        grid[static_cast<std::size_t>(i)] =
            std::exp(l0 + (l1 - l0) * i / static_cast<double>(points - 1));
    grid.front() = tau_min;
    grid.back() = tau_max;
    return grid;
}

IntegratorConfig sweep_integrator(const SweepSpec& spec, double tau) {
    IntegratorConfig cfg;
    cfg.step = std::max(std::min(tau, 1.0) / spec.step_divisor, 1e-5);
    cfg.threads = spec.threads;
    return cfg;
}

std::vector<FomRow> run_tau_sweep(const SweepSpec& spec,
                                  const std::map<int, CoefficientFile>& coefficients) {
    if (spec.tau_grid.empty()) throw std::invalid_argument("empty tau grid");
    const bool per_site = spec.system.kind == SystemKind::FPUTChain;
    const Ensemble initial = initial_ensemble(spec.system, spec.k, spec.E0, spec.M, spec.seed);

    // T_char is fixed by the quench energy spread of the initial distribution
    double t_char = 0.0;
    if (spec.temporal) {
        if (spec.system.kind != SystemKind::AnharmonicOscillator)
            throw std::invalid_argument("temporal variance is defined for the oscillator only");
        t_char = characteristic_time(spec.E0, 1.0, sigma_E_after_quench(spec.system, initial));
    }

    std::vector<FomRow> rows;
    for (int order : spec.orders) {
        DriveSpec drive;
        if (order > 0) {
            auto it = coefficients.find(order);
            if (it == coefficients.end())
                throw std::invalid_argument("no coefficient file for order " +
                                            std::to_string(order));
            drive = make_drive(it->second);
        } else {
            drive.system = spec.system;
        }
        for (double tau : spec.tau_grid) {
            const RampProtocol protocol{tau};
            const VectorField field = acd_field(drive, protocol);
            const IntegratorConfig cfg = sweep_integrator(spec, tau);
            const Ensemble final_state = evolve_ensemble(initial, field, 0.0, tau, cfg);
            rows.push_back(base_row(spec, order, tau, "energy_variance",
                                    energy_variance(final_state, spec.system, 1.0, per_site)));
            if (spec.temporal) {
                IntegratorConfig tcfg = cfg;
                tcfg.step = 1e-3;
                rows.push_back(base_row(spec, order, tau, "temporal_variance",
                                        temporal_variance(final_state, spec.system, t_char,
                                                          spec.temporal_samples, tcfg)));
            }
        }
    }
    return rows;
}

std::vector<FomRow> run_quantum_sweep(const SweepSpec& spec,
                                      const std::map<int, CoefficientFile>& coefficients,
                                      const HilbertConfig& hilbert) {
    if (spec.system.kind != SystemKind::AnharmonicOscillator)
        throw std::invalid_argument("the quantum reference covers the oscillator only");
    const QuantumOperators ops = build_operators(hilbert);
    const QuantumState initial = eigenstate(ops.hamiltonian(0.0), hilbert.initial_index);
    const Eigen::MatrixXcd h_final = ops.hamiltonian(1.0);

    std::vector<FomRow> rows;
    for (int order : spec.orders) {
        QuantumDrive drive;
        drive.order = order;
        if (order > 0) {
            auto it = coefficients.find(order);
            if (it == coefficients.end())
                throw std::invalid_argument("no coefficient file for order " +
                                            std::to_string(order));
            const CoefficientFile& file = it->second;
            if (file.ansatz != AnsatzKind::OscillatorFixed)
                throw std::invalid_argument(
                    "quantum driving expects the oscillator-fixed {x^3 p, x p^3} basis");
            auto f1 = file.fits.at(0);
            drive.gamma1 = [f1](double beta) { return f1(beta); };
            if (order >= 2) {
                auto f2 = file.fits.at(1);
                drive.gamma2 = [f2](double beta) { return f2(beta); };
            }
        }
        for (double tau : spec.tau_grid) {
            const RampProtocol protocol{tau};
            const QuantumState final_state =
                evolve_schrodinger(initial, protocol, drive, ops, hilbert.steps_for(tau));
            const QuantumFoms fom =
                quantum_foms(final_state, h_final, hilbert.initial_index, ops.h_lin);
            FomRow r = base_row(spec, order, tau, "infidelity", fom.one_minus_f2);
            r.M = hilbert.dimension;
            rows.push_back(r);
            r.fom_kind = "q_energy_var";
            r.value = fom.energy_variance;
            rows.push_back(r);
            r.fom_kind = "delta_qm";
            r.value = fom.delta_qm;
            rows.push_back(r);
        }
    }
    return rows;
}

std::vector<FomRow> instability_study(const InstabilityConfig& config) {
    const SystemSpec system = SystemSpec::fput(config.sites);
    std::vector<FomRow> rows;
    for (double width : {0.0, config.broadened_width}) {
        OptimizeSettings opt = config.optimize;
        opt.d_E = width;
        std::map<int, CoefficientFile> files;
        for (int order : {1, 2}) {
            OptimizeSettings o = opt;
            o.ansatz_order = order;
            const OptimizeResult res = optimize_gamma_table(system, config.k, config.E0, o);
            files[order] = make_coefficient_file(system, config.k, config.E0, o, res);
        }
        SweepSpec sweep = config.sweep;
        sweep.system = system;
        sweep.k = config.k;
        sweep.E0 = config.E0;
        sweep.d_E = width;
        sweep.orders = {1, 2};
        auto panel = run_tau_sweep(sweep, files);
        rows.insert(rows.end(), panel.begin(), panel.end());
    }
    return rows;
}

DeltaSensitivity delta_sensitivity(const std::map<int, CoefficientFile>& coefficients,
                                   const std::vector<double>& delta_grid, double tau_quench,
                                   const SweepSpec& spec) {
    if (std::find(delta_grid.begin(), delta_grid.end(), 0.0) == delta_grid.end())
        throw std::invalid_argument("the Delta grid must include 0");
    const bool per_site = spec.system.kind == SystemKind::FPUTChain;
    const Ensemble initial = initial_ensemble(spec.system, spec.k, spec.E0, spec.M, spec.seed);
    const RampProtocol protocol{tau_quench};
    const IntegratorConfig cfg = sweep_integrator(spec, tau_quench);

    DeltaSensitivity out;
    for (const auto& [order, file] : coefficients) {
        std::vector<std::pair<double, double>> curve;
        for (double delta : delta_grid) {
            const DriveSpec drive = make_drive(file, delta);
            const VectorField field = acd_field(drive, protocol);
            const Ensemble final_state = evolve_ensemble(initial, field, 0.0, tau_quench, cfg);
            const double value = energy_variance(final_state, spec.system, 1.0, per_site);
            out.rows.push_back({order, delta, value});
            curve.emplace_back(delta, value);
        }
        std::sort(curve.begin(), curve.end());
        // central difference around Delta = 0
        const auto zero =
            std::find_if(curve.begin(), curve.end(), [](const auto& p) { return p.first == 0.0; });
        if (zero != curve.begin() && std::next(zero) != curve.end()) {
            const auto& lo = *std::prev(zero);
            const auto& hi = *std::next(zero);
            out.slope_at_zero[order] = (hi.second - lo.second) / (hi.first - lo.first);
        }
    }
    return out;
}

void write_delta_csv(std::ostream& os, const SweepSpec& spec, const DeltaSensitivity& result) {
    os << "system,N,k,E0,dE,order,Delta,fom_kind,value,seed,M\n";
    for (const auto& r : result.rows) {
        std::string line = spec.system.name();
        line += ',' + std::to_string(spec.system.sites) + ',' + std::to_string(spec.k);
        append_csv_value(line, spec.E0);
        append_csv_value(line, spec.d_E);
        line += ',' + std::to_string(r.order);
        append_csv_value(line, r.delta);
        line += ",energy_variance";
        append_csv_value(line, r.value);
        line += ',' + std::to_string(spec.seed) + ',' + std::to_string(spec.M);
        os << line << '\n';
    }
}

double functional_overlap(const std::function<double(double)>& f,
                          const std::function<double(double)>& g, int nodes) {
    nodes = std::max(nodes, 201);
    if (nodes % 2 == 0) ++nodes;
    const int intervals = nodes - 1;
    const double h = 1.0 / intervals;
    double fg = 0.0, ff = 0.0, gg = 0.0;
    for (int i = 0; i < nodes; ++i) {
        const double beta = i * h;
        const double w = (i == 0 || i == intervals) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
        const double fv = f(beta), gv = g(beta);
        fg += w * fv * gv;
        ff += w * fv * fv;
        gg += w * gv * gv;
    }
    if (ff <= 0.0 || gg <= 0.0)
        throw std::domain_error("functional overlap of a zero-norm coefficient");
    return (fg * fg) / (ff * gg);
}

std::vector<OverlapRow> overlap_study(const SystemSpec& spec, int k, double E0,
                                      const std::vector<double>& dE_grid,
                                      const OptimizeSettings& settings) {
    OptimizeSettings ref_settings = settings;
    ref_settings.d_E = 0.0;
    const OptimizeResult reference = optimize_gamma_table(spec, k, E0, ref_settings);

    std::vector<OverlapRow> rows;
    for (double d_E : dE_grid) {
        OptimizeSettings s = settings;
        s.d_E = d_E;
        const OptimizeResult res =
            d_E == 0.0 ? reference : optimize_gamma_table(spec, k, E0, s);
        OverlapRow row;
        row.d_E = d_E;
        for (std::size_t i = 0; i < res.fits.size(); ++i) {
            const auto& fi = res.fits[i];
            const auto& gi = reference.fits[i];
            row.overlap.push_back(functional_overlap([&fi](double b) { return fi(b); },
                                                     [&gi](double b) { return gi(b); }));
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

void write_overlap_csv(std::ostream& os, const std::vector<OverlapRow>& rows) {
    if (rows.empty()) return;
    os << "dE";
    for (std::size_t i = 1; i <= rows.front().overlap.size(); ++i) os << ",F2_gamma" << i;
    os << '\n';
    for (const auto& r : rows) {
        char buf[40];
        std::snprintf(buf, sizeof(buf), "%.17g", r.d_E);
        os << buf;
        for (double v : r.overlap) {
            std::snprintf(buf, sizeof(buf), ",%.17g", v);
            os << buf;
        }
        os << '\n';
    }
}

} // namespace acd
