#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <fraclap/fraclap.hpp>

#include "output.hpp"
#include "schema.hpp"

namespace fraclap::cli {

using Summary = std::vector<std::pair<std::string, double>>;

struct CommandResult {
    ojson results = ojson::object();
    Summary summary;
};

namespace detail {

inline ojson num_or_null(double x) { return std::isfinite(x) ? ojson(x) : ojson(nullptr); }

inline FractionalOrder parse_order(const json& r) {
    if (r.is_number()) return FractionalOrder{r.get<double>()};
    return FractionalOrder(r.get<std::vector<double>>());
}

inline Window parse_window(const json& w) {
    const Window I{w[0].get<double>(), w[1].get<double>()};
    require(I.lo < I.hi, "window must satisfy lo < hi");
    return I;
}

inline Potential parse_potential(const json& p, std::size_t d, const char* key = "potential") {
    Potential W;
    W.dim = d;
    if (!p.contains(key)) return W;
    for (const auto& e : p[key]) {
        Site s = e["site"].get<Site>();
        require(s.size() == d, "potential site dimension does not match the order");
        W.values[s] += e["value"].get<double>();
    }
    return W;
}

inline Site parse_site(const json& p, std::size_t d) {
    if (!p.contains("site")) return Site(d, 0);
    Site s = p["site"].get<Site>();
    require(s.size() == d, "site dimension does not match the order");
    return s;
}

inline std::vector<double> get_times(const json& p, const char* key) {
    require(p.contains(key), std::string("parameter '") + key + "' is required for this mode");
    return p[key].get<std::vector<double>>();
}

inline double scalar_order(const json& p) { return p["r"].get<double>(); }

inline std::string site_cells(const Site& s) {
    std::string out;
    for (std::size_t j = 0; j < s.size(); ++j) out += (j ? "," : "") + std::to_string(s[j]);
    return out;
}

inline std::vector<std::string> site_header(std::size_t d) {
    std::vector<std::string> h;
    for (std::size_t j = 0; j < d; ++j) h.push_back("n_" + std::to_string(j) + " [sites]");
    return h;
}

} // namespace detail

inline CommandResult cmd_symbol(const json& p, ArtifactSet& out) {
    const auto r = detail::parse_order(p["r"]);
    CommandResult res;
    ojson pts = ojson::array();
    std::vector<std::string> hdr{"point [index]"};
    for (std::size_t j = 0; j < r.dim(); ++j) hdr.push_back("theta_" + std::to_string(j) + " [rad]");
    hdr.push_back("value [energy]");
    hdr.push_back("infinite [flag]");
    Csv csv(hdr);
    std::size_t idx = 0;
    for (const auto& t : p["theta"]) {
        const auto theta = t.get<std::vector<double>>();
        const auto v = eval_symbol(r, theta);
        ojson e;
        e["theta"] = theta;
        e["value"] = v.value.is_finite() ? ojson(v.value.value()) : ojson(nullptr);
        e["infinite"] = v.value.is_infinite();
        e["gradient"] = v.gradient;
        pts.push_back(e);
        std::vector<std::string> row{std::to_string(idx++)};
        for (double x : theta) row.push_back(fmt(x));
        row.push_back(v.value.is_finite() ? fmt(v.value.value()) : "inf");
        row.push_back(v.value.is_infinite() ? "1" : "0");
        csv.row(row);
        if (res.summary.empty()) res.summary.emplace_back("value", v.value.is_finite() ? v.value.value() : INFINITY);
    }
    res.results["points"] = pts;
    out.write("symbol.csv", csv.str());
    return res;
}

inline CommandResult cmd_kernel(const json& p, ArtifactSet& out) {
    QuadSpec q;
    if (p.contains("gauss_nodes")) q.gauss_nodes = p["gauss_nodes"].get<int>();
    if (p.contains("jacobi_nodes")) q.jacobi_nodes = p["jacobi_nodes"].get<int>();
    const double r = p["r"].get<double>();
    const long K = p["K"].get<long>();
    const auto t = kernel_table(r, K, q);
    std::ostringstream os;
    write_kernel_csv(os, t);
    out.write("kernel.csv", os.str());
    double emax = 0.0;
    for (double e : t.error) emax = std::max(emax, e);
    CommandResult res;
    res.results["r"] = r;
    res.results["K"] = K;
    res.results["max_error"] = emax;
    res.results["rows"] = K + 1;
    res.results["finite_support"] = t.finite_support();
    res.summary = {{"a0", t.coeffs[0]}, {"max_error", emax}};
    return res;
}

inline CommandResult cmd_spectrum(const json& p, ArtifactSet&) {
    const auto r = detail::parse_order(p["r"]);
    const auto rep = spectrum_interval(r);
    CommandResult res;
    auto iv = [](const SpectralInterval& s) {
        ojson o;
        o["lo"] = s.lo;
        o["hi"] = s.hi.is_finite() ? ojson(s.hi.value()) : ojson(nullptr);
        o["hi_infinite"] = s.hi.is_infinite();
        return o;
    };
    const ojson tot = iv(rep.total);
    for (auto it = tot.begin(); it != tot.end(); ++it) res.results[it.key()] = it.value();
    res.results["axes"] = ojson::array();
    for (const auto& a : rep.axes) res.results["axes"].push_back(iv(a));
    res.summary = {{"lo", rep.total.lo}, {"hi", rep.total.hi.is_finite() ? rep.total.hi.value() : INFINITY}};
    if (p.contains("N")) {
        const TorusModel T(r, p["N"].get<std::size_t>(), r.has_negative() ? FrequencyGrid::HalfInteger : FrequencyGrid::Plain);
        const auto f = spectral_fill(T);
        res.results["torus"] = {{"N", T.N()}, {"hausdorff", f.hausdorff}, {"grid_modulus", f.grid_modulus}};
        res.summary.emplace_back("hausdorff", f.hausdorff);
        res.summary.emplace_back("grid_modulus", f.grid_modulus);
    }
    return res;
}

inline CommandResult cmd_thresholds(const json& p, ArtifactSet&) {
    const auto ts = threshold_set(detail::parse_order(p["r"]));
    CommandResult res;
    res.results["values"] = ts.values;
    res.summary = {{"count", static_cast<double>(ts.values.size())}};
    return res;
}

inline CommandResult cmd_mourre(const json& p, ArtifactSet& out) {
    const double r = detail::scalar_order(p);
    const long L = p["L"].get<long>();
    const Window I = detail::parse_window(p["window"]);
    CommutatorOptions opt;
    opt.localization.seed_radius = p.value("seed_radius", 12L);
    const auto box = build_box(FractionalOrder{r}, L);
    const auto m = mourre_constant(box, I, opt);
    CommandResult res;
    res.results["L"] = L;
    res.results["window"] = {I.lo, I.hi};
    res.results["c_observed"] = m.mourre_constant;
    res.results["c_predicted"] = detail::num_or_null(m.predicted_constant);
    res.results["kept"] = m.kept;
    res.results["discarded"] = m.discarded;
    res.results["edge_contaminated"] = m.edge_contaminated;
    res.results["defect_rank"] = m.defect_rank;
    res.results["threshold_margin"] = m.threshold_margin;
    double r1 = NAN, r2 = NAN;
    if (p.value("commutators", true)) {
        auto block = [](const CommutatorReport& c) {
            return ojson{{"residual", c.identity_residual}, {"floor", c.roundoff_floor}, {"tolerance", c.tolerance}, {"converged", c.converged()}};
        };
        const auto a = first_commutator_residual(box, I, opt), b = second_commutator_residual(box, I, opt);
        res.results["first"] = block(a);
        res.results["second"] = block(b);
        r1 = a.identity_residual;
        r2 = b.identity_residual;
    }
    Csv csv({"L [sites]", "c_observed [energy]", "c_predicted [energy]", "first_residual [energy]", "second_residual [energy]"});
    csv.row({std::to_string(L), fmt(m.mourre_constant), fmt(m.predicted_constant), fmt(r1), fmt(r2)});
    out.write("mourre.csv", csv.str());
    res.summary = {{"c_observed", m.mourre_constant}, {"c_predicted", m.predicted_constant}, {"first_residual", r1}, {"second_residual", r2}};
    return res;
}

inline CommandResult cmd_lap(const json& p, ArtifactSet& out) {
    const double r = detail::scalar_order(p);
    const Window I = detail::parse_window(p["window"]);
    const double s = p["s"].get<double>();
    const auto etas = p["etas"].get<std::vector<double>>();
    const int npts = p.value("lambda_points", 11);
    const std::string provider = p.value("provider", std::string("lattice"));
    const long size = p.value("size", 200L);
    const Potential W = detail::parse_potential(p, 1);
    LapScan scan;
    if (provider == "lattice") scan = lap_scan(LatticeResolvent(r, W, size), FractionalOrder{r}, I, s, etas, npts);
    else scan = lap_scan(BoxResolvent(hamiltonian(build_box(FractionalOrder{r}, size), W)), FractionalOrder{r}, I, s, etas, npts);
    Csv csv({"lambda [energy]", "eta [energy]", "s [dimensionless]", "norm [1/energy]"});
    for (std::size_t e = 0; e < scan.etas.size(); ++e)
        for (std::size_t l = 0; l < scan.lambdas.size(); ++l) csv.row({fmt(scan.lambdas[l]), fmt(scan.etas[e]), fmt(s), fmt(scan.norms[e][l])});
    out.write("lap.csv", csv.str());
    CommandResult res;
    res.results["s"] = s;
    res.results["window"] = {I.lo, I.hi};
    res.results["etas"] = scan.etas;
    res.results["sup_norm"] = scan.sup_norm;
    res.results["change"] = scan.change;
    res.results["verdict"] = scan.verdict;
    res.results["near_threshold"] = scan.near_threshold;
    res.results["threshold_margin"] = scan.threshold_margin;
    res.summary = {{"sup_norm_last", scan.sup_norm.back()}, {"change", scan.change}};
    return res;
}

inline CommandResult cmd_evolve(const json& p, ArtifactSet& out) {
    const auto r = detail::parse_order(p["r"]);
    const std::string model = p["model"].get<std::string>();
    const std::string mode = p["mode"].get<std::string>();
    const long size = p["size"].get<long>();
    const Potential W = detail::parse_potential(p, r.dim());
    const Site site = detail::parse_site(p, r.dim());
    CommandResult res;
    res.results["mode"] = mode;

    std::optional<TorusPropagator> torus;
    std::optional<EigenPropagator> boxp;
    std::optional<BoxModel> box;
    Eigen::VectorXcd f;
    std::function<Site(std::size_t)> site_of;
    if (model == "torus") {
        require(W.is_zero(), "evolve: potentials require the box model");
        require(mode != "wave" && mode != "chebyshev", "evolve: mode '" + mode + "' requires the box model");
        torus.emplace(TorusModel(r, static_cast<std::size_t>(size), r.has_negative() ? FrequencyGrid::HalfInteger : FrequencyGrid::Plain));
        f = Eigen::VectorXcd::Zero(torus->modes());
        f(static_cast<Eigen::Index>(torus->model().site_index(site))) = 1.0;
        site_of = [&](std::size_t i) { return torus->model().site_of(i); };
    } else {
        box.emplace(hamiltonian(build_box(r, size), W));
        require(box->geometry.contains(site), "evolve: site outside the box");
        f = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(box->size()));
        f(static_cast<Eigen::Index>(box->geometry.index(site))) = 1.0;
        if (mode != "wave") boxp.emplace(*box);
        site_of = [&](std::size_t i) { return box->geometry.site(i); };
    }
    auto energy = [&](const Eigen::VectorXcd& v) {
        if (torus) return to_eigen(torus->model().apply(to_std(v))).dot(v).real();
        return (box->matrix.cast<cplx>() * v).dot(v).real();
    };
    auto state_csv = [&](const Eigen::VectorXcd& v) {
        auto hdr = detail::site_header(r.dim());
        hdr.push_back("re_psi [amplitude]");
        hdr.push_back("im_psi [amplitude]");
        Csv csv(hdr);
        for (Eigen::Index i = 0; i < v.size(); ++i) {
            std::vector<std::string> row;
            for (long c : site_of(static_cast<std::size_t>(i))) row.push_back(std::to_string(c));
            row.push_back(fmt(v(i).real()));
            row.push_back(fmt(v(i).imag()));
            csv.row(row);
        }
        out.write("evolve.csv", csv.str());
    };
    auto window = [&]() {
        require(p.contains("window"), "evolve: mode '" + mode + "' requires a window");
        return detail::parse_window(p["window"]);
    };

    if (mode == "state" || mode == "chebyshev") {
        require(p.contains("t"), "evolve: mode '" + mode + "' requires t");
        const double t = p["t"].get<double>();
        const Eigen::VectorXcd ref = torus ? torus->evolve(f, t) : boxp->evolve(f, t);
        Eigen::VectorXcd v = ref;
        if (mode == "chebyshev") {
            v = chebyshev_evolve(*box, f, t, p.value("order", 64)).values;
            res.results["chebyshev_error"] = (v - ref).norm();
            res.summary.emplace_back("chebyshev_error", (v - ref).norm());
        }
        state_csv(v);
        res.results["norm"] = v.norm();
        res.results["energy_drift"] = std::abs(energy(v) - energy(f));
        res.summary.emplace_back("norm", v.norm());
    } else if (mode == "local_decay") {
        const auto T = detail::get_times(p, "times");
        const double s = p.value("s", 1.0);
        const auto rep = torus ? local_decay_integral(*torus, f, window(), s, T) : local_decay_integral(*boxp, f, window(), s, T);
        Csv csv({"T [time]", "integral [time]"});
        for (std::size_t i = 0; i < T.size(); ++i) csv.row({fmt(T[i]), fmt(rep.value[i])});
        out.write("evolve.csv", csv.str());
        res.results["times"] = T;
        res.results["values"] = rep.value;
        res.results["slope"] = detail::num_or_null(rep.tail_slope);
        res.summary = {{"integral_last", rep.value.back()}, {"last_increase", rep.last_increase()}, {"tail_slope", rep.tail_slope}};
    } else if (mode == "rage") {
        const auto T = detail::get_times(p, "times");
        const auto rep = torus ? rage_overlap(*torus, f, f, window(), T) : rage_overlap(*boxp, f, f, window(), T);
        Csv csv({"t [time]", "overlap [dimensionless]", "envelope [dimensionless]"});
        for (std::size_t i = 0; i < T.size(); ++i) csv.row({fmt(T[i]), fmt(rep.overlap[i]), fmt(rep.envelope[i])});
        out.write("evolve.csv", csv.str());
        res.results["times"] = T;
        res.results["values"] = rep.overlap;
        res.results["slope"] = detail::num_or_null(rep.envelope_slope);
        res.results["flag"] = rep.non_decaying;
        res.summary = {{"envelope_slope", rep.envelope_slope}};
    } else {
        require(!W.is_zero(), "evolve: mode 'wave' requires a potential");
        const auto T = detail::get_times(p, "times");
        const auto H0 = build_box(r, size);
        const auto rep = wave_operator_probe(*box, H0, window(), f, T);
        Csv csv({"t [time]", "increment [dimensionless]"});
        for (std::size_t i = 0; i < rep.increments.size(); ++i) csv.row({fmt(T[i + 1]), fmt(rep.increments[i])});
        out.write("evolve.csv", csv.str());
        res.results["times"] = T;
        res.results["values"] = rep.increments;
        res.results["range_mass"] = rep.range_mass;
        res.results["flag"] = !rep.converged || rep.left_bulk;
        res.summary = {{"increment_last", rep.increments.back()}, {"range_mass", rep.range_mass}};
    }
    return res;
}

inline CommandResult cmd_ballistic(const json& p, ArtifactSet& out) {
    const double r = detail::scalar_order(p);
    const long L = p["L"].get<long>();
    const Window I = detail::parse_window(p["window"]);
    const double v = p["v"].get<double>();
    const auto T = p["T"].get<std::vector<double>>();
    const auto box = build_box(FractionalOrder{r}, L);
    Eigen::VectorXcd f = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(box.size()));
    f(static_cast<Eigen::Index>(box.geometry.index({0}))) = 1.0;
    BallisticOptions opt;
    opt.position_variant = p.value("position_variant", false);
    const auto rep = ballistic_average(box, f, I, v, T, opt);
    std::vector<std::string> hdr{"T [time]", "average [dimensionless]"};
    if (opt.position_variant) hdr.emplace_back("position_average [dimensionless]");
    Csv csv(hdr);
    for (std::size_t i = 0; i < T.size(); ++i) {
        std::vector<std::string> row{fmt(T[i]), fmt(rep.average[i])};
        if (opt.position_variant) row.push_back(fmt(rep.position_average[i]));
        csv.row(row);
    }
    out.write("ballistic.csv", csv.str());
    CommandResult res;
    res.results["v"] = v;
    res.results["T"] = T;
    res.results["average"] = rep.average;
    if (opt.position_variant) res.results["position_average"] = rep.position_average;
    res.results["fitted_C"] = rep.fitted_C;
    res.results["non_increasing"] = rep.non_increasing;
    res.results["below_envelope"] = rep.below_envelope;
    res.summary = {{"average_last", rep.average.back()}, {"fitted_C", rep.fitted_C}};
    return res;
}

inline CommandResult cmd_scatter(const json& p, ArtifactSet& out) {
    const double r = detail::scalar_order(p);
    const Potential W = detail::parse_potential(p, 1);
    std::vector<double> lambdas;
    if (p.contains("lambda")) lambdas.push_back(p["lambda"].get<double>());
    if (p.contains("lambdas"))
        for (double l : p["lambdas"].get<std::vector<double>>()) lambdas.push_back(l);
    require(!lambdas.empty(), "scatter: give 'lambda' or 'lambdas'");
    const std::size_t N = p.value("N", std::size_t{1024});
    TorusSpectra spectra(r, W);
    Csv csv({"lambda [energy]", "re_S11 [dimensionless]", "im_S11 [dimensionless]", "re_S12 [dimensionless]", "im_S12 [dimensionless]",
             "re_S21 [dimensionless]", "im_S21 [dimensionless]", "re_S22 [dimensionless]", "im_S22 [dimensionless]",
             "unitarity_residual [dimensionless]", "optical_residual [1/energy]", "arg_detS [rad]", "xi [states]", "bk_residual [dimensionless]"});
    double mu = 0, mo = 0, mg = 0, mr = 0;
    ojson exceptional = ojson::array();
    CommandResult res;
    for (double l : lambdas) {
        ScatteringRecord rec;
        try {
            rec = s_matrix(r, l, W);
        } catch (const ExceptionalEnergy&) {
            exceptional.push_back(l);
            continue;
        }
        const double xi = ssf_counting(spectra, l, {N}).sequence.back().smoothed;
        const double bk = birman_krein_residual(rec.detS, xi);
        std::vector<std::string> row{fmt(l)};
        for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b) {
                row.push_back(fmt(rec.S(a, b).real()));
                row.push_back(fmt(rec.S(a, b).imag()));
            }
        row.push_back(fmt(rec.unitarity_residual));
        row.push_back(fmt(rec.optical_residual));
        row.push_back(fmt(std::arg(rec.detS)));
        row.push_back(fmt(xi));
        row.push_back(fmt(bk));
        csv.row(row);
        mu = std::max(mu, rec.unitarity_residual);
        mo = std::max(mo, rec.optical_residual);
        mg = std::max(mg, rec.route_gap);
        mr = std::max(mr, rec.reciprocity_residual);
        if (res.summary.empty())
            res.summary = {{"transmission", std::norm(rec.transmission())}, {"unitarity_residual", rec.unitarity_residual},
                           {"optical_residual", rec.optical_residual}, {"arg_detS", std::arg(rec.detS)}, {"xi", xi}, {"bk_residual", bk}};
    }
    out.write("scatter.csv", csv.str());
    res.results["count"] = csv.rows();
    res.results["max_unitarity_residual"] = mu;
    res.results["max_optical_residual"] = mo;
    res.results["max_route_gap"] = mg;
    res.results["max_reciprocity_residual"] = mr;
    res.results["exceptional"] = exceptional;
    res.results["N"] = N;
    return res;
}

inline CommandResult cmd_ssf(const json& p, ArtifactSet& out) {
    const double r = detail::scalar_order(p);
    const double lambda = p["lambda"].get<double>();
    const auto Ns = p["N"].get<std::vector<std::size_t>>();
    const auto rep = ssf_counting(r, lambda, detail::parse_potential(p, 1), Ns);
    Csv csv({"N [sites]", "count [states]", "smoothed [states]", "collision [flag]", "count_minus [states]", "count_plus [states]"});
    ojson seq = ojson::array();
    for (const auto& c : rep.sequence) {
        csv.row({std::to_string(c.N), std::to_string(c.count), fmt(c.smoothed), c.collision ? "1" : "0", std::to_string(c.count_minus),
                 std::to_string(c.count_plus)});
        seq.push_back({{"N", c.N}, {"count", c.count}, {"smoothed", c.smoothed}, {"collision", c.collision}, {"count_minus", c.count_minus},
                       {"count_plus", c.count_plus}});
    }
    out.write("ssf.csv", csv.str());
    CommandResult res;
    res.results["lambda"] = lambda;
    res.results["stabilized"] = rep.stabilized;
    res.results["sequence"] = seq;
    res.summary = {{"stabilized", static_cast<double>(rep.stabilized)}, {"smoothed_last", rep.sequence.back().smoothed}};
    return res;
}

inline CommandResult cmd_bk(const json& p, ArtifactSet& out) {
    const double r = detail::scalar_order(p);
    const Potential W = detail::parse_potential(p, 1);
    const auto Ns = p["N"].get<std::vector<std::size_t>>();
    TorusSpectra spectra(r, W);
    Csv csv({"lambda [energy]", "N [sites]", "xi [states]", "residual [dimensionless]"});
    ojson pts = ojson::array();
    CommandResult res;
    for (double l : p["lambdas"].get<std::vector<double>>()) {
        const auto b = birman_krein(spectra, r, l, W, Ns);
        for (std::size_t i = 0; i < b.N.size(); ++i) csv.row({fmt(l), std::to_string(b.N[i]), fmt(b.xi[i]), fmt(b.residual[i])});
        pts.push_back({{"lambda", l}, {"arg_detS", std::arg(b.detS)}, {"N", b.N}, {"xi", b.xi}, {"residual", b.residual}});
        if (res.summary.empty()) res.summary = {{"residual_last", b.residual.back()}, {"xi_last", b.xi.back()}};
    }
    out.write("bk.csv", csv.str());
    res.results["points"] = pts;
    return res;
}

inline const std::map<std::string, std::function<CommandResult(const json&, ArtifactSet&)>>& command_table() {
    static const std::map<std::string, std::function<CommandResult(const json&, ArtifactSet&)>> t{
        {"symbol", cmd_symbol}, {"kernel", cmd_kernel}, {"spectrum", cmd_spectrum}, {"thresholds", cmd_thresholds},
        {"mourre", cmd_mourre}, {"lap", cmd_lap},       {"evolve", cmd_evolve},     {"ballistic", cmd_ballistic},
        {"scatter", cmd_scatter}, {"ssf", cmd_ssf},     {"bk", cmd_bk}};
    return t;
}

} // namespace fraclap::cli
