#include <CLI11.hpp>

#include <auxheat/acceptance.hpp>
#include <auxheat/aux_space.hpp>
#include <auxheat/checks.hpp>
#include <auxheat/io.hpp>
#include <auxheat/kernels.hpp>
#include <auxheat/simulate.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

using namespace auxheat;
namespace fs = std::filesystem;

namespace {

struct Session {
    ExperimentConfig config;
    std::string out_dir = "out";
    int threads = 1;

    std::string hash() const { return config_hash(config); }

    void write_json(const std::string& name, json j) const {
        j["config_hash"] = hash();
        j["seed"] = config.seed;
        fs::create_directories(out_dir);
        std::ofstream f(fs::path(out_dir) / name);
        f << j.dump(2) << "\n";
    }

    void write_text(const std::string& name, const std::string& body) const {
        fs::create_directories(out_dir);
        std::ofstream f(fs::path(out_dir) / name);
        f << body;
    }

    std::vector<double> radii(const AtomicSpace& s) const {
        return config.radii ? *config.radii : default_radius_grid(s);
    }

    std::vector<double> times(const AtomicSpace& s) const {
        return config.times ? *config.times : default_time_grid(s);
    }
};

int run_build_aux(const Session& ses) {
    AtomicSpace s = build_space(ses.config);
    AuxSpace aux(s, ses.config.max_depth);
    json points = json::array();
    for (int x = 0; x < s.size(); ++x) {
        RngStream rng(ses.config.seed, "build-aux", static_cast<std::uint64_t>(x));
        AuxPoint z{x, LazyWord(rng.raw())};
        json pt;
        pt["label"] = s.label(x);
        pt["mu"] = s.mu(x);
        pt["D"] = aux.D(x);
        pt["phi_D"] = aux.phi().evaluate(aux.D(x));
        pt["v"] = s.rate_v(x);
        pt["sample_point"] = aux.serialize(z);
        pt["sample_cell"] = aux.serialize(x, z.word.cell(4));
        points.push_back(pt);
    }
    json j;
    j["space_size"] = s.size();
    j["window_radius"] = s.window_radius();
    j["min_isolation"] = s.min_isolation();
    j["max_depth"] = aux.max_depth();
    j["points"] = points;
    ses.write_json("aux.json", j);
    std::cout << "auxiliary space over " << s.size() << " atoms written to " << ses.out_dir
              << "/aux.json" << std::endl;
    return 0;
}

int run_simulate(const Session& ses, const std::string& mode, const std::string& start,
                 double horizon, int runs) {
    AtomicSpace s = build_space(ses.config);
    AuxSpace aux(s, ses.config.max_depth);
    JumpTable table(s);
    int x0 = start.empty() ? s.center() : s.index_of(start);

    std::vector<std::string> bodies(static_cast<std::size_t>(runs));
    auto worker = [&](int lo, int hi) {
        for (int i = lo; i < hi; ++i) {
            RngStream rng(ses.config.seed, "simulate", static_cast<std::uint64_t>(i));
            Trajectory traj;
            if (mode == "original") {
                traj = simulate_original(table, x0, horizon, rng);
            } else if (mode == "refresh") {
                traj = simulate_refresh(aux, x0, LazyWord(rng.raw()), horizon, rng);
            } else {
                traj = simulate_aux(aux, table, AuxPoint{x0, LazyWord(rng.raw())}, horizon, rng);
            }
            std::ostringstream os;
            write_trajectory_csv(os, s, traj);
            bodies[static_cast<std::size_t>(i)] = os.str();
        }
    };
    int nthreads = std::max(1, ses.threads);
    std::vector<std::thread> pool;
    int chunk = (runs + nthreads - 1) / nthreads;
    for (int k = 0; k < nthreads; ++k) {
        int lo = k * chunk, hi = std::min(runs, lo + chunk);
        if (lo < hi) pool.emplace_back(worker, lo, hi);
    }
    for (auto& th : pool) th.join();

    json files = json::array();
    for (int i = 0; i < runs; ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "traj_%05d.csv", i);
        ses.write_text(name, bodies[static_cast<std::size_t>(i)]);
        files.push_back(name);
    }
    json j;
    j["mode"] = mode;
    j["start"] = s.label(x0);
    j["horizon"] = horizon;
    j["runs"] = runs;
    j["files"] = files;
    ses.write_json("simulate.json", j);
    std::cout << runs << " " << mode << " trajectories written to " << ses.out_dir << std::endl;
    return 0;
}

int run_kernels(const Session& ses, std::vector<double> ts, double inner_radius) {
    AtomicSpace s = build_space(ses.config);
    if (ts.empty()) ts = ses.times(s);
    std::vector<int> inner;
    for (int x = 0; x < s.size(); ++x)
        if (s.dist(x, s.center()) <= inner_radius) inner.push_back(x);
    std::vector<std::pair<int, int>> pairs;
    for (int x : inner)
        for (int y : inner) pairs.push_back({x, y});
    json files = json::array();
    for (std::size_t i = 0; i < ts.size(); ++i) {
        HeatKernel p = heat_kernel_exact(s, ts[i], ses.config.kernel_tol);
        char name[32];
        std::snprintf(name, sizeof name, "kernel_%03zu.csv", i);
        std::ostringstream os;
        write_kernel_csv(os, s, p, pairs);
        ses.write_text(name, os.str());
        char meta[32];
        std::snprintf(meta, sizeof meta, "kernel_%03zu.json", i);
        ses.write_json(meta, kernel_metadata(p));
        files.push_back(name);
    }
    json j;
    j["times"] = ts;
    j["inner_radius"] = inner_radius;
    j["files"] = files;
    ses.write_json("kernels.json", j);
    std::cout << ts.size() << " kernel tables written to " << ses.out_dir << std::endl;
    return 0;
}

int run_check(const Session& ses, const std::string& condition) {
    AtomicSpace s = build_space(ses.config);
    AuxSpace aux(s, ses.config.max_depth);
    auto radii = ses.radii(s);
    auto D = [&s](int x) { return s.isolation_radius(x); };
    std::vector<CheckReport> reps;

    if (condition == "vd" || condition == "all") {
        reps.push_back(check_vd(s, base_volume_fn(s), radii));
        CheckReport a = check_vd(s, aux_volume_fn(aux), radii);
        a.condition += " (auxiliary)";
        reps.push_back(a);
    }
    if (condition == "qrvd" || condition == "all")
        reps.push_back(check_qrvd_rvd(s, base_volume_fn(s), radii, {2.0, 3.0, 4.0}, true, D));
    if (condition == "rvd" || condition == "all") {
        reps.push_back(check_qrvd_rvd(s, base_volume_fn(s), radii, {2.0, 3.0, 4.0}, false, D));
        CheckReport a = check_qrvd_rvd(s, aux_volume_fn(aux), radii, {2.0, 3.0, 4.0}, false, D);
        a.condition += " (auxiliary)";
        reps.push_back(a);
    }
    if (condition == "perfectness" || condition == "all")
        reps.push_back(check_quasi_uniform_perfectness(s, radii, {1.5, 2.0, 3.0, 4.0}));
    if (condition == "jphi" || condition == "all") {
        reps.push_back(check_jphi(s));
        RngStream rng(ses.config.seed, "check-jphi");
        reps.push_back(check_jphi_aux(aux, rng));
    }
    if (condition == "ujs" || condition == "all") reps.push_back(check_ujs(s, radii));
    if (condition == "qe" || condition == "all") {
        JumpTable table(s);
        RngStream rng(ses.config.seed, "check-qe");
        reps.push_back(check_qe(s, table, radii, 4000, rng));
        RngStream rng2(ses.config.seed, "check-qe-aux");
        reps.push_back(check_qe_aux(aux, table, radii, 4000, rng2));
    }
    if (condition == "hk" || condition == "all") {
        std::vector<int> inner;
        for (int x = 0; x < s.size(); ++x)
            if (s.dist(x, s.center()) <= s.window_radius() / 8.0) inner.push_back(x);
        reps.push_back(check_hk_uhkd(s, ses.times(s), inner, ses.config.kernel_tol));
    }
    if (condition == "ndl" || condition == "all")
        reps.push_back(check_ndl(s, radii, ses.times(s), 0.25, ses.config.kernel_tol));
    if (condition == "poincare" || condition == "all") {
        int c = s.center();
        double Dx = aux.D(c);
        reps.push_back(check_wx_poincare(aux, c, {Dx, 0.7 * Dx, 0.3 * Dx}, 8));
    }
    if (reps.empty()) {
        std::cerr << "unknown condition: " << condition << "\n"
                  << "known: vd qrvd rvd perfectness jphi ujs qe hk ndl poincare all"
                  << std::endl;
        return 2;
    }

    json out = json::array();
    bool all_pass = true;
    for (const auto& rep : reps) {
        std::cout << report_to_table(rep);
        out.push_back(report_to_json(rep));
        all_pass = all_pass && rep.pass;
    }
    ses.write_json("check_" + condition + ".json", json{{"reports", out}});
    return all_pass ? 0 : 1;
}

int run_suite(const Session& ses) {
    auto results = run_acceptance(ses.config.seed, &std::cout);
    json arr = json::array();
    int failed = 0;
    for (const auto& r : results) {
        json c;
        c["name"] = r.name;
        c["pass"] = r.pass;
        c["detail"] = r.detail;
        arr.push_back(c);
        if (!r.pass) ++failed;
    }
    ses.write_json("suite.json", json{{"criteria", arr}});
    if (failed) {
        std::cout << failed << " of " << results.size() << " criteria failed" << std::endl;
        return 1;
    }
    std::cout << "all " << results.size() << " criteria passed" << std::endl;
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"numerical laboratory for jump processes on spaces with isolated atoms"};
    app.require_subcommand(1);

    std::string config_path, out_dir = "out";
    std::uint64_t seed_override = 0;
    bool seed_given = false;
    int threads = 1;
    app.add_option("--config", config_path, "experiment config (JSON)");
    app.add_option("--seed", seed_override, "override the config seed")
        ->each([&](const std::string&) { seed_given = true; });
    app.add_option("--threads", threads, "worker threads for simulation");
    app.add_option("--out", out_dir, "output directory");

    auto* build = app.add_subcommand("build-aux", "construct the auxiliary space and summarize it");
    auto* sim = app.add_subcommand("simulate", "sample trajectories");
    std::string mode = "aux", start;
    double horizon = 1.0;
    int runs = 10;
    sim->add_option("--mode", mode, "original | aux | refresh")
        ->check(CLI::IsMember({"original", "aux", "refresh"}));
    sim->add_option("--start", start, "starting point label (default: window center)");
    sim->add_option("--horizon", horizon, "time horizon");
    sim->add_option("--runs", runs, "number of trajectories");
    auto* ker = app.add_subcommand("kernels", "tabulate heat kernels against the comparison profile");
    std::vector<double> ker_times;
    double inner_radius = 4.0;
    ker->add_option("--time", ker_times, "kernel times (default: the config time grid)");
    ker->add_option("--inner-radius", inner_radius, "tabulate pairs within this radius of the center");
    auto* chk = app.add_subcommand("check", "estimate the constants of one condition");
    std::string condition;
    chk->add_option("condition", condition, "vd qrvd rvd perfectness jphi ujs qe hk ndl poincare all")
        ->required();
    auto* suite = app.add_subcommand("suite", "run the acceptance criteria");
    // accept the global flags after a subcommand too
    for (auto* sub : {build, sim, ker, chk, suite}) sub->fallthrough();

    CLI11_PARSE(app, argc, argv);

    try {
        Session ses;
        ses.config = config_path.empty() ? parse_config(json::object()) : load_config(config_path);
        if (seed_given) ses.config.seed = seed_override;
        ses.out_dir = out_dir;
        ses.threads = threads;

        if (build->parsed()) return run_build_aux(ses);
        if (sim->parsed()) return run_simulate(ses, mode, start, horizon, runs);
        if (ker->parsed()) return run_kernels(ses, ker_times, inner_radius);
        if (chk->parsed()) return run_check(ses, condition);
        if (suite->parsed()) return run_suite(ses);
    } catch (const config_error& e) {
        std::cerr << "config error: " << e.what() << std::endl;
        return 2;
    } catch (const window_overflow_error& e) {
        std::cerr << "window overflow: " << e.what() << std::endl;
        return 3;
    } catch (const certification_error& e) {
        std::cerr << "tolerance not certified: " << e.what() << std::endl;
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return 5;
    }
    return 0;
}
