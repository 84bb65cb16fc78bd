// Acceptance checks: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include "volidx/cli.hpp"
#include "volidx/errors.hpp"
#include "volidx/index_builder.hpp"
#include "volidx/synthetic_market.hpp"
#include "volidx/validation.hpp"
#include "volidx/vix.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <thread>

using namespace volidx;
namespace fs = std::filesystem;

namespace {

// Pinned tolerances.
constexpr double kFlatVixTarget = 20.0;
constexpr double kFlatVixTolerance = 0.5;
constexpr double kVixSecondsPer1000Days = 1.0;
constexpr double kReplicationRelTol = 1e-8;
constexpr double kLocalAffineRelTol = 1e-9;
constexpr double kPerturbation = 1e-9;
constexpr double kGradientRelTol = 1e-5;
constexpr double kGradientMargin = 1e-3;
constexpr double kRidgeOlsTol = 1e-9;
constexpr double kRidgeHugeLambda = 1e12;
constexpr double kRidgeShrunkNorm = 1e-6;
constexpr double kR2Tol = 1e-12;
constexpr double kExperimentSeconds = 600.0;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

int failures = 0;

void report(int n, bool pass, const std::string& detail) {
    std::printf("[%s] criterion %d: %s\n", pass ? "PASS" : "FAIL", n, detail.c_str());
    std::fflush(stdout);
    if (!pass) ++failures;
}

void run_criterion(int n, const std::function<std::pair<bool, std::string>()>& body) {
    try {
        const auto [pass, detail] = body();
        report(n, pass, detail);
    } catch (const std::exception& e) {
        report(n, false, std::string("exception: ") + e.what());
    }
}

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

int jobs() {
    return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

std::span<const double> as_span(const Eigen::VectorXd& v) {
    return {v.data(), static_cast<std::size_t>(v.size())};
}

// ---- shared backtest fixture (criteria 2, 3, 6, 7) ------------------------

struct Fixture {
    SyntheticMarket market;
    Dataset dataset;
    BacktestConfig cfg;
};

const Fixture& fixture() {
    static const Fixture f = [] {
        Fixture out;
        SyntheticMarketConfig mc;
        mc.n_days = 1120;  // 1090 rows after the 30-day target window
        mc.quote_gap_rate = 0.05;
        mc.rng_seed = 42;
        out.market = generate_synthetic_market(mc);
        FeatureConfig fc;
        fc.strikes_per_side = 20;
        out.dataset = assemble_dataset(out.market.market, fc);
        out.cfg.compute_weights = true;
        out.cfg.fnn.epochs = 20;
        out.cfg.fnn.optimizer = FnnOptimizer::Adam;
        out.cfg.seed = 42;
        out.cfg.jobs = jobs();
        return out;
    }();
    return f;
}

std::map<std::pair<Algorithm, RegressionMode>, BacktestReport>& fixture_reports() {
    static std::map<std::pair<Algorithm, RegressionMode>, BacktestReport> reports;
    return reports;
}

const BacktestReport& fixture_report(Algorithm algo, RegressionMode mode) {
    auto& reports = fixture_reports();
    const auto key = std::make_pair(algo, mode);
    auto it = reports.find(key);
    if (it == reports.end()) {
        const auto& f = fixture();
        it = reports.emplace(key, run_backtest(f.dataset, algo, mode, f.cfg, f.market.market.chains)).first;
    }
    return it->second;
}

// ---- criterion 1 ----------------------------------------------------------

std::pair<bool, std::string> flat_market_vix() {
    SyntheticMarketConfig mc;
    mc.n_days = 1000;
    mc.premium = 1.0;
    mc.vol_process.vol_of_vol = 0.0;
    const auto m = generate_synthetic_market(mc);
    const auto t0 = Clock::now();
    double worst = 0.0;
    for (const auto& snap : m.market.chains) {
        worst = std::max(worst, std::abs(synthetic_vix(snap, VixOptions{}).value - kFlatVixTarget));
    }
    const double secs = seconds_since(t0);
    const bool pass = worst <= kFlatVixTolerance && secs < kVixSecondsPer1000Days;
    return {pass, "flat 20% market: max |VIX* - 20| = " + fmt("%.4f", worst) + " over 1000 days in " +
                      fmt("%.3f", secs) + " s"};
}

// ---- criterion 2 ----------------------------------------------------------

std::pair<bool, std::string> replication() {
    const auto& f = fixture();
    double worst = 0.0;
    std::size_t checked = 0;
    std::size_t flagged = 0;
    for (auto algo : {Algorithm::Linear, Algorithm::Ridge, Algorithm::Fnn}) {
        for (auto mode : {RegressionMode::RegI, RegressionMode::RegII}) {
            const auto& r = fixture_report(algo, mode);
            if (r.replication.size() != r.predictions.size()) return {false, "missing replication records"};
            for (std::size_t i = 0; i < r.replication.size(); ++i) {
                const auto& res = r.replication[i].result;
                if (res.forecast != r.predictions[i].pred) return {false, "replicated a different forecast"};
                const double rel = res.residual / std::max(1.0, std::abs(res.forecast));
                worst = std::max(worst, rel);
                if (rel > kReplicationRelTol) ++flagged;
                ++checked;
            }
        }
    }
    // Forests must refuse every attempt, both directly and inside a backtest.
    ForestConfig fc;
    fc.n_trees = 5;
    fc.seed = 1;
    const auto norm = fit_normalizer(std::span<const FeatureRow>([&] {
        std::vector<FeatureRow> rows;
        for (std::size_t i = 0; i < 1000; ++i) rows.push_back(f.dataset.rows[i].features);
        return rows;
    }()));
    Eigen::MatrixXd X(1000, 41);
    Eigen::VectorXd y(1000);
    for (Eigen::Index i = 0; i < 1000; ++i) {
        const auto z = norm.transform(f.dataset.rows[static_cast<std::size_t>(i)].features.values);
        for (Eigen::Index j = 0; j < 41; ++j) X(i, j) = z[static_cast<std::size_t>(j)];
        y(i) = f.dataset.rows[static_cast<std::size_t>(i)].realized_var;
    }
    const RegressionModel forest = fit_forest(X, y, fc);
    std::size_t refused = 0;
    std::size_t attempts = 0;
    for (std::size_t i = 1000; i < f.dataset.rows.size(); ++i) {
        const auto z = apply_normalizer(norm, f.dataset.rows[i].features);
        ++attempts;
        try {
            (void)daily_weights(forest, z, RegressionMode::RegI, nullptr);
        } catch (const NotPiecewiseLinear&) {
            ++refused;
        }
    }
    bool backtest_refused = false;
    try {
        auto cfg = f.cfg;
        cfg.depth_grid = {3};
        cfg.forest.n_trees = 2;
        (void)run_backtest(f.dataset, Algorithm::Forest, RegressionMode::RegII, cfg, f.market.market.chains);
    } catch (const NotPiecewiseLinear&) {
        backtest_refused = true;
    }
    const bool pass = checked == 6 * 90 && flagged == 0 && refused == attempts && backtest_refused;
    return {pass, std::to_string(checked) + " linear/ridge/fnn days replicated, max relative residual " +
                      fmt("%.3g", worst) + "; forest refused " + std::to_string(refused) + "/" +
                      std::to_string(attempts) +
                      (backtest_refused ? " and in backtest" : " (backtest did not refuse)")};
}

// ---- criterion 3 ----------------------------------------------------------

std::pair<bool, std::string> fnn_local_affine() {
    const auto& r = fixture_report(Algorithm::Fnn, RegressionMode::RegI);
    if (!r.final_model) return {false, "no fitted network"};
    const auto& model = r.final_model->model;
    std::mt19937_64 rng(2024);
    std::normal_distribution<double> z;
    double worst = 0.0;
    int active = 0;
    std::vector<std::vector<double>> points;
    for (int i = 0; i < 1000; ++i) {
        std::vector<double> x(41);
        for (auto& v : x) v = z(rng);
        const auto la = local_affine(model, x);
        const double f = predict(model, x);
        worst = std::max(worst, std::abs(la.evaluate(x) - f) / std::max(1.0, std::abs(f)));
        active += la.output_active ? 1 : 0;
        points.push_back(std::move(x));
    }
    double worst_perturbed = 0.0;
    for (int i = 0; i < 100; ++i) {
        const auto& x = points[static_cast<std::size_t>(i)];
        const auto la = local_affine(model, x);
        auto xp = x;
        for (auto& v : xp) v += kPerturbation * z(rng);
        const double f = predict(model, xp);
        worst_perturbed = std::max(worst_perturbed, std::abs(la.evaluate(xp) - f) / std::max(1.0, std::abs(f)));
    }
    const bool pass = worst <= kLocalAffineRelTol && worst_perturbed <= kLocalAffineRelTol;
    return {pass, "1000 inputs (" + std::to_string(active) + " with active output): max error " + fmt("%.3g", worst) +
                      "; 100 perturbations: " + fmt("%.3g", worst_perturbed)};
}

// ---- criterion 4 ----------------------------------------------------------

std::pair<bool, std::string> gradient_check() {
    Eigen::MatrixXd X(3, 4);
    X << 0.5, -1.2, 0.3, 0.8, -0.7, 0.4, 1.1, -0.2, 0.9, 0.6, -0.5, 0.1;
    Eigen::VectorXd y(3);
    y << 0.4, -0.1, 0.7;
    const double lambda = 0.3;
    FnnModel m;
    double margin = 0.0;
    for (std::uint64_t seed = 1; seed < 1000; ++seed) {
        m = init_fnn(4, 4, seed, 0.6);
        for (std::size_t i = 0; i < m.b1.size(); ++i) m.b1[i] = 0.05 * static_cast<double>(i + 1);
        margin = std::numeric_limits<double>::infinity();
        int active = 0;
        for (Eigen::Index i = 0; i < 3; ++i) {
            const Eigen::VectorXd row = X.row(i).transpose();
            const auto a = m.activate(as_span(row));
            for (double h : a.hidden_pre) margin = std::min(margin, std::abs(h));
            margin = std::min(margin, std::abs(a.output_pre));
            active += a.output_on ? 1 : 0;
        }
        if (margin > kGradientMargin && active >= 2) break;
    }
    if (margin <= kGradientMargin) return {false, "no fixture with ReLU margins above 1e-3"};

    const auto g = fnn_loss_gradient(m, X, y, lambda);
    std::vector<double> analytic(g.w1);
    analytic.insert(analytic.end(), g.b1.begin(), g.b1.end());
    analytic.insert(analytic.end(), g.w2.begin(), g.w2.end());
    analytic.push_back(g.b2);
    std::vector<double*> params;
    for (auto& v : m.w1) params.push_back(&v);
    for (auto& v : m.b1) params.push_back(&v);
    for (auto& v : m.w2) params.push_back(&v);
    params.push_back(&m.b2);

    double worst = 0.0;
    const double h = 1e-6;
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double saved = *params[i];
        *params[i] = saved + h;
        const double up = fnn_loss(m, X, y, lambda);
        *params[i] = saved - h;
        const double down = fnn_loss(m, X, y, lambda);
        *params[i] = saved;
        const double fd = (up - down) / (2 * h);
        worst = std::max(worst, std::abs(fd - analytic[i]) / std::max(1e-3, std::abs(fd) + std::abs(analytic[i])));
    }
    return {worst < kGradientRelTol, std::to_string(params.size()) + " parameters on a 3x4 fixture (margin " +
                                         fmt("%.2g", margin) + "): max relative error " + fmt("%.3g", worst)};
}

// ---- criterion 5 ----------------------------------------------------------

std::pair<bool, std::string> ridge_limits() {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> z;
    Eigen::MatrixXd X(50, 5);
    Eigen::VectorXd y(50);
    for (Eigen::Index i = 0; i < 50; ++i) {
        double t = 0.3;
        for (Eigen::Index j = 0; j < 5; ++j) {
            X(i, j) = z(rng);
            t += static_cast<double>(j + 1) * X(i, j);
        }
        y(i) = t + 0.2 * z(rng);
    }
    const auto ols = fit_ols(X, y);
    const auto r0 = fit_ridge(X, y, 0.0);
    double diff = std::abs(ols.intercept - r0.intercept);
    for (std::size_t j = 0; j < 5; ++j) diff = std::max(diff, std::abs(ols.coefficients[j] - r0.coefficients[j]));
    const auto big = fit_ridge(X, y, kRidgeHugeLambda);
    double big_norm = 0.0;
    for (double c : big.coefficients) big_norm += c * c;
    big_norm = std::sqrt(big_norm);
    bool monotone = true;
    double prev = std::numeric_limits<double>::infinity();
    for (double lambda : {0.0, 1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3, 1e4}) {
        double n = 0.0;
        for (double c : fit_ridge(X, y, lambda).coefficients) n += c * c;
        n = std::sqrt(n);
        monotone = monotone && n <= prev + 1e-12;
        prev = n;
    }
    const bool pass = diff <= kRidgeOlsTol && big_norm <= kRidgeShrunkNorm &&
                      std::abs(big.intercept - y.mean()) <= 1e-6 && monotone;
    return {pass, "|ridge(0) - OLS| = " + fmt("%.3g", diff) + ", |b(1e12)| = " + fmt("%.3g", big_norm) +
                      ", norm non-increasing in lambda: " + (monotone ? "yes" : "no")};
}

// ---- criterion 6 ----------------------------------------------------------

std::pair<bool, std::string> folds() {
    const auto plans = rolling_splits(1090, 1000, 30, 30);
    bool shape = plans.size() == 3;
    for (std::size_t k = 0; shape && k < 3; ++k) {
        const std::size_t s = 1000 + 30 * k;
        shape = plans[k].train == IndexRange{0, s - 30} && plans[k].test == IndexRange{s, s + 30};
    }
    const auto& f = fixture();
    const auto& r = fixture_report(Algorithm::Ridge, RegressionMode::RegI);
    std::size_t violations = 0;
    for (const auto& fold : r.folds) {
        const std::size_t test_price = f.dataset.rows[fold.plan.test.begin].price_index;
        for (std::size_t i = 0; i < fold.n_train; ++i) {
            // Training row i's target reads prices up to price_index + horizon.
            if (f.dataset.rows[i].price_index + 30 >= test_price) ++violations;
            if (fold.plan.test.contains(i)) ++violations;
        }
    }
    return {shape && violations == 0 && r.predictions.size() == 90,
            "3 folds over 1090 rows (train [0,970|1000|1030), tests of 30); " + std::to_string(violations) +
                " training targets overlap a test period; " + std::to_string(r.predictions.size()) + " predictions"};
}

// ---- criterion 7 ----------------------------------------------------------

std::pair<bool, std::string> benchmark_identity() {
    std::size_t mismatches = 0;
    std::size_t n = 0;
    const auto& a = fixture_report(Algorithm::Benchmark, RegressionMode::RegI);
    const auto& b = fixture_report(Algorithm::Benchmark, RegressionMode::RegII);
    for (const auto* r : {&a, &b}) {
        for (const auto& p : r->predictions) {
            ++n;
            if (std::memcmp(&p.pred, &p.vix_star_sq, sizeof(double)) != 0) ++mismatches;
        }
    }
    const bool same = a.oos_r2 == b.oos_r2;
    return {mismatches == 0 && same && n == 180,
            std::to_string(n - mismatches) + "/" + std::to_string(n) +
                " benchmark predictions bit-identical to VIX*^2; R^2 equal across modes: " + (same ? "yes" : "no")};
}

// ---- criterion 8 ----------------------------------------------------------

std::pair<bool, std::string> experiment() {
    const auto t0 = Clock::now();
    SyntheticMarketConfig mc;
    mc.n_days = 2500;
    mc.premium = 1.15;
    mc.rng_seed = 42;
    const auto m = generate_synthetic_market(mc);
    FeatureConfig fc;
    fc.strikes_per_side = 20;
    const auto ds = assemble_dataset(m.market, fc);
    BacktestConfig cfg;
    cfg.fnn.optimizer = FnnOptimizer::Adam;
    cfg.fnn.learning_rate = 1e-3;
    cfg.fnn.epochs = 100;
    cfg.forest.n_trees = 100;
    cfg.seed = 42;
    cfg.jobs = jobs();

    auto r2 = [&](Algorithm a, RegressionMode mode) {
        const auto s = Clock::now();
        const double v = run_backtest(ds, a, mode, cfg).oos_r2;
        std::printf("  %-6s %s R^2 = %+.4f (%.0f s)\n", std::string(algorithm_name(a)).c_str(),
                    std::string(mode_name(mode)).c_str(), v, seconds_since(s));
        std::fflush(stdout);
        return v;
    };
    const double bench = r2(Algorithm::Benchmark, RegressionMode::RegII);
    const double fnn1 = r2(Algorithm::Fnn, RegressionMode::RegI);
    const double fnn2 = r2(Algorithm::Fnn, RegressionMode::RegII);
    const double rf1 = r2(Algorithm::Forest, RegressionMode::RegI);
    const double rf2 = r2(Algorithm::Forest, RegressionMode::RegII);
    const double secs = seconds_since(t0);

    const bool pass = fnn2 >= fnn1 && rf2 >= rf1 && bench > 0.0 && secs < kExperimentSeconds;
    return {pass, std::to_string(ds.rows.size()) + " rows, 41 options: FNN RegI " + fmt("%.4f", fnn1) + " / RegII " +
                      fmt("%.4f", fnn2) + ", RF RegI " + fmt("%.4f", rf1) + " / RegII " + fmt("%.4f", rf2) +
                      ", benchmark " + fmt("%.4f", bench) + ", " + fmt("%.0f", secs) + " s"};
}

// ---- criterion 9 ----------------------------------------------------------

std::pair<bool, std::string> r2_arithmetic() {
    const std::vector<double> y{1, 2, 3};
    const double at_mean = oos_r2(y, std::vector<double>{2, 2, 2});
    const double perfect = oos_r2(y, y);
    const double worse = oos_r2(y, std::vector<double>{3, 4, 3});
    bool constant_throws = false;
    try {
        (void)oos_r2(std::vector<double>{5, 5, 5}, y);
    } catch (const NumericalError&) {
        constant_throws = true;
    }
    const bool pass = std::abs(at_mean) <= kR2Tol && std::abs(perfect - 1.0) <= kR2Tol &&
                      std::abs(worse + 3.0) <= kR2Tol && constant_throws;
    return {pass, "mean forecast " + fmt("%g", at_mean) + ", perfect " + fmt("%g", perfect) + ", SSE 8/SST 2 " +
                      fmt("%g", worse) + ", constant actuals rejected: " + (constant_throws ? "yes" : "no")};
}

// ---- criterion 10 ---------------------------------------------------------

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::map<std::string, std::string> pipeline_outputs(const fs::path& root) {
    fs::remove_all(root);
    fs::create_directories(root);
    std::ofstream(root / "backtest.cfg") << "initial = 100\nstep = 30\nepochs = 5\nn_trees = 5\n";
    auto run = [](const std::vector<std::string>& args) {
        std::ostringstream out;
        std::ostringstream err;
        if (cli::run(args, out, err) != 0) throw Error("volidx " + args.front() + " failed: " + err.str());
    };
    run({"synth", "--seed", "11", "--days", "220", "--out", (root / "market").string()});
    for (const char* algo : {"vix", "linear", "ridge", "forest", "fnn"}) {
        for (const char* mode : {"reg1", "reg2"}) {
            std::vector<std::string> args{"backtest", "--data", (root / "market").string(), "--algo", algo, "--mode",
                                          mode, "--n-per-side", "10", "--config", (root / "backtest.cfg").string(),
                                          "--out", (root / "runs").string()};
            if (std::string(algo) != "forest") args.push_back("--weights");
            run(args);
        }
    }
    run({"report", "--in", (root / "runs").string(), "--out", (root / "report.txt").string()});
    std::map<std::string, std::string> files;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
        if (e.is_regular_file()) files[fs::relative(e.path(), root).string()] = slurp(e.path());
    }
    fs::remove_all(root);
    return files;
}

std::pair<bool, std::string> reproducibility() {
    const auto base = fs::temp_directory_path() / ("volidx_accept_" + std::to_string(std::random_device{}()));
    const auto a = pipeline_outputs(base / "a");
    const auto b = pipeline_outputs(base / "b");
    fs::remove_all(base);
    std::size_t differing = 0;
    for (const auto& [name, bytes] : a) {
        auto it = b.find(name);
        if (it == b.end() || it->second != bytes) ++differing;
    }
    const bool pass = a.size() == b.size() && differing == 0 && a.count("report.txt") == 1;
    return {pass, "synth -> backtest -> report twice: " + std::to_string(a.size()) + " files, " +
                      std::to_string(differing) + " differ"};
}

}  // namespace

int main() {
    run_criterion(1, flat_market_vix);
    run_criterion(2, replication);
    run_criterion(3, fnn_local_affine);
    run_criterion(4, gradient_check);
    run_criterion(5, ridge_limits);
    run_criterion(6, folds);
    run_criterion(7, benchmark_identity);
    run_criterion(8, experiment);
    run_criterion(9, r2_arithmetic);
    run_criterion(10, reproducibility);
    std::printf("%d of 10 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
