#include "volidx/cli.hpp"

#include "volidx/errors.hpp"
#include "volidx/kv_config.hpp"
#include "volidx/model_io.hpp"
#include "volidx/synthetic_market.hpp"
#include "volidx/validation.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

namespace volidx::cli {

namespace {

namespace fs = std::filesystem;

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto b = item.find_first_not_of(' ');
        const auto e = item.find_last_not_of(' ');
        if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
    }
    return out;
}

double parse_double(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const double d = std::stod(v, &used);
        if (used == v.size()) return d;
    } catch (const std::exception&) {
    }
    throw DataError("config key '" + key + "': not a number: '" + v + "'");
}

long long parse_int(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const long long i = std::stoll(v, &used);
        if (used == v.size()) return i;
    } catch (const std::exception&) {
    }
    throw DataError("config key '" + key + "': not an integer: '" + v + "'");
}

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "1" || v == "true") return true;
    if (v == "0" || v == "false") return false;
    throw DataError("config key '" + key + "': expected true/false");
}

/// Backtest keys of the flat configuration file.
void apply_backtest_overrides(BacktestConfig& cfg, const std::map<std::string, std::string>& kv) {
    for (const auto& [key, value] : kv) {
        if (key == "initial") cfg.initial = static_cast<std::size_t>(parse_int(key, value));
        else if (key == "step") cfg.step = static_cast<std::size_t>(parse_int(key, value));
        else if (key == "purge") cfg.purge = static_cast<std::size_t>(parse_int(key, value));
        else if (key == "tune_fit_fraction") cfg.tune_fit_fraction = parse_double(key, value);
        else if (key == "epochs") cfg.fnn.epochs = static_cast<int>(parse_int(key, value));
        else if (key == "learning_rate") cfg.fnn.learning_rate = parse_double(key, value);
        else if (key == "batch_size") cfg.fnn.batch_size = static_cast<int>(parse_int(key, value));
        else if (key == "optimizer") {
            if (value == "sgd") cfg.fnn.optimizer = FnnOptimizer::Sgd;
            else if (value == "adam") cfg.fnn.optimizer = FnnOptimizer::Adam;
            else throw DataError("config key 'optimizer': expected sgd or adam");
        } else if (key == "scale_target") cfg.fnn.scale_target = parse_bool(key, value);
        else if (key == "fnn_shift_reg2") cfg.fnn_shift_reg2 = parse_bool(key, value);
        else if (key == "n_trees") cfg.forest.n_trees = static_cast<int>(parse_int(key, value));
        else if (key == "bootstrap") cfg.forest.bootstrap = parse_bool(key, value);
        else if (key == "lambda_grid") {
            cfg.lambda_grid.clear();
            for (const auto& s : split_list(value)) cfg.lambda_grid.push_back(parse_double(key, s));
        } else if (key == "depth_grid") {
            cfg.depth_grid.clear();
            for (const auto& s : split_list(value)) {
                cfg.depth_grid.push_back(s == "inf" ? kUnlimitedDepth : static_cast<int>(parse_int(key, s)));
            }
        } else if (key == "materiality") cfg.materiality = parse_double(key, value);
        else throw DataError("unknown backtest config key '" + key + "'");
    }
}

std::ofstream open_output(const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    return out;
}

std::string error_kind(const std::exception& e) {
    if (dynamic_cast<const NotPiecewiseLinear*>(&e)) return "NotPiecewiseLinear";
    if (dynamic_cast<const NotReplicable*>(&e)) return "NotReplicable";
    if (dynamic_cast<const NumericalError*>(&e)) return "NumericalError";
    if (dynamic_cast<const DataError*>(&e)) return "DataError";
    return "error";
}

std::string run_stem(Algorithm algo, RegressionMode mode, int n_options) {
    return std::string(algorithm_name(algo)) + "_" + std::string(mode_name(mode)) + "_n" +
           std::to_string(n_options);
}

// ---- synth ----------------------------------------------------------------

struct SynthArgs {
    std::uint64_t seed = 42;
    int days = 2500;
    fs::path out;
    fs::path config;
};

void cmd_synth(const SynthArgs& a, std::ostream& out) {
    SyntheticMarketConfig cfg;
    if (!a.config.empty()) apply_config_overrides(cfg, load_kv_file(a.config));
    cfg.rng_seed = a.seed;
    cfg.n_days = a.days;
    const auto market = generate_synthetic_market(cfg);
    write_market_directory(a.out, market.market);
    out << "wrote " << market.market.chains.size() << " days to " << a.out.string() << '\n';
}

// ---- vix ------------------------------------------------------------------

struct VixArgs {
    fs::path data;
    int horizon = 30;
    std::optional<int> n_per_side;
    int stride = 1;
    fs::path out;
};

void cmd_vix(const VixArgs& a, std::ostream& out, std::ostream& err) {
    const auto market = load_market_directory(a.data);
    VixOptions opts;
    opts.horizon_days = a.horizon;
    opts.selection.strikes_per_side = a.n_per_side;
    opts.selection.stride = a.stride;
    auto file = open_output(a.out);
    file << "date,vix_star,option_count,sigma1_sq,sigma2_sq\n";
    std::size_t written = 0;
    std::size_t skipped = 0;
    for (const auto& snap : market.chains) {
        try {
            const auto r = synthetic_vix(snap, opts);
            file << r.date.iso() << ',' << format_number(r.value) << ',' << r.option_count << ','
                 << format_number(r.term_variances[0]) << ','
                 << (r.term_variances.size() > 1 ? format_number(r.term_variances[1]) : std::string()) << '\n';
            ++written;
        } catch (const Error& e) {
            err << "skip " << snap.date().iso() << ": " << e.what() << '\n';
            ++skipped;
        }
    }
    out << "wrote " << written << " index values to " << a.out.string() << " (" << skipped << " dates skipped)\n";
}

// ---- backtest -------------------------------------------------------------

struct BacktestArgs {
    fs::path data;
    std::string algo = "linear";
    std::string mode = "reg1";
    int n_per_side = 20;
    int horizon = 30;
    int step_spacing = 1;
    double base_spacing = 5.0;
    bool returns_features = false;
    bool weights = false;
    fs::path out;
    int jobs = 1;
    std::uint64_t seed = 0;
    fs::path config;
};

void cmd_backtest(const BacktestArgs& a, std::ostream& out) {
    if (a.weights && a.returns_features) {
        throw NotReplicable("--weights conflicts with --with-returns-features: returns features are not tradable");
    }
    FeatureConfig fcfg;
    fcfg.horizon_days = a.horizon;
    fcfg.strikes_per_side = a.n_per_side;
    fcfg.strike_step = a.step_spacing;
    fcfg.base_spacing = a.base_spacing;
    fcfg.include_returns_features = a.returns_features;
    fcfg.validate();

    BacktestConfig bcfg;
    bcfg.purge = static_cast<std::size_t>(a.horizon);
    if (!a.config.empty()) apply_backtest_overrides(bcfg, load_kv_file(a.config));
    bcfg.seed = a.seed;
    bcfg.jobs = a.jobs;
    bcfg.compute_weights = a.weights;

    const auto algo = parse_algorithm(a.algo);
    const auto mode = parse_mode(a.mode);
    const auto market = load_market_directory(a.data);
    const auto dataset = assemble_dataset(market, fcfg);
    const auto report = run_backtest(dataset, algo, mode, bcfg, market.chains);

    fs::create_directories(a.out);
    const auto stem = run_stem(algo, mode, fcfg.option_feature_count());
    write_predictions_csv(a.out / (stem + "_predictions.csv"), report);
    write_summary_csv(a.out / (stem + "_summary.csv"), report);
    if (report.final_model) {
        ModelBundle b;
        b.algorithm = algo;
        b.mode = algo == Algorithm::Benchmark ? RegressionMode::RegII : mode;
        b.features = fcfg;
        b.normalizer = report.final_model->normalizer;
        b.hyperparam = report.final_model->hyperparam;
        b.model = report.final_model->model;
        save_bundle(a.out / (stem + "_model.txt"), b);
    }
    if (a.weights) {
        write_weights_csv(a.out / (stem + "_weights.csv"), report.weights);
        write_liquidity_csv(a.out / (stem + "_liquidity.csv"), report.liquidity);
        double worst = 0.0;
        std::size_t flagged = 0;
        for (const auto& r : report.replication) {
            worst = std::max(worst, r.result.residual);
            flagged += r.result.flagged ? 1 : 0;
        }
        out << "replication: " << report.replication.size() << " days, max residual " << format_number(worst)
            << ", flagged " << flagged << '\n';
    }
    out << algorithm_name(algo) << ' ' << mode_name(mode) << " n_options=" << report.n_options
        << " folds=" << report.folds.size() << " oos_r2=" << format_number(report.oos_r2) << '\n';
}

// ---- weights --------------------------------------------------------------

struct WeightsArgs {
    fs::path model;
    fs::path data;
    std::string date;
    fs::path out;
    fs::path summary;
    double materiality = 1e-6;
};

void cmd_weights(const WeightsArgs& a, std::ostream& out) {
    const auto bundle = load_bundle(a.model);
    if (bundle.features.include_returns_features) {
        throw NotReplicable("model uses returns features; its forecast is not an option portfolio");
    }
    if (std::holds_alternative<ForestModel>(bundle.model)) {
        // Surface the contract before touching any data.
        (void)local_affine(bundle.model, std::vector<double>(bundle.normalizer.mean.size(), 0.0));
    }
    const auto market = load_market_directory(a.data);
    std::optional<Date> only;
    if (!a.date.empty()) only = Date::parse(a.date);

    VixOptions vix_opts;
    vix_opts.horizon_days = bundle.features.horizon_days;
    vix_opts.selection.strikes_per_side = bundle.features.strikes_per_side;
    vix_opts.selection.stride = bundle.features.strike_step;

    std::vector<PortfolioWeights> series;
    double worst = 0.0;
    for (const auto& snap : market.chains) {
        if (only && snap.date() != *only) continue;
        const auto row = apply_normalizer(bundle.normalizer, build_feature_row(snap, market.prices, bundle.features));
        std::optional<VixResult> vix;
        if (bundle.mode == RegressionMode::RegII) vix = synthetic_vix(snap, vix_opts);
        auto pw = daily_weights(bundle.model, row, bundle.mode, vix ? &*vix : nullptr);
        const double forecast =
            reconstruct_variance(bundle.mode, predict(bundle.model, row.values), vix ? vix->variance() : 0.0);
        const auto check = replication_check(pw, snap, forecast);
        if (check.flagged) {
            throw NumericalError("replication residual " + format_number(check.residual) + " on " +
                                 snap.date().iso());
        }
        worst = std::max(worst, check.residual);
        series.push_back(std::move(pw));
    }
    if (series.empty()) throw DataError("no snapshot matches " + (only ? only->iso() : std::string("the data")));
    write_weights_csv(a.out, series);
    if (!a.summary.empty()) write_liquidity_csv(a.summary, liquidity_report(series, a.materiality));
    out << "wrote weights for " << series.size() << " day(s) to " << a.out.string() << ", max residual "
        << format_number(worst) << '\n';
}

// ---- report ---------------------------------------------------------------

struct ReportArgs {
    fs::path in;
    fs::path out;
};

std::string render_tables(const std::map<std::tuple<int, int, int>, double>& cells) {
    const int option_rows[] = {21, 41, 61, 81};
    const Algorithm columns[] = {Algorithm::Benchmark, Algorithm::Linear, Algorithm::Ridge, Algorithm::Forest,
                                 Algorithm::Fnn};
    std::ostringstream s;
    char buf[64];
    for (auto mode : {RegressionMode::RegI, RegressionMode::RegII}) {
        s << (mode == RegressionMode::RegI ? "Regression I" : "Regression II") << ": out-of-sample R^2\n";
        std::snprintf(buf, sizeof buf, "%-10s", "options");
        s << buf;
        for (auto c : columns) {
            std::snprintf(buf, sizeof buf, "%10s", std::string(algorithm_label(c)).c_str());
            s << buf;
        }
        s << '\n';
        for (int n : option_rows) {
            std::snprintf(buf, sizeof buf, "%-10d", n);
            s << buf;
            for (auto c : columns) {
                // The benchmark does not depend on the mode.
                const int m = c == Algorithm::Benchmark ? -1 : static_cast<int>(mode);
                auto it = cells.find({n, static_cast<int>(c), m});
                if (it == cells.end()) std::snprintf(buf, sizeof buf, "%10s", "-");
                else std::snprintf(buf, sizeof buf, "%10.4f", it->second);
                s << buf;
            }
            s << '\n';
        }
        s << '\n';
    }
    return s.str();
}

void cmd_report(const ReportArgs& a, std::ostream& out) {
    if (!fs::is_directory(a.in)) throw DataError("not a directory: " + a.in.string());
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(a.in)) {
        const auto name = entry.path().filename().string();
        if (name.size() > 12 && name.ends_with("_summary.csv")) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw DataError("no *_summary.csv files in " + a.in.string());

    std::map<std::tuple<int, int, int>, double> cells;
    for (const auto& f : files) {
        std::ifstream in(f);
        std::string header;
        std::string line;
        if (!std::getline(in, header) || header != "algorithm,mode,n_options,oos_r2" || !std::getline(in, line)) {
            throw DataError(f.string() + ": not a backtest summary");
        }
        const auto parts = split_list(line);
        if (parts.size() != 4) throw DataError(f.string() + ":2: expected 4 fields");
        const auto algo = parse_algorithm(parts[0]);
        const auto mode = parse_mode(parts[1]);
        const int n = static_cast<int>(parse_int("n_options", parts[2]));
        const int m = algo == Algorithm::Benchmark ? -1 : static_cast<int>(mode);
        cells[{n, static_cast<int>(algo), m}] = parse_double("oos_r2", parts[3]);
    }
    const auto text = render_tables(cells);
    if (a.out.empty()) {
        out << text;
    } else {
        open_output(a.out) << text;
        out << "wrote " << a.out.string() << '\n';
    }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Option-implied volatility indexing and forecasting"};
    app.require_subcommand(1);

    SynthArgs synth;
    auto* s = app.add_subcommand("synth", "generate a synthetic option market");
    s->add_option("--seed", synth.seed, "random seed");
    s->add_option("--days", synth.days, "trading days")->check(CLI::PositiveNumber);
    s->add_option("--out", synth.out, "output directory")->required();
    s->add_option("--config", synth.config, "key = value file")->check(CLI::ExistingFile);

    VixArgs vix;
    auto* v = app.add_subcommand("vix", "compute the synthetic index for every date");
    v->add_option("--data", vix.data, "market directory")->required()->check(CLI::ExistingDirectory);
    v->add_option("--horizon", vix.horizon, "horizon in calendar days");
    v->add_option("--n-per-side", vix.n_per_side, "strikes considered on each side of K0");
    v->add_option("--stride", vix.stride, "use every k-th listed strike");
    v->add_option("--out", vix.out, "output CSV")->required();

    BacktestArgs bt;
    auto* b = app.add_subcommand("backtest", "walk-forward out-of-sample backtest");
    b->add_option("--data", bt.data, "market directory")->required()->check(CLI::ExistingDirectory);
    b->add_option("--algo", bt.algo, "vix, linear, ridge, forest or fnn")
        ->check(CLI::IsMember({"vix", "linear", "ridge", "forest", "fnn"}));
    b->add_option("--mode", bt.mode, "reg1 or reg2")->check(CLI::IsMember({"reg1", "reg2"}));
    b->add_option("--n-per-side", bt.n_per_side, "strikes on each side of K0")->check(CLI::PositiveNumber);
    b->add_option("--horizon", bt.horizon, "forecast horizon in days")->check(CLI::PositiveNumber);
    b->add_option("--step-spacing", bt.step_spacing, "strike grid step in listed spacings")
        ->check(CLI::IsMember({1, 2}));
    b->add_option("--base-spacing", bt.base_spacing, "listed strike spacing");
    b->add_flag("--with-returns-features", bt.returns_features, "append returns and variance features");
    b->add_flag("--weights", bt.weights, "write daily option weights and replication checks");
    b->add_option("--out", bt.out, "output directory")->required();
    b->add_option("--jobs", bt.jobs, "worker threads")->check(CLI::PositiveNumber);
    b->add_option("--seed", bt.seed, "model seed");
    b->add_option("--config", bt.config, "key = value file")->check(CLI::ExistingFile);

    WeightsArgs w;
    auto* wc = app.add_subcommand("weights", "option weights of a saved model");
    wc->add_option("--model", w.model, "model file from backtest")->required()->check(CLI::ExistingFile);
    wc->add_option("--data", w.data, "market directory")->required()->check(CLI::ExistingDirectory);
    wc->add_option("--date", w.date, "YYYY-MM-DD; every date when omitted");
    wc->add_option("--out", w.out, "weights CSV")->required();
    wc->add_option("--summary", w.summary, "per-day summary CSV");
    wc->add_option("--materiality", w.materiality, "|weight| above which a leg counts as material");

    ReportArgs rep;
    auto* r = app.add_subcommand("report", "render backtest summaries as tables");
    r->add_option("--in", rep.in, "backtest output directory")->required();
    r->add_option("--out", rep.out, "output text file (stdout when omitted)");

    std::vector<std::string> argv_store{"volidx"};
    argv_store.insert(argv_store.end(), args.begin(), args.end());
    std::vector<char*> argv;
    for (auto& a : argv_store) argv.push_back(a.data());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? 0 : 2;
    }

    const std::string sub = app.get_subcommands().front()->get_name();
    try {
        if (sub == "synth") cmd_synth(synth, out);
        else if (sub == "vix") cmd_vix(vix, out, err);
        else if (sub == "backtest") cmd_backtest(bt, out);
        else if (sub == "weights") cmd_weights(w, out);
        else cmd_report(rep, out);
    } catch (const std::exception& e) {
        err << "volidx " << sub << ": " << error_kind(e) << ": " << e.what() << '\n';
        return 1;
    }
    return 0;
}

}  // namespace volidx::cli
