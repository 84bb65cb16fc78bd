#include "volidx/errors.hpp"
#include "volidx/validation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <map>
#include <thread>

namespace volidx {

namespace {

[[noreturn]] void rethrow_with_context(const std::string& ctx) {
    try {
        throw;
    } catch (const NotPiecewiseLinear& e) {
        throw NotPiecewiseLinear(ctx + e.what());
    } catch (const NotReplicable& e) {
        throw NotReplicable(ctx + e.what());
    } catch (const NumericalError& e) {
        throw NumericalError(ctx + e.what());
    } catch (const DataError& e) {
        throw DataError(ctx + e.what());
    } catch (const Error& e) {
        throw Error(ctx + e.what());
    }
}

bool uses_grid(Algorithm algo) {
    return algo == Algorithm::Ridge || algo == Algorithm::Fnn || algo == Algorithm::Forest;
}

/// The benchmark is the zero function in RegII whatever mode was asked for.
RegressionMode effective_mode(Algorithm algo, RegressionMode mode) {
    return algo == Algorithm::Benchmark ? RegressionMode::RegII : mode;
}

std::string hyperparam_label(Algorithm algo, double h) {
    if (!uses_grid(algo)) return "none";
    if (algo == Algorithm::Forest) {
        return static_cast<int>(h) == kUnlimitedDepth ? "inf" : std::to_string(static_cast<int>(h));
    }
    return format_number(h);
}

/// Grid values from strongest to weakest regularization.
std::vector<double> regularization_order(Algorithm algo, std::span<const double> grid) {
    std::vector<double> order(grid.begin(), grid.end());
    if (algo == Algorithm::Forest) {
        auto rank = [](double d) {
            return static_cast<int>(d) == kUnlimitedDepth ? std::numeric_limits<double>::infinity() : d;
        };
        std::stable_sort(order.begin(), order.end(), [&](double a, double b) { return rank(a) < rank(b); });
    } else {
        std::stable_sort(order.begin(), order.end(), std::greater<>());
    }
    return order;
}

Eigen::MatrixXd design(std::span<const DatasetRow> rows, std::span<const std::size_t> idx, const Normalizer& norm) {
    const auto d = static_cast<Eigen::Index>(norm.mean.size());
    Eigen::MatrixXd X(static_cast<Eigen::Index>(idx.size()), d);
    for (std::size_t k = 0; k < idx.size(); ++k) {
        const auto z = norm.transform(rows[idx[k]].features.values);
        for (Eigen::Index c = 0; c < d; ++c) X(static_cast<Eigen::Index>(k), c) = z[static_cast<std::size_t>(c)];
    }
    return X;
}

Eigen::VectorXd targets(std::span<const DatasetRow> rows, std::span<const std::size_t> idx, RegressionMode mode) {
    Eigen::VectorXd y(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) {
        const auto& r = rows[idx[k]];
        y(static_cast<Eigen::Index>(k)) = regression_target(mode, r.realized_var, r.vix_star_sq);
    }
    return y;
}

Normalizer normalizer_for(std::span<const DatasetRow> rows, std::span<const std::size_t> idx) {
    std::vector<std::vector<double>> values;
    values.reserve(idx.size());
    for (auto i : idx) values.push_back(rows[i].features.values);
    return fit_normalizer(std::span<const std::vector<double>>(values));
}

/// Rows of `candidates` whose realized-variance window closes before the
/// price date of `first_test`.
std::vector<std::size_t> purge_before(std::span<const DatasetRow> rows, std::span<const std::size_t> candidates,
                                      std::size_t first_test, std::size_t horizon) {
    std::vector<std::size_t> out;
    const std::size_t limit = rows[first_test].price_index;
    for (auto i : candidates) {
        if (rows[i].price_index + horizon < limit) out.push_back(i);
    }
    return out;
}

std::uint64_t fold_seed(std::uint64_t base, std::size_t fold) {
    return base + 1000003ULL * (static_cast<std::uint64_t>(fold) + 1);
}

struct FoldOutput {
    FoldSummary summary;
    std::vector<PredictionRecord> predictions;
    std::vector<PortfolioWeights> weights;
    std::vector<ReplicationRecord> replication;
    std::optional<FittedModel> model;
};

}  // namespace

RegressionModel fit_algorithm(Algorithm algo, double h, const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                              RegressionMode mode, const BacktestConfig& cfg, std::uint64_t seed) {
    switch (algo) {
        case Algorithm::Benchmark: {
            LinearModel zero;
            zero.coefficients.assign(static_cast<std::size_t>(X.cols()), 0.0);
            return zero;
        }
        case Algorithm::Linear: return fit_ols(X, y);
        case Algorithm::Ridge: return fit_ridge(X, y, h);
        case Algorithm::Fnn: {
            FnnTrainConfig c = cfg.fnn;
            c.seed = seed;
            c.shift_target_to_min = mode == RegressionMode::RegII && cfg.fnn_shift_reg2;
            return fit_fnn(X, y, h, c);
        }
        case Algorithm::Forest: {
            ForestConfig c = cfg.forest;
            c.max_depth = static_cast<int>(h);
            c.seed = seed;
            return fit_forest(X, y, c);
        }
    }
    throw DataError("unknown algorithm");
}

double tune(Algorithm algo, std::span<const double> grid, std::span<const DatasetRow> rows,
            std::span<const std::size_t> train, RegressionMode mode, const BacktestConfig& cfg, std::uint64_t seed) {
    if (!uses_grid(algo)) return std::numeric_limits<double>::quiet_NaN();
    if (grid.empty()) throw DataError("empty hyperparameter grid for " + std::string(algorithm_name(algo)));
    if (grid.size() == 1) return grid[0];
    const auto order = regularization_order(algo, grid);

    const auto split = static_cast<std::size_t>(std::floor(cfg.tune_fit_fraction * static_cast<double>(train.size())));
    if (split == 0 || split >= train.size()) throw DataError("tuning split leaves an empty part");
    const std::vector<std::size_t> eval(train.begin() + static_cast<std::ptrdiff_t>(split), train.end());
    const auto fit = purge_before(rows, train.subspan(0, split), eval.front(), cfg.purge);
    if (fit.size() < 2 || eval.size() < 2) {
        throw DataError("training window too short to tune " + std::string(algorithm_name(algo)));
    }
    const auto norm = normalizer_for(rows, fit);
    const auto X = design(rows, fit, norm);
    const auto y = targets(rows, fit, mode);
    const auto Xe = design(rows, eval, norm);
    std::vector<double> actual;
    for (auto i : eval) actual.push_back(rows[i].realized_var);

    double best = order.front();
    double best_score = -std::numeric_limits<double>::infinity();
    for (double h : order) {
        const auto model = fit_algorithm(algo, h, X, y, mode, cfg, seed);
        std::vector<double> pred;
        pred.reserve(eval.size());
        for (std::size_t k = 0; k < eval.size(); ++k) {
            const Eigen::VectorXd x = Xe.row(static_cast<Eigen::Index>(k)).transpose();
            const std::span<const double> xs(x.data(), static_cast<std::size_t>(x.size()));
            pred.push_back(reconstruct_variance(mode, predict(model, xs), rows[eval[k]].vix_star_sq));
        }
        const double score = oos_r2(actual, pred);
        if (score > best_score) {
            best_score = score;
            best = h;
        }
    }
    return best;
}

BacktestReport run_backtest(const Dataset& dataset, Algorithm algo, RegressionMode mode, const BacktestConfig& cfg,
                            std::span<const ChainSnapshot> chains) {
    const auto& rows = dataset.rows;
    const auto plans = rolling_splits(rows.size(), cfg.initial, cfg.step, cfg.purge);
    const RegressionMode fit_mode = effective_mode(algo, mode);

    std::vector<double> grid;
    if (algo == Algorithm::Forest) {
        for (int d : cfg.depth_grid) grid.push_back(d);
    } else if (uses_grid(algo)) {
        grid = cfg.lambda_grid;
    }

    std::map<Date, const ChainSnapshot*> snapshots;
    for (const auto& s : chains) snapshots[s.date()] = &s;

    auto run_fold = [&](std::size_t k) {
        const auto& plan = plans[k];
        FoldOutput out;
        out.summary.fold = k;
        out.summary.plan = plan;
        std::vector<std::size_t> window;
        for (std::size_t i = plan.train.begin; i < plan.train.end; ++i) window.push_back(i);
        const auto train = purge_before(rows, window, plan.test.begin, cfg.purge);
        out.summary.n_train = train.size();

        const std::uint64_t seed = fold_seed(cfg.seed, k);
        const double h = tune(algo, grid, rows, train, fit_mode, cfg, seed ^ 0x9e3779b97f4a7c15ULL);
        out.summary.hyperparam = hyperparam_label(algo, h);

        const auto norm = normalizer_for(rows, train);
        const auto model = fit_algorithm(algo, h, design(rows, train, norm), targets(rows, train, fit_mode),
                                         fit_mode, cfg, seed);

        for (std::size_t i = plan.test.begin; i < plan.test.end; ++i) {
            const auto& r = rows[i];
            const auto z = norm.transform(r.features.values);
            PredictionRecord p;
            p.date = r.date;
            p.actual = r.realized_var;
            p.vix_star_sq = r.vix_star_sq;
            p.pred = reconstruct_variance(fit_mode, predict(model, z), r.vix_star_sq);
            p.fold = k;
            p.hyperparam = out.summary.hyperparam;
            out.predictions.push_back(p);

            if (cfg.compute_weights) {
                auto it = snapshots.find(r.date);
                if (it == snapshots.end()) throw DataError("no chain snapshot for " + r.date.iso());
                auto pw = daily_weights(model, apply_normalizer(norm, r.features), fit_mode, &r.vix);
                out.replication.push_back({r.date, replication_check(pw, *it->second, p.pred)});
                out.weights.push_back(std::move(pw));
            }
        }
        if (k + 1 == plans.size()) out.model = FittedModel{model, norm, out.summary.hyperparam};
        return out;
    };

    std::vector<FoldOutput> outputs(plans.size());
    std::vector<std::exception_ptr> errors(plans.size());
    auto guarded = [&](std::size_t k) {
        try {
            try {
                outputs[k] = run_fold(k);
            } catch (const Error&) {
                rethrow_with_context("fold " + std::to_string(k) + " (test from " +
                                     rows[plans[k].test.begin].date.iso() + "): ");
            }
        } catch (...) {
            errors[k] = std::current_exception();
        }
    };

    const int jobs = std::max(1, std::min<int>(cfg.jobs, static_cast<int>(plans.size())));
    if (jobs == 1) {
        for (std::size_t k = 0; k < plans.size(); ++k) guarded(k);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> workers;
        for (int j = 0; j < jobs; ++j) {
            workers.emplace_back([&] {
                for (std::size_t k = next++; k < plans.size(); k = next++) guarded(k);
            });
        }
        for (auto& w : workers) w.join();
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }

    BacktestReport report;
    report.algorithm = algo;
    report.mode = mode;
    report.n_options = dataset.config.option_feature_count();
    for (auto& o : outputs) {
        report.folds.push_back(o.summary);
        std::move(o.predictions.begin(), o.predictions.end(), std::back_inserter(report.predictions));
        std::move(o.weights.begin(), o.weights.end(), std::back_inserter(report.weights));
        std::move(o.replication.begin(), o.replication.end(), std::back_inserter(report.replication));
        if (o.model) report.final_model = std::move(o.model);
    }
    std::vector<double> actual;
    std::vector<double> pred;
    for (const auto& p : report.predictions) {
        actual.push_back(p.actual);
        pred.push_back(p.pred);
    }
    report.oos_r2 = oos_r2(actual, pred);
    if (report.weights.size() >= 1) report.liquidity = liquidity_report(report.weights, cfg.materiality);
    return report;
}

void write_predictions_csv(const std::filesystem::path& path, const BacktestReport& report) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    out << "date,actual,pred,fold,hyperparam\n";
    for (const auto& p : report.predictions) {
        out << p.date.iso() << ',' << format_number(p.actual) << ',' << format_number(p.pred) << ',' << p.fold << ','
            << p.hyperparam << '\n';
    }
}

void write_summary_csv(const std::filesystem::path& path, const BacktestReport& report) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    out << "algorithm,mode,n_options,oos_r2\n";
    out << algorithm_name(report.algorithm) << ',' << mode_name(report.mode) << ',' << report.n_options << ','
        << format_number(report.oos_r2) << '\n';
}

}  // namespace volidx
