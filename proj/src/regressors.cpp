#include "volidx/regressors.hpp"

#include "volidx/errors.hpp"
#include "volidx/market_data.hpp"

#include <istream>
#include <ostream>
#include <string>

namespace volidx {

double LocalAffine::evaluate(std::span<const double> x) const {
    if (x.size() != coefficients.size()) throw DataError("local affine dimension mismatch");
    double v = constant;
    for (std::size_t i = 0; i < x.size(); ++i) v += coefficients[i] * x[i];
    return v;
}

int input_dimension(const RegressionModel& model) {
    struct Visitor {
        int operator()(const LinearModel& m) const { return static_cast<int>(m.coefficients.size()); }
        int operator()(const FnnModel& m) const { return m.input_dim; }
        int operator()(const ForestModel& m) const { return m.input_dim; }
    };
    return std::visit(Visitor{}, model);
}

double predict(const RegressionModel& model, std::span<const double> x) {
    return std::visit([&](const auto& m) { return m.predict(x); }, model);
}

LocalAffine local_affine(const RegressionModel& model, std::span<const double> x) {
    if (static_cast<int>(x.size()) != input_dimension(model)) {
        throw DataError("input has " + std::to_string(x.size()) + " features, model expects " +
                        std::to_string(input_dimension(model)));
    }
    if (const auto* lin = std::get_if<LinearModel>(&model)) {
        return {lin->coefficients, lin->intercept, {}, true};
    }
    if (std::holds_alternative<ForestModel>(model)) {
        throw NotPiecewiseLinear("random forest predictions are step functions of the features and have no "
                                 "affine form; option weights cannot be extracted");
    }
    const auto& net = std::get<FnnModel>(model);
    const auto act = net.activate(x);
    LocalAffine la;
    la.hidden_pattern = act.hidden_on;
    la.output_active = act.output_on;
    la.coefficients.assign(x.size(), 0.0);
    la.constant = net.output_shift;
    if (!act.output_on) return la;

    double c = net.b2;
    const auto d = static_cast<std::size_t>(net.input_dim);
    for (std::size_t j = 0; j < static_cast<std::size_t>(net.hidden); ++j) {
        if (!act.hidden_on[j]) continue;
        const double w = net.w2[j];
        c += w * net.b1[j];
        const double* row = net.w1.data() + j * d;
        for (std::size_t i = 0; i < d; ++i) la.coefficients[i] += w * row[i];
    }
    for (auto& v : la.coefficients) v *= net.output_scale;
    la.constant += net.output_scale * c;
    return la;
}

namespace {

void write_values(std::ostream& out, std::span<const double> values) {
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) out << ' ';
        out << format_number(values[i]);
    }
    out << '\n';
}

void expect(std::istream& in, const std::string& token) {
    std::string got;
    if (!(in >> got) || got != token) {
        throw DataError("model file: expected '" + token + "', found '" + got + "'");
    }
}

template <typename T>
T read_value(std::istream& in, const char* what) {
    T v{};
    if (!(in >> v)) throw DataError(std::string("model file: cannot read ") + what);
    return v;
}

std::vector<double> read_values(std::istream& in, std::size_t n, const char* what) {
    std::vector<double> v(n);
    for (auto& x : v) x = read_value<double>(in, what);
    return v;
}

}  // namespace

void write_model(std::ostream& out, const RegressionModel& model) {
    out << "volidx-model 1\n";
    if (const auto* lin = std::get_if<LinearModel>(&model)) {
        out << "linear " << lin->coefficients.size() << ' ' << format_number(lin->ridge_lambda) << ' '
            << format_number(lin->intercept) << '\n';
        write_values(out, lin->coefficients);
    } else if (const auto* net = std::get_if<FnnModel>(&model)) {
        out << "fnn " << net->input_dim << ' ' << net->hidden << ' ' << format_number(net->lambda) << ' '
            << format_number(net->output_shift) << ' ' << format_number(net->output_scale) << ' '
            << net->epochs_trained << ' ' << format_number(net->final_loss) << '\n';
        const auto d = static_cast<std::size_t>(net->input_dim);
        for (std::size_t j = 0; j < static_cast<std::size_t>(net->hidden); ++j) {
            write_values(out, std::span<const double>(net->w1.data() + j * d, d));
        }
        write_values(out, net->b1);
        write_values(out, net->w2);
        out << format_number(net->b2) << '\n';
    } else {
        const auto& f = std::get<ForestModel>(model);
        out << "forest " << f.input_dim << ' ' << f.max_depth << ' ' << f.trees.size() << '\n';
        for (std::size_t t = 0; t < f.trees.size(); ++t) {
            const auto& tree = f.trees[t];
            out << "tree " << f.tree_seeds[t] << ' ' << tree.nodes.size() << '\n';
            for (const auto& n : tree.nodes) {
                out << n.feature << ' ' << format_number(n.threshold) << ' ' << n.left << ' ' << n.right << ' '
                    << format_number(n.value) << '\n';
            }
        }
    }
}

RegressionModel read_model(std::istream& in) {
    expect(in, "volidx-model");
    const int version = read_value<int>(in, "version");
    if (version != 1) throw DataError("model file: unsupported version " + std::to_string(version));
    const auto type = read_value<std::string>(in, "model type");
    if (type == "linear") {
        LinearModel m;
        const auto dim = read_value<std::size_t>(in, "dimension");
        m.ridge_lambda = read_value<double>(in, "lambda");
        m.intercept = read_value<double>(in, "intercept");
        m.coefficients = read_values(in, dim, "coefficients");
        return m;
    }
    if (type == "fnn") {
        FnnModel m;
        m.input_dim = read_value<int>(in, "dimension");
        m.hidden = read_value<int>(in, "hidden width");
        if (m.input_dim < 1 || m.hidden < 1) throw DataError("model file: bad network dimensions");
        m.lambda = read_value<double>(in, "lambda");
        m.output_shift = read_value<double>(in, "output shift");
        m.output_scale = read_value<double>(in, "output scale");
        m.epochs_trained = read_value<int>(in, "epochs");
        m.final_loss = read_value<double>(in, "final loss");
        const auto d = static_cast<std::size_t>(m.input_dim);
        const auto h = static_cast<std::size_t>(m.hidden);
        m.w1 = read_values(in, d * h, "hidden weights");
        m.b1 = read_values(in, h, "hidden biases");
        m.w2 = read_values(in, h, "output weights");
        m.b2 = read_value<double>(in, "output bias");
        return m;
    }
    if (type == "forest") {
        ForestModel m;
        m.input_dim = read_value<int>(in, "dimension");
        m.max_depth = read_value<int>(in, "max depth");
        const auto n_trees = read_value<std::size_t>(in, "tree count");
        for (std::size_t t = 0; t < n_trees; ++t) {
            expect(in, "tree");
            m.tree_seeds.push_back(read_value<std::uint64_t>(in, "tree seed"));
            const auto n_nodes = read_value<std::size_t>(in, "node count");
            DecisionTree tree;
            tree.nodes.resize(n_nodes);
            for (auto& n : tree.nodes) {
                n.feature = read_value<int>(in, "node feature");
                n.threshold = read_value<double>(in, "node threshold");
                n.left = read_value<int>(in, "node left");
                n.right = read_value<int>(in, "node right");
                n.value = read_value<double>(in, "node value");
            }
            m.trees.push_back(std::move(tree));
        }
        return m;
    }
    throw DataError("model file: unknown model type '" + type + "'");
}

}  // namespace volidx
