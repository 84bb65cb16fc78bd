#include "volidx/model_io.hpp"

#include "volidx/errors.hpp"

#include <fstream>

namespace volidx {

namespace {

void write_list(std::ostream& out, const char* key, std::span<const double> v) {
    out << key << ' ' << v.size();
    for (double x : v) out << ' ' << format_number(x);
    out << '\n';
}

void write_list(std::ostream& out, const char* key, std::span<const int> v) {
    out << key << ' ' << v.size();
    for (int x : v) out << ' ' << x;
    out << '\n';
}

template <typename T>
T read_one(std::istream& in, const std::string& key) {
    std::string got;
    if (!(in >> got) || got != key) throw DataError("bundle: expected '" + key + "', found '" + got + "'");
    T v{};
    if (!(in >> v)) throw DataError("bundle: bad value for '" + key + "'");
    return v;
}

template <typename T>
std::vector<T> read_list(std::istream& in, const std::string& key) {
    const auto n = read_one<std::size_t>(in, key);
    std::vector<T> v(n);
    for (auto& x : v) {
        if (!(in >> x)) throw DataError("bundle: short list '" + key + "'");
    }
    return v;
}

}  // namespace

void save_bundle(const std::filesystem::path& path, const ModelBundle& b) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    out << "volidx-bundle 1\n";
    out << "algorithm " << algorithm_name(b.algorithm) << '\n';
    out << "mode " << mode_name(b.mode) << '\n';
    out << "hyperparam " << b.hyperparam << '\n';
    out << "horizon_days " << b.features.horizon_days << '\n';
    out << "strikes_per_side " << b.features.strikes_per_side << '\n';
    out << "strike_step " << b.features.strike_step << '\n';
    out << "base_spacing " << format_number(b.features.base_spacing) << '\n';
    out << "include_returns_features " << (b.features.include_returns_features ? 1 : 0) << '\n';
    write_list(out, "return_lookbacks", std::span<const int>(b.features.return_lookbacks));
    write_list(out, "variance_lookbacks", std::span<const int>(b.features.variance_lookbacks));
    write_list(out, "mean", std::span<const double>(b.normalizer.mean));
    write_list(out, "stddev", std::span<const double>(b.normalizer.stddev));
    write_model(out, b.model);
    if (!out) throw DataError("failed writing " + path.string());
}

ModelBundle load_bundle(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open model " + path.string());
    const auto version = read_one<int>(in, "volidx-bundle");
    if (version != 1) throw DataError("bundle: unsupported version " + std::to_string(version));
    ModelBundle b;
    b.algorithm = parse_algorithm(read_one<std::string>(in, "algorithm"));
    b.mode = parse_mode(read_one<std::string>(in, "mode"));
    b.hyperparam = read_one<std::string>(in, "hyperparam");
    b.features.horizon_days = read_one<int>(in, "horizon_days");
    b.features.strikes_per_side = read_one<int>(in, "strikes_per_side");
    b.features.strike_step = read_one<int>(in, "strike_step");
    b.features.base_spacing = read_one<double>(in, "base_spacing");
    b.features.include_returns_features = read_one<int>(in, "include_returns_features") != 0;
    b.features.return_lookbacks = read_list<int>(in, "return_lookbacks");
    b.features.variance_lookbacks = read_list<int>(in, "variance_lookbacks");
    b.features.validate();
    b.normalizer.mean = read_list<double>(in, "mean");
    b.normalizer.stddev = read_list<double>(in, "stddev");
    b.model = read_model(in);
    const auto dim = static_cast<std::size_t>(input_dimension(b.model));
    if (b.normalizer.mean.size() != dim || b.normalizer.stddev.size() != dim ||
        dim != static_cast<std::size_t>(b.features.feature_count())) {
        throw DataError("bundle: model, normalizer and feature dimensions disagree in " + path.string());
    }
    return b;
}

}  // namespace volidx
