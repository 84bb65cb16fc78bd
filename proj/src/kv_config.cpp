#include "volidx/kv_config.hpp"

#include "volidx/errors.hpp"

#include <fstream>
#include <sstream>

namespace volidx {

namespace {

std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

}  // namespace

std::map<std::string, std::string> parse_kv_text(std::string_view text, const std::string& source) {
    std::map<std::string, std::string> out;
    int line_no = 0;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        const auto where = source + ":" + std::to_string(line_no);
        if (eq == std::string_view::npos) throw DataError(where + ": expected 'key = value'");
        const std::string key(trim(line.substr(0, eq)));
        const std::string value(trim(line.substr(eq + 1)));
        if (key.empty()) throw DataError(where + ": empty key");
        if (!out.emplace(key, value).second) throw DataError(where + ": duplicate key '" + key + "'");
    }
    return out;
}

std::map<std::string, std::string> load_kv_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open config " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_kv_text(ss.str(), path.string());
}

}  // namespace volidx
