#include "smelab/config.hpp"

#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "smelab/types.hpp"

namespace smelab {

namespace {

std::string trim(const std::string& s) {
    std::size_t begin = 0;
    std::size_t end = s.size();
    while (begin < end && std::isspace(static_cast<unsigned char>(s[begin]))) ++begin;
    while (end > begin && std::isspace(static_cast<unsigned char>(s[end - 1]))) --end;
    return s.substr(begin, end - begin);
}

// Strings that look like numbers or booleans become typed JSON values;
// bracketed lists recurse element-wise.
Json coerce(const std::string& raw) {
    const std::string value = trim(raw);
    if (value == "true") return true;
    if (value == "false") return false;
    if (value.size() >= 2 && value.front() == '[' && value.back() == ']') {
        Json list = Json::array();
        std::string inner = value.substr(1, value.size() - 2);
        std::stringstream ss(inner);
        std::string item;
        while (std::getline(ss, item, ','))
            if (!trim(item).empty()) list.push_back(coerce(item));
        return list;
    }
    try {
        std::size_t used = 0;
        const long long integer = std::stoll(value, &used);
        if (used == value.size()) return integer;
    } catch (const std::exception&) {
    }
    try {
        std::size_t used = 0;
        const double real = std::stod(value, &used);
        if (used == value.size()) return real;
    } catch (const std::exception&) {
    }
    return value;
}

}  // namespace

Json parse_config_text(const std::string& text) {
    for (char c : text) {
        if (std::isspace(static_cast<unsigned char>(c))) continue;
        if (c == '{') return Json::parse(text);
        break;
    }

    Json root = Json::object();
    Json* scope = &root;
    std::stringstream stream(text);
    std::string line;
    int line_no = 0;
    while (std::getline(stream, line)) {
        ++line_no;
        const std::size_t comment = line.find_first_of("#;");
        if (comment != std::string::npos) line = line.substr(0, comment);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw std::invalid_argument("config line " + std::to_string(line_no) +
                                            ": unterminated section header");
            const std::string section = trim(line.substr(1, line.size() - 2));
            if (section.empty())
                throw std::invalid_argument("config line " + std::to_string(line_no) +
                                            ": empty section name");
            scope = &root[section];
            if (!scope->is_object()) *scope = Json::object();
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(line_no) +
                                        ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        if (key.empty())
            throw std::invalid_argument("config line " + std::to_string(line_no) +
                                        ": empty key");
        (*scope)[key] = coerce(line.substr(eq + 1));
    }
    return root;
}

Json load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    Json config = parse_config_text(buffer.str());
    if (config.is_object() && config.contains("config") && config.contains("artifacts"))
        return config["config"];
    return config;
}

Json make_manifest(const Json& config, const std::vector<std::string>& artifacts,
                   double wall_time_s) {
    Json manifest;
    manifest["config"] = config;
    manifest["artifacts"] = artifacts;
    manifest["wall_time_s"] = wall_time_s;
    manifest["version"] = kVersion;
    return manifest;
}

}  // namespace smelab
