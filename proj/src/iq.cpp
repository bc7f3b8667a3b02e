#include "dpdforge/iq.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>

namespace dpdforge {

void write_iq_csv(const std::filesystem::path& path, std::span<const IqSample> samples) {
    std::FILE* f = std::fopen(path.string().c_str(), "w");
    if (f == nullptr) throw std::runtime_error("cannot open for writing: " + path.string());
    std::fputs("I,Q\n", f);
    for (const IqSample& s : samples) std::fprintf(f, "%.17g,%.17g\n", s.i, s.q);
    if (std::ferror(f) != 0) {
        std::fclose(f);
        throw std::runtime_error("write failed: " + path.string());
    }
    std::fclose(f);
}

std::vector<IqSample> read_iq_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in.is_open()) throw std::runtime_error("cannot open: " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty I/Q file: " + path.string());
    // tolerate a UTF-8 BOM and trailing CR in the header
    if (line.size() >= 3 && std::memcmp(line.data(), "\xEF\xBB\xBF", 3) == 0) line.erase(0, 3);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "I,Q") throw std::runtime_error("bad I/Q header in " + path.string());

    std::vector<IqSample> out;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const char* p = line.c_str();
        char* end = nullptr;
        const double i = std::strtod(p, &end);
        if (end == p || *end != ',')
            throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": bad row");
        p = end + 1;
        const double q = std::strtod(p, &end);
        if (end == p)
            throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": bad row");
        out.push_back({i, q});
    }
    return out;
}

}  // namespace dpdforge
