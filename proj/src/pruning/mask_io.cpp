#include "ticketlab/pruning/mask_io.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "ticketlab/errors.hpp"
#include "ticketlab/format.hpp"

namespace ticketlab::pruning {

void write_mask(std::ostream& out, const PruneMask& mask) {
    for (const auto& e : mask.entries()) {
        out << e.path << ' ' << e.bits.size() << ' ' << format_double(mask.prune_ratio()) << '\n';
        std::string bits(e.bits.size(), '0');
        for (std::size_t i = 0; i < e.bits.size(); ++i)
            if (e.bits[i]) bits[i] = '1';
        out << bits << '\n';
    }
}

PruneMask read_mask(std::istream& in) {
    std::vector<PruneMask::Entry> entries;
    double ratio = 0.0;
    std::string header, bits;
    std::size_t line = 0;
    while (std::getline(in, header)) {
        ++line;
        if (header.empty()) continue;
        std::istringstream fields(header);
        std::string path, n_text, p_text, extra;
        if (!(fields >> path >> n_text >> p_text) || (fields >> extra)) {
            throw ParseError("mask header must be '<path> <n> <p>'", line);
        }
        const auto n = parse_size(n_text, line);
        const double p = parse_double(p_text, line);
        if (!entries.empty() && p != ratio) throw ParseError("inconsistent prune ratio across entries", line);
        ratio = p;
        if (!std::getline(in, bits)) throw ParseError("missing bit line for '" + path + "'", line + 1);
        ++line;
        if (bits.size() != n) {
            throw ParseError("expected " + std::to_string(n) + " bits for '" + path + "', got " +
                                 std::to_string(bits.size()),
                             line);
        }
        PruneMask::Entry entry{path, std::vector<std::uint8_t>(n, 0)};
        for (std::size_t i = 0; i < n; ++i) {
            if (bits[i] == '1') entry.bits[i] = 1;
            else if (bits[i] != '0') throw ParseError("mask bits must be '0' or '1'", line);
        }
        entries.push_back(std::move(entry));
    }
    return PruneMask(std::move(entries), ratio);
}

void save_mask(const std::filesystem::path& path, const PruneMask& mask) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    write_mask(out, mask);
    if (!out) throw IoError("failed writing '" + path.string() + "'");
}

PruneMask load_mask(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    return read_mask(in);
}

}  // namespace ticketlab::pruning
