#include "phasecool/io.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "phasecool/errors.hpp"

namespace phasecool {

namespace {

double parse_field(std::string_view token, const std::string& origin, int line) {
    double v = 0.0;
    const auto res = std::from_chars(token.data(), token.data() + token.size(), v);
    if (res.ec != std::errc() || res.ptr != token.data() + token.size())
        throw IoError(origin + ":" + std::to_string(line) + ": bad numeric field '" +
                      std::string(token) + "'");
    return v;
}

// Splits a CSV row against an expected column count; header already consumed.
std::vector<double> parse_row(const std::string& row, std::size_t columns,
                              const std::string& origin, int line) {
    std::vector<double> out;
    std::size_t start = 0;
    while (true) {
        std::size_t comma = row.find(',', start);
        if (comma == std::string::npos) comma = row.size();
        out.push_back(parse_field(std::string_view(row).substr(start, comma - start), origin, line));
        if (comma == row.size()) break;
        start = comma + 1;
    }
    if (out.size() != columns)
        throw IoError(origin + ":" + std::to_string(line) + ": expected " +
                      std::to_string(columns) + " fields, got " + std::to_string(out.size()));
    return out;
}

std::string strip_cr(std::string s) {
    if (!s.empty() && s.back() == '\r') s.pop_back();
    return s;
}

} // namespace

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) throw IoError("read failure: " + path);
    return buf.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open file for writing: " + path);
    out << content;
    out.flush();
    if (!out) throw IoError("write failure: " + path);
}

void ensure_directory(const std::string& path) {
    std::error_code ec;
    std::filesystem::create_directories(path, ec);
    if (ec) throw IoError("cannot create directory " + path + ": " + ec.message());
}

std::string trajectory_csv(const TrajectoryRecord& rec) {
    std::ostringstream out;
    out << "t,q,p,n,phi\n";
    for (const Sample& s : rec.samples) {
        out << format_double(s.t) << ',' << format_double(s.state.q) << ','
            << format_double(s.state.p) << ',' << format_double(s.n) << ','
            << format_double(s.phi_active) << '\n';
    }
    return out.str();
}

void write_trajectory(const std::string& path, const TrajectoryRecord& rec) {
    write_text_file(path, trajectory_csv(rec));
}

TrajectoryTable parse_trajectory_csv(const std::string& text, const std::string& origin) {
    std::istringstream stream(text);
    std::string row;
    if (!std::getline(stream, row) || strip_cr(row) != "t,q,p,n,phi")
        throw IoError(origin + ":1: expected header 't,q,p,n,phi'");
    TrajectoryTable table;
    int line = 1;
    while (std::getline(stream, row)) {
        ++line;
        row = strip_cr(row);
        if (row.empty()) continue;
        const auto f = parse_row(row, 5, origin, line);
        table.t.push_back(f[0]);
        table.q.push_back(f[1]);
        table.p.push_back(f[2]);
        table.n.push_back(f[3]);
        table.phi.push_back(f[4]);
    }
    return table;
}

TrajectoryTable read_trajectory(const std::string& path) {
    return parse_trajectory_csv(read_text_file(path), path);
}

std::string ensemble_csv(const EnsembleStats& stats) {
    std::ostringstream out;
    out << "t,mean_n,var_n\n";
    for (std::size_t i = 0; i < stats.time_bins.size(); ++i) {
        out << format_double(stats.time_bins[i]) << ',' << format_double(stats.mean_n[i]) << ','
            << format_double(stats.var_n[i]) << '\n';
    }
    return out.str();
}

void write_ensemble(const std::string& path, const EnsembleStats& stats) {
    write_text_file(path, ensemble_csv(stats));
}

EnsembleTable parse_ensemble_csv(const std::string& text, const std::string& origin) {
    std::istringstream stream(text);
    std::string row;
    if (!std::getline(stream, row) || strip_cr(row) != "t,mean_n,var_n")
        throw IoError(origin + ":1: expected header 't,mean_n,var_n'");
    EnsembleTable table;
    int line = 1;
    while (std::getline(stream, row)) {
        ++line;
        row = strip_cr(row);
        if (row.empty()) continue;
        const auto f = parse_row(row, 3, origin, line);
        table.t.push_back(f[0]);
        table.mean_n.push_back(f[1]);
        table.var_n.push_back(f[2]);
    }
    return table;
}

EnsembleTable read_ensemble(const std::string& path) {
    return parse_ensemble_csv(read_text_file(path), path);
}

std::string summary_text(const std::string& manifest,
                         const std::vector<std::pair<std::string, std::string>>& results) {
    std::string out = manifest;
    if (out.empty() || out.back() != '\n') out += '\n';
    out += "\n[results]\n";
    for (const auto& [key, value] : results) out += key + " = " + value + "\n";
    return out;
}

std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string checksum_hex(const std::string& bytes) {
    static const char* digits = "0123456789abcdef";
    std::uint64_t h = fnv1a64(bytes);
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[h & 0xF];
        h >>= 4;
    }
    return out;
}

} // namespace phasecool
