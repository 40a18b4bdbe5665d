#include "vortex/io.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>

namespace vortex {

namespace fs = std::filesystem;

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void CsvTable::add(std::vector<std::string> row) {
    if (row.size() != header.size()) throw std::invalid_argument("csv row width does not match header");
    rows.push_back(std::move(row));
}

std::size_t CsvTable::column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return i;
    throw std::out_of_range("no csv column " + name);
}

double CsvTable::number(std::size_t row, const std::string& name) const {
    return std::stod(rows.at(row).at(column(name)));
}

std::string CsvTable::text() const {
    std::string out;
    auto line = [&](const std::vector<std::string>& r) {
        for (std::size_t i = 0; i < r.size(); ++i) {
            if (i) out += ',';
            if (r[i].find_first_of(",\"") == std::string::npos) {
                out += r[i];
                continue;
            }
            out += '"';
            for (char c : r[i]) {
                if (c == '"') out += '"';
                out += c;
            }
            out += '"';
        }
        out += '\n';
    };
    line(header);
    for (const auto& r : rows) line(r);
    return out;
}

void write_text(const std::string& path, const std::string& text) {
    fs::path p(path);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    fs::path tmp = p;
    tmp += ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw std::runtime_error("cannot write " + tmp.string());
        f << text;
        if (!f) throw std::runtime_error("write failed for " + tmp.string());
    }
    fs::rename(tmp, p);
}

std::string read_text(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot read " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

void write_csv(const std::string& path, const CsvTable& t) { write_text(path, t.text()); }

namespace {

// Quoted fields may hold commas and doubled quotes, not newlines.
std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c != '"') cur += c;
            else if (i + 1 < line.size() && line[i + 1] == '"') cur += line[++i];
            else quoted = false;
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

}  // namespace

CsvTable read_csv(const std::string& path, const std::vector<std::string>& expected) {
    std::istringstream in(read_text(path));
    std::string line;
    CsvTable t;
    if (!std::getline(in, line)) throw std::runtime_error(path + ": empty csv");
    t.header = split(line);
    if (!expected.empty() && t.header != expected) {
        std::set<std::string> have(t.header.begin(), t.header.end()), want(expected.begin(), expected.end());
        std::string missing, extra;
        for (const auto& c : want)
            if (!have.count(c)) missing += " " + c;
        for (const auto& c : have)
            if (!want.count(c)) extra += " " + c;
        throw std::runtime_error(path + ": header mismatch; missing:" + (missing.empty() ? " none" : missing) +
                                 "; unexpected:" + (extra.empty() ? " none" : extra));
    }
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto r = split(line);
        if (r.size() != t.header.size()) throw std::runtime_error(path + ": ragged row");
        t.rows.push_back(std::move(r));
    }
    return t;
}

CsvTable field_table(const GridField& f) {
    CsvTable t{kFieldHeader, {}};
    t.rows.reserve(f.values().size());
    for (int i = 0; i < f.n(); ++i)
        for (int j = 0; j < f.n(); ++j) t.rows.push_back({fmt(f.coord(i)), fmt(f.coord(j)), fmt(f(i, j))});
    return t;
}

GridField field_from_table(const CsvTable& t, double time) {
    const auto m = t.rows.size();
    const int n = static_cast<int>(std::lround(std::sqrt(static_cast<double>(m))));
    if (static_cast<std::size_t>(n) * n != m || n == 0) throw std::runtime_error("field csv is not a square grid");
    GridField f(n, time);
    const std::size_t c = t.column("rho");
    for (std::size_t r = 0; r < m; ++r) f.values()[r] = std::stod(t.rows[r][c]);
    return f;
}

CsvTable norms_table(const std::vector<NormReport>& norms) {
    CsvTable t{kNormsHeader, {}};
    for (const auto& r : norms)
        t.add({fmt(r.t), fmt(r.l2_norm), fmt(r.grad_l2), fmt(r.sup_norm), fmt(r.inf_value), fmt(r.d_sup(1)),
               fmt(r.d_sup(2)), fmt(r.running(1)), fmt(r.running(2))});
    return t;
}

CsvTable snapshot_table(const Ensemble& ens, std::size_t snap) {
    CsvTable t{kSnapshotHeader, {}};
    for (std::size_t r = 0; r < ens.replicas.size(); ++r) {
        const auto& p = ens.positions(r, snap);
        for (std::size_t i = 0; i < p.size(); ++i) t.rows.push_back({std::to_string(r), std::to_string(i), fmt(p[i].x1), fmt(p[i].x2)});
    }
    return t;
}

void add_snapshot(Ensemble& ens, const CsvTable& t, double time) {
    const std::size_t cr = t.column("replica"), cp = t.column("particle"), c1 = t.column("x1"), c2 = t.column("x2");
    const std::size_t snap = ens.snapshot_times.size();
    ens.snapshot_times.push_back(time);
    for (auto& tr : ens.replicas) tr.snapshots.push_back({time, {}});
    for (const auto& row : t.rows) {
        std::size_t r = std::stoul(row[cr]);
        while (ens.replicas.size() <= r) {
            Trajectory tr;
            tr.replica = static_cast<int>(ens.replicas.size());
            for (std::size_t s = 0; s <= snap; ++s) tr.snapshots.push_back({ens.snapshot_times[s], {}});
            ens.replicas.push_back(std::move(tr));
        }
        auto& pos = ens.replicas[r].snapshots[snap].positions;
        if (std::stoul(row[cp]) != pos.size()) throw std::runtime_error("snapshot csv particles out of order");
        pos.push_back({std::stod(row[c1]), std::stod(row[c2])});
    }
    for (auto& tr : ens.replicas) tr.N = static_cast<int>(tr.snapshots[snap].positions.size());
}

CsvTable kernel_table(const KernelSpec& k, int n) {
    CsvTable t{kKernelHeader, {}};
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            Vec2 x{-0.5 + static_cast<double>(i) / n, -0.5 + static_cast<double>(j) / n};
            if (x.x1 == 0.0 && x.x2 == 0.0 && !k.bounded()) continue;
            Vec2 v = k.eval(x);
            t.rows.push_back({fmt(x.x1), fmt(x.x2), fmt(v.x1), fmt(v.x2)});
        }
    return t;
}

std::string time_file(const std::string& prefix, double t) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s_t%.6g.csv", prefix.c_str(), t);
    return buf;
}

double time_from_file(const std::string& name, const std::string& prefix) {
    const std::string head = prefix + "_t";
    if (name.rfind(head, 0) != 0 || name.size() < head.size() + 5 || name.substr(name.size() - 4) != ".csv")
        return std::numeric_limits<double>::quiet_NaN();
    std::string mid = name.substr(head.size(), name.size() - head.size() - 4);
    try {
        std::size_t used = 0;
        double t = std::stod(mid, &used);
        return used == mid.size() ? t : std::numeric_limits<double>::quiet_NaN();
    } catch (const std::exception&) {
        return std::numeric_limits<double>::quiet_NaN();
    }
}

std::string fnv1a_hex(const std::string& s) {
    uint64_t h = 14695981039346656037ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace vortex
