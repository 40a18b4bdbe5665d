#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vortex/grid.hpp"
#include "vortex/kernel.hpp"
#include "vortex/meanfield.hpp"
#include "vortex/particles.hpp"

namespace vortex {

/// Shortest round-trip decimal form (%.17g, "." separator).
std::string fmt(double v);

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    void add(std::vector<std::string> row);
    /// Column index by name; throws std::out_of_range.
    std::size_t column(const std::string& name) const;
    double number(std::size_t row, const std::string& name) const;
    std::string text() const;
};

/// Writes atomically (temporary file, then rename) and creates parent directories.
void write_text(const std::string& path, const std::string& text);
std::string read_text(const std::string& path);

void write_csv(const std::string& path, const CsvTable& t);
/// Throws std::runtime_error if the header differs from `expected` (when given), with the
/// missing and unexpected columns in the message.
CsvTable read_csv(const std::string& path, const std::vector<std::string>& expected = {});

inline const std::vector<std::string> kReportHeader{"t",      "N",      "k",          "h_k",   "h_k_err",
                                                    "l1_k",   "l1_k_err", "w2_k",     "w2_k_err", "w2_emp",
                                                    "w2_emp_err", "A_N",  "B_N"};
inline const std::vector<std::string> kFieldHeader{"x1", "x2", "rho"};
inline const std::vector<std::string> kNormsHeader{"t",      "l2",     "grad_l2", "sup",   "inf",
                                                   "d1_sup", "d2_sup", "int_d1",  "int_d2"};
inline const std::vector<std::string> kSnapshotHeader{"replica", "particle", "x1", "x2"};
inline const std::vector<std::string> kKernelHeader{"x1", "x2", "k1", "k2"};

/// x1,x2,rho over the grid nodes, row-major.
CsvTable field_table(const GridField& f);
/// Inverse of field_table; the node count must be a square.
GridField field_from_table(const CsvTable& t, double time = 0.0);

CsvTable norms_table(const std::vector<NormReport>& norms);

/// replica,particle,x1,x2 for snapshot `snap` of every replica.
CsvTable snapshot_table(const Ensemble& ens, std::size_t snap);
/// Appends the snapshot in `t` at time `time` to an ensemble (replicas created on demand).
void add_snapshot(Ensemble& ens, const CsvTable& t, double time);

/// Kernel values on an n x n node grid, skipping the origin node for singular kernels.
CsvTable kernel_table(const KernelSpec& k, int n);

/// File names used for per-time outputs: prefix + "_t" + %.6g of t + ".csv".
std::string time_file(const std::string& prefix, double t);
/// Parses the time back out of a time_file name; NaN if it does not match.
double time_from_file(const std::string& name, const std::string& prefix);

/// 64-bit FNV-1a of a string, as 16 hex digits.
std::string fnv1a_hex(const std::string& s);

}  // namespace vortex
