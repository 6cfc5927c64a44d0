#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace optlab {

/// One CSV record: a recorded step or a run summary.
struct ResultRow {
    std::string run_id;
    std::string experiment;
    std::string optimizer;
    std::string phi;
    double beta1 = 0.0;
    double beta2 = 0.0;
    double eps = 0.0;
    double v0 = 0.0;
    double lr = 0.0;
    std::string rotation_kind = "identity";
    double rotation_t = 0.0;
    std::uint64_t seed = 0;
    long step = 0;
    double loss = 0.0;
    double grad_l1 = 0.0;
    double grad_l2 = 0.0;
    double grad_phi_dual = 0.0;
    double v_min = 0.0;
    double v_max = 0.0;
    bool final = false;
    /// Set for cells that failed; numeric fields are then written empty.
    bool error = false;
};

const std::vector<std::string>& result_row_header();

/// Shortest round-trip decimal form, '.' separator, locale independent.
std::string format_double(double v);

/// Sorts rows by (run_id, step) and writes them with the fixed header.
void write_result_rows(const std::string& path, std::vector<ResultRow> rows);

/// Generic CSV table with a header and string cells.
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

void write_text(const std::string& path, const std::string& text);

/// Runs task(i) for i in [0, count) on up to `threads` workers.
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& task);

}  // namespace optlab
