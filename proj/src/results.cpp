#include "optlab/results.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <exception>
#include <fstream>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace optlab {

const std::vector<std::string>& result_row_header() {
    static const std::vector<std::string> header{
        "run_id", "experiment", "optimizer", "phi",     "beta1",   "beta2",         "eps",
        "v0",     "lr",         "rotation_kind", "rotation_t", "seed", "step",      "loss",
        "grad_l1", "grad_l2",   "grad_phi_dual", "v_min",   "v_max",   "final"};
    return header;
}

std::string format_double(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc()) throw std::runtime_error("format_double: conversion failed");
    return std::string(buf, end);
}

namespace {

std::string quote(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    return out;
}

}  // namespace

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
    auto out = open_out(path);
    for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << quote(header[i]);
    out << '\n';
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << quote(row[i]);
        out << '\n';
    }
}

void write_result_rows(const std::string& path, std::vector<ResultRow> rows) {
    std::stable_sort(rows.begin(), rows.end(), [](const ResultRow& a, const ResultRow& b) {
        return a.run_id != b.run_id ? a.run_id < b.run_id : a.step < b.step;
    });
    std::vector<std::vector<std::string>> cells;
    cells.reserve(rows.size());
    for (const auto& r : rows) {
        auto num = [&](double v) { return r.error ? std::string() : format_double(v); };
        cells.push_back({r.run_id, r.experiment, r.optimizer, r.phi, format_double(r.beta1),
                         format_double(r.beta2), format_double(r.eps), format_double(r.v0), format_double(r.lr),
                         r.rotation_kind, format_double(r.rotation_t), std::to_string(r.seed),
                         std::to_string(r.step), num(r.loss), num(r.grad_l1), num(r.grad_l2),
                         num(r.grad_phi_dual), num(r.v_min), num(r.v_max), r.final ? "1" : "0"});
    }
    write_csv(path, result_row_header(), cells);
}

void write_text(const std::string& path, const std::string& text) {
    auto out = open_out(path);
    out << text;
    if (!text.empty() && text.back() != '\n') out << '\n';
}

void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& task) {
    const auto workers = static_cast<std::size_t>(std::max(1, threads));
    if (workers == 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) task(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < std::min(workers, count); ++w)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) {
                try {
                    task(i);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                }
            }
        });
    pool.clear();
    if (failure) std::rethrow_exception(failure);
}

}  // namespace optlab
