#pragma once

// Renders a saved backtest result directory (result.json, equity.csv,
// decisions.csv, memory.jsonl) into a Markdown summary plus plot-ready CSVs.
// Everything here is a pure function of the directory contents.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sdekit/data.hpp"
#include "sdekit/discovery.hpp"

namespace sdekit {

struct EquityPoint {
    long day = 0;
    std::string date;
    double equity = 0.0;
};

inline std::vector<EquityPoint> load_equity_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error(path.string() + ": cannot open file");
    std::string line;
    std::size_t line_no = 0;
    auto fail = [&](const std::string& msg) {
        return std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": " + msg);
    };
    if (!std::getline(in, line)) throw std::runtime_error(path.string() + ": empty file");
    line_no = 1;
    if (line.size() && line.back() == '\r') line.pop_back();
    if (line != "day,date,equity") throw fail("expected header day,date,equity");
    std::vector<EquityPoint> points;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.size() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto fields = detail::split_csv_line(line);
        if (fields.size() != 3) throw fail("expected 3 fields");
        EquityPoint p;
        try {
            p.day = std::stol(fields[0]);
            p.equity = std::stod(fields[2]);
        } catch (const std::exception&) {
            throw fail("malformed number");
        }
        p.date = fields[1];
        points.push_back(std::move(p));
    }
    return points;
}

// Fractional drawdown from the running peak, one value per equity point.
inline std::vector<double> drawdown_from_equity(const std::vector<double>& equity) {
    std::vector<double> dd(equity.size(), 0.0);
    double peak = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < equity.size(); ++i) {
        peak = std::max(peak, equity[i]);
        dd[i] = peak > 0.0 ? (peak - equity[i]) / peak : 0.0;
    }
    return dd;
}

namespace detail {

inline std::string report_num(double v, int precision = 4) {
    if (std::isnan(v)) return "-";
    std::ostringstream out;
    out << std::fixed << std::setprecision(precision) << v;
    return out.str();
}

}  // namespace detail

inline std::string render_report_markdown(const std::filesystem::path& dir) {
    const auto result_path = dir / "result.json";
    std::ifstream in(result_path);
    if (!in) throw std::runtime_error(result_path.string() + ": cannot open file");
    nlohmann::json result = nlohmann::json::parse(in, nullptr, false);
    if (result.is_discarded())
        throw std::runtime_error(result_path.string() + ": malformed JSON");

    std::ostringstream md;
    md << "# Backtest report\n\n";

    if (result.value("failed", false)) {
        md << "**Run failed:** " << result.value("failure_reason", std::string("unknown"))
           << "\n\n";
    }

    md << "| Metric | Value |\n|---|---|\n";
    md << "| PnL | " << detail::report_num(result.value("pnl", 0.0)) << " |\n";
    md << "| Sharpe (annualized) | " << detail::report_num(result.value("sharpe", 0.0))
       << " |\n";
    md << "| Max drawdown | " << detail::report_num(result.value("mdd", 0.0)) << " |\n";
    md << "| Final equity | " << detail::report_num(result.value("final_equity", 0.0))
       << " |\n";
    md << "| Trading days | " << result.value("days", 0) << " |\n";
    if (result.contains("config")) {
        const auto& cfg = result["config"];
        md << "| Symbol | " << cfg.value("symbol", std::string("-")) << " |\n";
        md << "| Policy | " << cfg.value("policy", std::string("-")) << " |\n";
        md << "| Accounting | " << cfg.value("accounting", std::string("-")) << " |\n";
        md << "| Initial cash | " << detail::report_num(cfg.value("initial_cash", 0.0))
           << " |\n";
        md << "| Fee rate | " << cfg.value("kappa", 0.0) << " |\n";
        md << "| Lookback / block / recalibration | " << cfg.value("lookback", 0) << " / "
           << cfg.value("block", 0) << " / " << cfg.value("recalib_window", 0) << " |\n";
        md << "| Seed | " << cfg.value("seed", 0ULL) << " |\n";
    }
    md << "\n";

    if (std::filesystem::exists(dir / "decisions.csv")) {
        std::ifstream dec(dir / "decisions.csv");
        std::string line;
        std::getline(dec, line);  // header
        std::map<std::string, int> signals;
        std::map<std::string, int> stances;
        int rows = 0;
        while (std::getline(dec, line)) {
            if (line.size() && line.back() == '\r') line.pop_back();
            if (line.empty()) continue;
            auto fields = detail::split_csv_line(line);
            if (fields.size() < 14) continue;
            ++rows;
            ++signals[fields[1]];
            ++stances[fields[13]];
        }
        md << "## Trading activity\n\n";
        md << rows << " decisions: ";
        bool first = true;
        for (const auto& [name, count] : signals) {
            if (!first) md << ", ";
            md << count << " " << name;
            first = false;
        }
        md << ".\nNews stance: ";
        first = true;
        for (const auto& [name, count] : stances) {
            if (!first) md << ", ";
            md << count << " " << name;
            first = false;
        }
        md << ".\n\n";
    }

    if (std::filesystem::exists(dir / "memory.jsonl")) {
        std::ifstream mem(dir / "memory.jsonl");
        std::vector<CandidateRecord> records = load_records(mem);
        md << "## Model discovery\n\n";
        md << records.size() << " candidates tested.\n\n";
        const CandidateRecord* best = nullptr;
        for (const auto& r : records)
            if (r.ok() && (best == nullptr || r.loss < best->loss)) best = &r;
        if (best != nullptr) {
            md << "Best by loss: `" << best->source << "` (loss "
               << detail::report_num(best->loss) << ", score " << best->combined << ").\n\n";
        }
        md << "| Iter | Status | Model | Loss | Score |\n|---|---|---|---|---|\n";
        for (const auto& r : records) {
            md << "| " << r.iteration << " | " << to_string(r.status) << " | `" << r.source
               << "` | " << (r.ok() ? detail::report_num(r.loss) : std::string("-")) << " | "
               << (r.ok() ? std::to_string(r.combined) : std::string("-")) << " |\n";
        }
        md << "\n";
    }

    if (std::filesystem::exists(dir / "equity.csv")) {
        auto points = load_equity_csv(dir / "equity.csv");
        if (!points.empty()) {
            std::vector<double> equity;
            equity.reserve(points.size());
            for (const auto& p : points) equity.push_back(p.equity);
            auto dd = drawdown_from_equity(equity);
            md << "## Equity curve\n\n";
            md << "Start " << detail::report_num(equity.front()) << ", end "
               << detail::report_num(equity.back()) << ", peak "
               << detail::report_num(*std::max_element(equity.begin(), equity.end()))
               << ", deepest drawdown "
               << detail::report_num(*std::max_element(dd.begin(), dd.end())) << ".\n";
            md << "Plot data: `equity.csv`, `drawdown.csv`, `discovery_losses.csv`.\n";
        }
    }
    return md.str();
}

// Writes report.md plus plot-data CSVs (drawdown.csv, discovery_losses.csv)
// next to the inputs; returns the report path.
inline std::filesystem::path write_report(const std::filesystem::path& dir) {
    const std::string md = render_report_markdown(dir);
    std::ofstream(dir / "report.md") << md;

    if (std::filesystem::exists(dir / "equity.csv")) {
        auto points = load_equity_csv(dir / "equity.csv");
        std::vector<double> equity;
        equity.reserve(points.size());
        for (const auto& p : points) equity.push_back(p.equity);
        auto dd = drawdown_from_equity(equity);
        std::ofstream out(dir / "drawdown.csv");
        out << "day,date,drawdown\n";
        for (std::size_t i = 0; i < points.size(); ++i)
            out << points[i].day << ',' << points[i].date << ','
                << detail::render_number(dd[i]) << '\n';
    }
    if (std::filesystem::exists(dir / "memory.jsonl")) {
        std::ifstream mem(dir / "memory.jsonl");
        std::vector<CandidateRecord> records = load_records(mem);
        std::ofstream out(dir / "discovery_losses.csv");
        out << "row,iteration,status,loss,combined,model\n";
        for (std::size_t i = 0; i < records.size(); ++i) {
            const auto& r = records[i];
            out << i << ',' << r.iteration << ',' << to_string(r.status) << ','
                << (r.ok() ? detail::render_number(r.loss) : std::string()) << ','
                << r.combined << ',' << '"' << r.source << '"' << '\n';
        }
    }
    return dir / "report.md";
}

}  // namespace sdekit
