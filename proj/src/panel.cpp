#include "scm/panel.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>

namespace scm {

PanelDataset PanelDataset::create(Eigen::MatrixXd outcomes, Eigen::ArrayXd treated,
                                  int t0, std::vector<std::string> unit_ids) {
    const auto n = outcomes.rows();
    const auto T = outcomes.cols();
    if (n < 2) throw BalanceError("panel needs at least 2 units");
    if (treated.size() != n) throw ShapeError("treated vector length != number of units");
    if (t0 < 2) throw BalanceError("t0 must be >= 2");
    if (T < t0 + 1) throw BalanceError("panel needs at least one post-treatment period");
    if (!outcomes.allFinite()) throw ParseError("non-finite outcome value");

    int n1 = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (treated[i] != 0.0 && treated[i] != 1.0)
            throw ConsistencyError("treated indicator must be 0 or 1");
        n1 += treated[i] == 1.0;
    }
    if (n1 == 0) throw BalanceError("no treated units");
    if (n1 == n) throw BalanceError("no control units");

    if (unit_ids.empty()) {
        unit_ids.resize(n);
        for (Eigen::Index i = 0; i < n; ++i) unit_ids[i] = "u" + std::to_string(i + 1);
    } else if (static_cast<Eigen::Index>(unit_ids.size()) != n) {
        throw ShapeError("unit_ids length != number of units");
    }

    PanelDataset out;
    out.outcomes_ = std::move(outcomes);
    out.treated_ = std::move(treated);
    out.unit_ids_ = std::move(unit_ids);
    out.t0_ = t0;
    out.n1_ = n1;
    return out;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    fields.push_back(cur);
    return fields;
}

double parse_double(const std::string& s, const char* what) {
    double v = 0.0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size())
        throw ParseError(std::string("non-numeric ") + what + ": '" + s + "'");
    return v;
}

long parse_long(const std::string& s, const char* what) {
    long v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size())
        throw ParseError(std::string("non-integer ") + what + ": '" + s + "'");
    return v;
}

// Shortest representation that round-trips the exact double.
std::string format_double(double v) {
    char buf[32];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    (void)ec;
    return std::string(buf, p);
}

}  // namespace

PanelDataset load_panel_csv(const std::string& path, int t0) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);

    std::string line;
    if (!std::getline(in, line)) throw ParseError("empty file: " + path);
    {
        auto header = split_csv_line(line);
        if (header.size() != 4 || header[0] != "unit" || header[1] != "time" ||
            header[2] != "outcome" || header[3] != "treated")
            throw ParseError("expected header unit,time,outcome,treated");
    }

    std::vector<std::string> units;                      // first-appearance order
    std::unordered_map<std::string, int> unit_index;
    std::map<long, int> time_index;                      // sorted re-indexing
    struct Row { int unit; long time; double y; int d; };
    std::vector<Row> rows;

    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        auto f = split_csv_line(line);
        if (f.size() != 4)
            throw ParseError("line " + std::to_string(lineno) + ": expected 4 fields");
        auto [it, inserted] = unit_index.try_emplace(f[0], static_cast<int>(units.size()));
        if (inserted) units.push_back(f[0]);
        long t = parse_long(f[1], "time");
        time_index.emplace(t, 0);
        long d = parse_long(f[3], "treated");
        if (d != 0 && d != 1)
            throw ConsistencyError("line " + std::to_string(lineno) + ": treated must be 0 or 1");
        rows.push_back({it->second, t, parse_double(f[2], "outcome"), static_cast<int>(d)});
    }
    if (rows.empty()) throw ParseError("no data rows in " + path);

    int tix = 0;
    for (auto& [t, ix] : time_index) ix = tix++;
    const int n = static_cast<int>(units.size());
    const int T = static_cast<int>(time_index.size());

    Eigen::MatrixXd Y(n, T);
    Eigen::ArrayXd D = Eigen::ArrayXd::Constant(n, -1.0);
    std::vector<std::vector<char>> seen(n, std::vector<char>(T, 0));
    for (const auto& r : rows) {
        int c = time_index.at(r.time);
        if (seen[r.unit][c])
            throw ConsistencyError("duplicate cell for unit " + units[r.unit] +
                                   " time " + std::to_string(r.time));
        seen[r.unit][c] = 1;
        Y(r.unit, c) = r.y;
        if (D[r.unit] == -1.0) {
            D[r.unit] = r.d;
        } else if (D[r.unit] != r.d) {
            throw ConsistencyError("treated varies within unit " + units[r.unit]);
        }
    }
    for (int i = 0; i < n; ++i)
        for (int c = 0; c < T; ++c)
            if (!seen[i][c])
                throw BalanceError("unbalanced panel: unit " + units[i] +
                                   " missing period index " + std::to_string(c + 1));

    return PanelDataset::create(std::move(Y), std::move(D), t0, std::move(units));
}

void write_panel_csv(const PanelDataset& data, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write " + path);
    out << "unit,time,outcome,treated\n";
    const auto& Y = data.outcomes();
    for (int i = 0; i < data.n(); ++i) {
        int d = data.treated()[i] == 1.0 ? 1 : 0;
        for (int t = 0; t < data.periods(); ++t) {
            out << data.unit_ids()[i] << ',' << (t + 1) << ','
                << format_double(Y(i, t)) << ',' << d << '\n';
        }
    }
    if (!out) throw IoError("write failed: " + path);
}

void write_panel_wide_csv(const PanelDataset& data, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write " + path);
    out << "unit,treated";
    for (int t = 1; t <= data.periods(); ++t) out << ",y" << t;
    out << '\n';
    for (int i = 0; i < data.n(); ++i) {
        out << data.unit_ids()[i] << ',' << (data.treated()[i] == 1.0 ? 1 : 0);
        for (int t = 0; t < data.periods(); ++t)
            out << ',' << format_double(data.outcomes()(i, t));
        out << '\n';
    }
    if (!out) throw IoError("write failed: " + path);
}

}  // namespace scm
