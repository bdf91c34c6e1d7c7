/*
 Copyright 2026 The fmpc Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/
#ifndef FMPC_TRACE_HPP
#define FMPC_TRACE_HPP

#include <charconv>
#include <cmath>
#include <cstddef>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "fmpc/error_chain.hpp"
#include "fmpc/errors.hpp"
#include "fmpc/funnel.hpp"
#include "fmpc/integrator.hpp"
#include "fmpc/reference.hpp"

namespace fmpc {

/// Shortest text that reads back to the same double ("inf", "nan" included).
inline std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& s) {
    double v = 0.0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    if (!s.empty() && s[0] == '+') ++first;
    const auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc() || res.ptr != last) throw ConfigError("malformed number '" + s + "'");
    return v;
}

namespace detail {

inline void push_indexed(std::vector<std::string>& out, const std::string& base, int n) {
    if (n == 1) {
        out.push_back(base);
        return;
    }
    for (int j = 1; j <= n; ++j) out.push_back(base + "_" + std::to_string(j));
}

}  // namespace detail

/// t, y, y_ref, e_1..e_r, psi_1..psi_r, ratio_1..ratio_r, u_1..u_m, stage_cost.
/// Vector-valued quantities get a trailing component index when m > 1.
inline std::vector<std::string> trace_columns(int m, int r) {
    std::vector<std::string> c{"t"};
    detail::push_indexed(c, "y", m);
    detail::push_indexed(c, "y_ref", m);
    for (int i = 1; i <= r; ++i) detail::push_indexed(c, "e_" + std::to_string(i), m);
    for (int i = 1; i <= r; ++i) c.push_back("psi_" + std::to_string(i));
    for (int i = 1; i <= r; ++i) c.push_back("ratio_" + std::to_string(i));
    for (int j = 1; j <= m; ++j) c.push_back("u_" + std::to_string(j));
    c.push_back("stage_cost");
    return c;
}

template <ControlAffinePlant P>
void write_trace(std::ostream& os, const Trajectory<P>& traj, const FunnelTrajectory& funnel,
                 const ReferenceSignal<P::kIoDim>& ref) {
    constexpr int M = P::kIoDim;
    constexpr int R = P::kRelativeDegree;
    const auto header = trace_columns(M, R);
    for (std::size_t c = 0; c < header.size(); ++c) os << (c ? "," : "") << header[c];
    os << '\n';
    for (const auto& s : traj.samples) {
        const auto st = chain<M, R>(s.t, s.zeta, funnel, ref);
        const auto psi = funnel.eval(s.t);
        const auto yr = ref.value(s.t);
        os << format_double(s.t);
        for (int j = 0; j < M; ++j) os << ',' << format_double(s.zeta[j]);
        for (int j = 0; j < M; ++j) os << ',' << format_double(yr[j]);
        for (int i = 0; i < R; ++i) {
            for (int j = 0; j < M; ++j) os << ',' << format_double(st.e[static_cast<std::size_t>(i)][j]);
        }
        for (int i = 0; i < R; ++i) os << ',' << format_double(psi[static_cast<std::size_t>(i)].psi);
        for (int i = 0; i < R; ++i) os << ',' << format_double(s.ratios[static_cast<std::size_t>(i)]);
        for (int j = 0; j < M; ++j) os << ',' << format_double(s.u[j]);
        os << ',' << format_double(s.stage_cost) << '\n';
    }
}

struct TraceTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    std::size_t column(const std::string& name) const {
        for (std::size_t c = 0; c < header.size(); ++c) {
            if (header[c] == name) return c;
        }
        throw ConfigError("trace has no column '" + name + "'");
    }
};

inline TraceTable read_trace(std::istream& is) {
    TraceTable table;
    std::string line;
    if (!std::getline(is, line)) throw ConfigError("trace is empty");
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) table.header.push_back(cell);
    }
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) row.push_back(parse_double(cell));
        if (row.size() != table.header.size()) {
            throw ConfigError("trace line " + std::to_string(lineno) + " has " + std::to_string(row.size()) +
                              " fields, expected " + std::to_string(table.header.size()));
        }
        table.rows.push_back(std::move(row));
    }
    return table;
}

struct TraceCheck {
    /// Apply the input bound and the eps-bound at step times (FMPC traces only).
    bool mpc_checks = false;
    double input_bound = 0.0;
    std::vector<double> eps;
    double t0 = 0.0;
    double delta = 0.0;
    StageCostConfig cost;
    double tol = 1e-8;
};

/// Replays a trace against freshly computed funnels and reference values.
/// Returns one message per failed check; empty means the trace is consistent
/// and stays strictly inside the funnels.
template <int M, int R>
std::vector<std::string> verify_trace(const TraceTable& table, const FunnelTrajectory& funnel,
                                      const ReferenceSignal<M>& ref, const TraceCheck& chk) {
    if (table.header != trace_columns(M, R)) throw ConfigError("trace header does not match the scenario");
    std::vector<std::string> issues;
    auto near = [&](double a, double b, double scale) { return std::abs(a - b) <= chk.tol * std::max(1.0, scale); };
    auto report = [&](std::size_t row, double t, const std::string& what) {
        issues.push_back("row " + std::to_string(row + 1) + " (t=" + format_double(t) + "): " + what);
    };
    const std::size_t c_e = 1 + 2 * static_cast<std::size_t>(M);
    const std::size_t c_psi = c_e + static_cast<std::size_t>(R * M);
    const std::size_t c_ratio = c_psi + R;
    const std::size_t c_u = c_ratio + R;
    const std::size_t c_cost = c_u + M;
    for (std::size_t n = 0; n < table.rows.size(); ++n) {
        const auto& row = table.rows[n];
        const double t = row[0];
        if (n > 0 && !(t > table.rows[n - 1][0])) report(n, t, "time is not increasing");
        if (t < 0.0 || t > funnel.horizon()) {
            report(n, t, "time outside the funnel horizon");
            continue;
        }
        const auto psi = funnel.eval(t);
        const auto yr = ref.value(t);
        for (int j = 0; j < M; ++j) {
            const double y = row[1 + static_cast<std::size_t>(j)];
            const double y_ref = row[1 + M + static_cast<std::size_t>(j)];
            const double e1 = row[c_e + static_cast<std::size_t>(j)];
            if (!near(y_ref, yr[j], std::abs(yr[j]))) report(n, t, "y_ref differs from the reference signal");
            if (!near(e1, y - yr[j], std::abs(y))) report(n, t, "e_1 differs from y - y_ref");
        }
        double k_sum = 0.0;
        bool saturated = false;
        for (int i = 0; i < R; ++i) {
            const auto ii = static_cast<std::size_t>(i);
            double e2 = 0.0;
            for (int j = 0; j < M; ++j) {
                const double e = row[c_e + ii * M + static_cast<std::size_t>(j)];
                e2 += e * e;
            }
            const double p = psi[ii].psi;
            const double ratio = e2 / (p * p);
            const std::string idx = std::to_string(i + 1);
            if (!near(row[c_psi + ii], p, p)) report(n, t, "psi_" + idx + " differs from the funnel");
            if (!(std::abs(row[c_ratio + ii] - ratio) <= chk.tol * std::max(1.0, ratio))) {
                report(n, t, "ratio_" + idx + " differs from |e_" + idx + "|^2 / psi_" + idx + "^2");
            }
            if (!(ratio < 1.0)) {
                report(n, t, "e_" + idx + " is not strictly inside its funnel");
                saturated = true;
            } else {
                k_sum += 1.0 / (1.0 - ratio);
            }
            if (chk.mpc_checks) {
                const double steps = (t - chk.t0) / chk.delta;
                const bool step_point = std::abs(steps - std::round(steps)) * chk.delta <= 1e-9 * std::max(1.0, t);
                if (step_point && !(std::sqrt(e2) <= chk.eps.at(ii) * p + 1e-9)) {
                    report(n, t, "|e_" + idx + "| exceeds eps_" + idx + " psi_" + idx + " at a step time");
                }
            }
        }
        double u2 = 0.0;
        for (int j = 0; j < M; ++j) u2 += row[c_u + static_cast<std::size_t>(j)] * row[c_u + static_cast<std::size_t>(j)];
        if (chk.mpc_checks && !(std::sqrt(u2) <= chk.input_bound)) report(n, t, "|u| exceeds the input bound");
        if (!saturated) {
            const double cost = k_sum - R + chk.cost.lambda_u * u2;
            if (!near(row[c_cost], cost, std::abs(cost))) report(n, t, "stage_cost differs from the error chain");
        }
    }
    return issues;
}

}  // namespace fmpc

#endif  // FMPC_TRACE_HPP
