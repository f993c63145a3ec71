#include "graphsim/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include <nlohmann/json.hpp>

#include "graphsim/common.hpp"

namespace graphsim {

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

std::string report_to_csv(const ConvergenceReport& r) {
    std::string out = kReportCsvHeader;
    out += "\n";
    for (const ReportRow& row : r.rows) {
        out += std::to_string(row.n) + "," + fmt(row.beta) + "," + fmt(row.n_beta) + "," +
               std::to_string(row.seeds) + "," + fmt(row.err_l1) + "," + fmt(row.err_l1_se) + "," +
               fmt(row.err_l2) + "," + fmt(row.err_l2_se) + "," + fmt(row.err_dbl) + "," +
               fmt(row.err_dbl_se) + "," + std::to_string(row.wall_ms) + "\n";
    }
    return out;
}

ConvergenceReport report_from_csv(const std::string& csv) {
    std::istringstream in(csv);
    std::string line;
    if (!std::getline(in, line) || line != kReportCsvHeader)
        throw ConfigError("unexpected report csv header");
    ConvergenceReport rep;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        ReportRow row;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream ls(line);
        if (!(ls >> row.n >> row.beta >> row.n_beta >> row.seeds >> row.err_l1 >> row.err_l1_se >>
              row.err_l2 >> row.err_l2_se >> row.err_dbl >> row.err_dbl_se >> row.wall_ms))
            throw ConfigError("bad report csv row: " + line);
        rep.rows.push_back(row);
    }
    return rep;
}

std::string report_to_svg(const ConvergenceReport& r, double envelope_slope) {
    const int W = 640, H = 420, ML = 70, MR = 20, MT = 20, MB = 50;
    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
        << "\">\n";
    svg << "<rect width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";

    std::vector<std::pair<double, double>> pts;  // (log10 n_beta, log10 err)
    for (const ReportRow& row : r.rows)
        if (row.n_beta > 0.0 && row.err_l1 > 0.0)
            pts.emplace_back(std::log10(row.n_beta), std::log10(row.err_l1));
    if (pts.size() >= 2) {
        double xmin = pts[0].first, xmax = pts[0].first;
        double ymin = pts[0].second, ymax = pts[0].second;
        for (auto& [x, y] : pts) {
            xmin = std::min(xmin, x);
            xmax = std::max(xmax, x);
            ymin = std::min(ymin, y);
            ymax = std::max(ymax, y);
        }
        // include the envelope line through the first point
        double env_end = pts[0].second + envelope_slope * (xmax - pts[0].first);
        ymin = std::min(ymin, env_end) - 0.1;
        ymax = std::max(ymax, env_end) + 0.1;
        if (xmax - xmin < 1e-12) xmax = xmin + 1.0;
        if (ymax - ymin < 1e-12) ymax = ymin + 1.0;
        auto px = [&](double x) { return ML + (x - xmin) / (xmax - xmin) * (W - ML - MR); };
        auto py = [&](double y) { return H - MB - (y - ymin) / (ymax - ymin) * (H - MT - MB); };

        svg << "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"2\" points=\"";
        for (auto& [x, y] : pts) svg << px(x) << "," << py(y) << " ";
        svg << "\"/>\n";
        for (auto& [x, y] : pts)
            svg << "<circle cx=\"" << px(x) << "\" cy=\"" << py(y) << "\" r=\"3\" fill=\"#1f77b4\"/>\n";
        svg << "<polyline fill=\"none\" stroke=\"#d62728\" stroke-dasharray=\"6,4\" points=\""
            << px(pts[0].first) << "," << py(pts[0].second) << " " << px(xmax) << ","
            << py(pts[0].second + envelope_slope * (xmax - pts[0].first)) << "\"/>\n";
        svg << "<text x=\"" << W - 220 << "\" y=\"" << MT + 16
            << "\" font-size=\"13\" fill=\"#d62728\">envelope slope " << envelope_slope
            << "</text>\n";
        svg << "<text x=\"" << W / 2 - 40 << "\" y=\"" << H - 12
            << "\" font-size=\"13\">log10(N beta)</text>\n";
        svg << "<text x=\"14\" y=\"" << H / 2
            << "\" font-size=\"13\" transform=\"rotate(-90 14 " << H / 2
            << ")\">log10(L1 error)</text>\n";
    } else {
        svg << "<text x=\"" << W / 2 - 60 << "\" y=\"" << H / 2
            << "\" font-size=\"14\">not enough data</text>\n";
    }
    svg << "</svg>\n";
    return svg.str();
}

RateFit fit_rate(const std::vector<double>& n_beta, const std::vector<double>& errors,
                 double envelope) {
    if (n_beta.size() != errors.size() || n_beta.size() < 2)
        throw ConfigError("rate fit needs matching x/y with at least 2 points");
    for (double e : errors)
        if (!(e > 0.0)) throw ConfigError("rate fit requires positive errors");
    const int n = static_cast<int>(n_beta.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    for (int i = 0; i < n; ++i) {
        double x = std::log(n_beta[static_cast<std::size_t>(i)]);
        double y = std::log(errors[static_cast<std::size_t>(i)]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        syy += y * y;
    }
    double vx = sxx - sx * sx / n;
    if (vx < 1e-14) throw ConfigError("DegenerateFit: no variation in N*beta");
    RateFit fit;
    fit.slope = (sxy - sx * sy / n) / vx;
    fit.intercept = (sy - fit.slope * sx) / n;
    double vy = syy - sy * sy / n;
    if (vy < 1e-14) {
        fit.r2 = 1.0;  // constant errors: fit is exact with slope 0
    } else {
        double ssres = 0.0;
        for (int i = 0; i < n; ++i) {
            double x = std::log(n_beta[static_cast<std::size_t>(i)]);
            double y = std::log(errors[static_cast<std::size_t>(i)]);
            double e = y - (fit.intercept + fit.slope * x);
            ssres += e * e;
        }
        fit.r2 = 1.0 - ssres / vy;
    }
    fit.envelope = envelope;
    return fit;
}

std::string fnv1a_hex(const std::string& data) {
    uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string git_describe() {
    FILE* p = popen("git describe --always --dirty 2>/dev/null", "r");
    if (!p) return "unknown";
    char buf[128] = {0};
    std::string out;
    while (fgets(buf, sizeof buf, p)) out += buf;
    pclose(p);
    while (!out.empty() && (out.back() == '\n' || out.back() == ' ')) out.pop_back();
    return out.empty() ? "unknown" : out;
}

}  // namespace graphsim
