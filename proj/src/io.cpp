#include "rsc/io.hpp"

#include "rsc/errors.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace rsc {

std::string CsvTable::meta(const std::string& key) const {
    for (const auto& [k, v] : metadata)
        if (k == key) return v;
    return {};
}

bool CsvTable::has_column(const std::string& name) const {
    return std::find(columns.begin(), columns.end(), name) != columns.end();
}

std::size_t CsvTable::column(const std::string& name) const {
    const auto it = std::find(columns.begin(), columns.end(), name);
    if (it == columns.end()) throw DomainError("CSV has no column '" + name + "'");
    return static_cast<std::size_t>(it - columns.begin());
}

std::string format_number(double value) {
    if (value == 0.0) return "0";
    std::array<char, 400> buf{};
    const double mag = std::abs(value);
    const auto res = mag >= 1e-5 && mag < 1e16
                         ? std::to_chars(buf.data(), buf.data() + buf.size(), value, std::chars_format::fixed)
                         : std::to_chars(buf.data(), buf.data() + buf.size(), value);
    return {buf.data(), res.ptr};
}

std::string write_csv(const CsvTable& table) {
    std::string out;
    for (const auto& [k, v] : table.metadata) out += "# " + k + ": " + v + "\n";
    for (std::size_t i = 0; i < table.columns.size(); ++i) out += (i ? "," : "") + table.columns[i];
    out += "\n";
    for (const auto& row : table.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + row[i];
        out += "\n";
    }
    return out;
}

CsvTable parse_csv(const std::string& text) {
    CsvTable table;
    std::istringstream in(text);
    std::string line;
    auto split = [](const std::string& s) {
        std::vector<std::string> cells;
        std::string cell;
        std::istringstream ls(s);
        while (std::getline(ls, cell, ',')) {
            while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
            while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
            cells.push_back(cell);
        }
        return cells;
    };
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            const auto colon = line.find(':');
            if (colon == std::string::npos) continue;
            std::string key = line.substr(1, colon - 1);
            std::string value = line.substr(colon + 1);
            key.erase(0, key.find_first_not_of(' '));
            value.erase(0, value.find_first_not_of(' '));
            table.metadata.emplace_back(key, value);
            continue;
        }
        if (table.columns.empty()) {
            table.columns = split(line);
            continue;
        }
        auto cells = split(line);
        if (cells.size() != table.columns.size())
            throw DomainError("CSV row has " + std::to_string(cells.size()) + " cells, header has " +
                              std::to_string(table.columns.size()));
        table.rows.push_back(std::move(cells));
    }
    if (table.columns.empty()) throw DomainError("CSV has no header");
    return table;
}

namespace {

double cell_number(const std::string& text) {
    double v = 0.0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size())
        throw DomainError("CSV cell is not a number: '" + text + "'");
    return v;
}

std::string detuning_hz(double detuning) {
    // Grid values are whole microhertz; drop the 2pi round-trip noise.
    return format_number(std::round(to_hz(detuning) * 1e6) / 1e6);
}

} // namespace

CsvTable histogram_table(const std::vector<HistogramRow>& rows, const DetectionConfig& config) {
    CsvTable t;
    t.metadata = {{"expected_counts", format_number(config.expected_counts)},
                  {"lower_threshold_counts", format_number(config.lower_threshold * config.expected_counts)},
                  {"upper_threshold_counts", format_number(config.upper_threshold * config.expected_counts)}};
    t.columns = {"count", "p_given_f3", "p_given_f4"};
    for (const auto& r : rows)
        t.rows.push_back({std::to_string(r.count), format_number(r.p_given_f3), format_number(r.p_given_f4)});
    return t;
}

CsvTable spectrum_table(const std::vector<SpectrumPoint>& points) {
    CsvTable t;
    t.columns = {"delta_r_hz", "p4", "p4_err", "transfers", "valid_trials", "inconclusive"};
    for (const auto& p : points)
        t.rows.push_back({detuning_hz(p.detuning), format_number(p.p4), format_number(p.p4_error),
                          std::to_string(p.transfers), std::to_string(p.valid_trials),
                          std::to_string(p.inconclusive)});
    return t;
}

CsvTable scan_table(const std::vector<ScanRow>& rows) {
    CsvTable t;
    t.columns = {"param_name", "param_value", "nbar_inf", "r0"};
    for (const auto& r : rows)
        t.rows.push_back({r.param_name, format_number(r.param_value), format_number(r.nbar_inf), format_number(r.r0)});
    return t;
}

CsvTable residual_table(const std::vector<SpectrumPoint>& carrier, const LorentzianFit& fit) {
    CsvTable t;
    t.columns = {"delta_r_hz", "p4", "model", "residual", "normalized_residual"};
    for (const auto& p : carrier) {
        const double model = fit(p.detuning);
        const double floor = p.valid_trials > 0 ? 1.0 / p.valid_trials : 1.0;
        const double sigma = std::max(p.p4_error, floor);
        t.rows.push_back({detuning_hz(p.detuning), format_number(p.p4), format_number(model),
                          format_number(p.p4 - model), format_number((p.p4 - model) / sigma)});
    }
    return t;
}

std::vector<SpectrumPoint> spectrum_from_table(const CsvTable& table) {
    const std::size_t cd = table.column("delta_r_hz");
    const bool counts = table.has_column("transfers") && table.has_column("valid_trials");
    std::vector<SpectrumPoint> points;
    for (const auto& row : table.rows) {
        const double detuning = hz(cell_number(row[cd]));
        if (counts) {
            const int transfers = static_cast<int>(cell_number(row[table.column("transfers")]));
            const int valid = static_cast<int>(cell_number(row[table.column("valid_trials")]));
            const int inconclusive =
                table.has_column("inconclusive") ? static_cast<int>(cell_number(row[table.column("inconclusive")])) : 0;
            if (valid > 0) {
                points.push_back(SpectrumPoint::from_counts(detuning, transfers, valid, inconclusive));
                continue;
            }
        }
        SpectrumPoint p;
        p.detuning = detuning;
        p.p4 = cell_number(row[table.column("p4")]);
        p.p4_error = cell_number(row[table.column("p4_err")]);
        points.push_back(p);
    }
    return points;
}

namespace {

std::string fixed(double v, int digits = 2) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

double nice_step(double span, int target) {
    const double raw = span / target;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    const double f = raw / mag;
    return (f < 1.5 ? 1.0 : f < 3.5 ? 2.0 : f < 7.5 ? 5.0 : 10.0) * mag;
}

std::string tick_label(double v, double step) {
    const int digits = std::max(0, static_cast<int>(-std::floor(std::log10(step) + 1e-9)));
    return fixed(std::abs(v) < step * 1e-9 ? 0.0 : v, digits);
}

class Plot {
public:
    Plot(std::string title, std::string xlabel, std::string ylabel) : title_(std::move(title)),
        xlabel_(std::move(xlabel)), ylabel_(std::move(ylabel)) {}

    void extend(double x, double y) {
        xmin_ = std::min(xmin_, x);
        xmax_ = std::max(xmax_, x);
        ymin_ = std::min(ymin_, y);
        ymax_ = std::max(ymax_, y);
    }

    void finish_ranges(bool y_from_zero) {
        if (y_from_zero) ymin_ = std::min(ymin_, 0.0);
        if (!(xmax_ > xmin_)) { xmin_ -= 1.0; xmax_ += 1.0; }
        if (!(ymax_ > ymin_)) { ymin_ -= 1.0; ymax_ += 1.0; }
        const double pad = 0.05 * (ymax_ - ymin_);
        ymax_ += pad;
        if (!y_from_zero) ymin_ -= pad;
    }

    double px(double x) const { return left + (x - xmin_) / (xmax_ - xmin_) * (width - left - right); }
    double py(double y) const { return height - bottom - (y - ymin_) / (ymax_ - ymin_) * (height - top - bottom); }

    void polyline(const std::vector<std::pair<double, double>>& pts, const std::string& color, bool dashed = false) {
        body_ += "<polyline fill=\"none\" stroke=\"" + color + "\" stroke-width=\"1.5\"";
        if (dashed) body_ += " stroke-dasharray=\"6,4\"";
        body_ += " points=\"";
        for (std::size_t i = 0; i < pts.size(); ++i)
            body_ += (i ? " " : "") + fixed(px(pts[i].first)) + "," + fixed(py(pts[i].second));
        body_ += "\"/>\n";
    }

    void vline(double x, const std::string& color) {
        body_ += "<line x1=\"" + fixed(px(x)) + "\" y1=\"" + fixed(py(ymin_)) + "\" x2=\"" + fixed(px(x)) +
                 "\" y2=\"" + fixed(py(ymax_)) + "\" stroke=\"" + color +
                 "\" stroke-width=\"1\" stroke-dasharray=\"6,4\"/>\n";
    }

    void marker(double x, double y, double err, const std::string& color) {
        if (err > 0.0) {
            body_ += "<line x1=\"" + fixed(px(x)) + "\" y1=\"" + fixed(py(y - err)) + "\" x2=\"" + fixed(px(x)) +
                     "\" y2=\"" + fixed(py(y + err)) + "\" stroke=\"" + color + "\" stroke-width=\"1\"/>\n";
        }
        body_ += "<circle cx=\"" + fixed(px(x)) + "\" cy=\"" + fixed(py(y)) + "\" r=\"2.5\" fill=\"" + color +
                 "\"/>\n";
    }

    void legend(const std::string& text, const std::string& color) {
        const double y = top + 14.0 + 16.0 * legends_++;
        body_ += "<rect x=\"" + fixed(width - right - 150) + "\" y=\"" + fixed(y - 8) +
                 "\" width=\"10\" height=\"10\" fill=\"" + color + "\"/>\n";
        body_ += "<text x=\"" + fixed(width - right - 135) + "\" y=\"" + fixed(y + 1) +
                 "\" font-size=\"11\">" + text + "</text>\n";
    }

    std::string svg(const std::string& source) const {
        std::string out = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
        out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fixed(width, 0) + "\" height=\"" +
               fixed(height, 0) + "\" font-family=\"sans-serif\">\n";
        if (!source.empty()) out += "<!-- manifest: " + source + " -->\n";
        out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
        out += "<text x=\"" + fixed(width / 2) + "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" + title_ +
               "</text>\n";
        out += axes();
        out += body_;
        out += "</svg>\n";
        return out;
    }

    double xmin() const { return xmin_; }
    double xmax() const { return xmax_; }

private:
    std::string axes() const {
        std::string out;
        const double x0 = left, x1 = width - right, y0 = height - bottom, y1 = top;
        out += "<rect x=\"" + fixed(x0) + "\" y=\"" + fixed(y1) + "\" width=\"" + fixed(x1 - x0) + "\" height=\"" +
               fixed(y0 - y1) + "\" fill=\"none\" stroke=\"black\"/>\n";
        const double xs = nice_step(xmax_ - xmin_, 6);
        for (double v = std::ceil(xmin_ / xs) * xs; v <= xmax_ + xs * 1e-9; v += xs) {
            out += "<line x1=\"" + fixed(px(v)) + "\" y1=\"" + fixed(y0) + "\" x2=\"" + fixed(px(v)) + "\" y2=\"" +
                   fixed(y0 + 5) + "\" stroke=\"black\"/>\n";
            out += "<text x=\"" + fixed(px(v)) + "\" y=\"" + fixed(y0 + 18) +
                   "\" text-anchor=\"middle\" font-size=\"11\">" + tick_label(v, xs) + "</text>\n";
        }
        const double ys = nice_step(ymax_ - ymin_, 5);
        for (double v = std::ceil(ymin_ / ys) * ys; v <= ymax_ + ys * 1e-9; v += ys) {
            out += "<line x1=\"" + fixed(x0 - 5) + "\" y1=\"" + fixed(py(v)) + "\" x2=\"" + fixed(x0) + "\" y2=\"" +
                   fixed(py(v)) + "\" stroke=\"black\"/>\n";
            out += "<text x=\"" + fixed(x0 - 8) + "\" y=\"" + fixed(py(v) + 4) +
                   "\" text-anchor=\"end\" font-size=\"11\">" + tick_label(v, ys) + "</text>\n";
        }
        out += "<text x=\"" + fixed((x0 + x1) / 2) + "\" y=\"" + fixed(height - 10) +
               "\" text-anchor=\"middle\" font-size=\"12\">" + xlabel_ + "</text>\n";
        out += "<text x=\"16\" y=\"" + fixed((y0 + y1) / 2) + "\" text-anchor=\"middle\" font-size=\"12\" " +
               "transform=\"rotate(-90 16 " + fixed((y0 + y1) / 2) + ")\">" + ylabel_ + "</text>\n";
        return out;
    }

    static constexpr double width = 640, height = 420, left = 70, right = 20, top = 35, bottom = 50;
    std::string title_, xlabel_, ylabel_, body_;
    double xmin_ = 1e300, xmax_ = -1e300, ymin_ = 1e300, ymax_ = -1e300;
    int legends_ = 0;
};

std::vector<double> numeric_column(const CsvTable& t, const std::string& name) {
    const std::size_t c = t.column(name);
    std::vector<double> out;
    for (const auto& row : t.rows) out.push_back(cell_number(row[c]));
    return out;
}

std::string render_histogram(const CsvTable& t) {
    const auto n = numeric_column(t, "count");
    const auto f3 = numeric_column(t, "p_given_f3");
    const auto f4 = numeric_column(t, "p_given_f4");
    Plot plot("Counts per detection window", "photon counts N", "probability");
    std::vector<std::pair<double, double>> s3, s4;
    for (std::size_t i = 0; i < n.size(); ++i) {
        plot.extend(n[i] - 0.5, f3[i]);
        plot.extend(n[i] + 0.5, f4[i]);
        for (double dx : {-0.5, 0.5}) {
            s3.emplace_back(n[i] + dx, f3[i]);
            s4.emplace_back(n[i] + dx, f4[i]);
        }
    }
    const std::string lo = t.meta("lower_threshold_counts"), up = t.meta("upper_threshold_counts");
    if (!lo.empty()) plot.extend(cell_number(lo), 0.0);
    if (!up.empty()) plot.extend(cell_number(up), 0.0);
    plot.finish_ranges(true);
    plot.polyline(s3, "#2a9d3a");
    plot.polyline(s4, "#d62828");
    if (!lo.empty()) plot.vline(cell_number(lo), "black");
    if (!up.empty()) plot.vline(cell_number(up), "black");
    plot.legend("F=3 atom", "#2a9d3a");
    plot.legend("F=4 atom", "#d62828");
    return plot.svg(t.meta("manifest"));
}

std::string render_spectrum(const CsvTable& t) {
    const auto d = numeric_column(t, "delta_r_hz");
    const auto p = numeric_column(t, "p4");
    const auto e = numeric_column(t, "p4_err");
    Plot plot("Raman spectrum", "Raman detuning (kHz)", "P4");
    for (std::size_t i = 0; i < d.size(); ++i) {
        plot.extend(d[i] / 1e3, p[i] - e[i]);
        plot.extend(d[i] / 1e3, p[i] + e[i]);
    }
    plot.finish_ranges(true);
    for (std::size_t i = 0; i < d.size(); ++i) plot.marker(d[i] / 1e3, p[i], e[i], "#1d3557");
    return plot.svg(t.meta("manifest"));
}

std::string render_scan(const CsvTable& t) {
    const auto x = numeric_column(t, "param_value");
    const auto r = numeric_column(t, "r0");
    const std::string name = t.rows.empty() ? "" : t.rows.front()[t.column("param_name")];
    const bool logx = name == "i4_isat";
    Plot plot("Steady-state sideband ratio", logx ? "log10(I4 / Isat)" : "cooling Raman detuning (kHz)", "r0");
    std::vector<std::pair<double, double>> pts;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double xv = logx ? std::log10(x[i]) : x[i] / 1e3;
        plot.extend(xv, r[i]);
        pts.emplace_back(xv, r[i]);
    }
    plot.finish_ranges(true);
    plot.polyline(pts, "#1d3557");
    for (const auto& [xv, rv] : pts) plot.marker(xv, rv, 0.0, "#1d3557");
    return plot.svg(t.meta("manifest"));
}

std::string render_residuals(const CsvTable& t) {
    const auto d = numeric_column(t, "delta_r_hz");
    const auto p = numeric_column(t, "p4");
    const auto m = numeric_column(t, "model");
    Plot plot("Carrier fit", "Raman detuning (kHz)", "P4");
    std::vector<std::pair<double, double>> curve;
    for (std::size_t i = 0; i < d.size(); ++i) {
        plot.extend(d[i] / 1e3, p[i]);
        plot.extend(d[i] / 1e3, m[i]);
        curve.emplace_back(d[i] / 1e3, m[i]);
    }
    plot.finish_ranges(true);
    plot.polyline(curve, "#d62828");
    for (std::size_t i = 0; i < d.size(); ++i) plot.marker(d[i] / 1e3, p[i], 0.0, "#1d3557");
    return plot.svg(t.meta("manifest"));
}

} // namespace

std::string render_svg(const CsvTable& table) {
    if (table.has_column("p_given_f3")) return render_histogram(table);
    if (table.has_column("normalized_residual")) return render_residuals(table);
    if (table.has_column("p4_err")) return render_spectrum(table);
    if (table.has_column("param_name")) return render_scan(table);
    throw DomainError("no plot type for this CSV layout");
}

std::string sha256_hex(const std::string& bytes) {
    std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
    unsigned int length = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest.data(), &length, EVP_sha256(), nullptr) != 1)
        throw NumericalError("SHA-256 failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < length; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 0xf];
    }
    return out;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read '" + path + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

void write_file(const std::string& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << contents;
    if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

} // namespace rsc
