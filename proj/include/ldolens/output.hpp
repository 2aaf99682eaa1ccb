#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "ldolens/error.hpp"

namespace ldolens {

// ---------------------------------------------------------------- CSV

inline std::string csv_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12e", v);
    return buf;
}

inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) {
        return s;
    }
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

class CsvWriter {
public:
    explicit CsvWriter(std::vector<std::string> header) : cols_(header.size()) { row(header); }

    void row(const std::vector<std::string>& fields) {
        if (fields.size() != cols_) {
            throw Error("csv: row has " + std::to_string(fields.size()) + " fields, expected " +
                        std::to_string(cols_));
        }
        for (std::size_t i = 0; i < fields.size(); ++i) {
            text_ += (i ? "," : "") + csv_field(fields[i]);
        }
        text_ += "\r\n";
    }

    const std::string& text() const noexcept { return text_; }

private:
    std::size_t cols_;
    std::string text_;
};

/// Splits RFC-4180 text into rows of fields.
inline std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (quoted) {
            if (c == '"' && i + 1 < text.size() && text[i + 1] == '"') {
                field += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                field += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            row.push_back(field);
            field.clear();
        } else if (c == '\n') {
            row.push_back(field);
            rows.push_back(row);
            row.clear();
            field.clear();
        } else if (c != '\r') {
            field += c;
        }
    }
    if (!field.empty() || !row.empty()) {
        row.push_back(field);
        rows.push_back(row);
    }
    return rows;
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError(path.string(), "cannot open for writing");
    }
    out << text;
    out.close();
    if (!out) {
        throw IoError(path.string(), "write failed");
    }
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError(path.string(), "cannot open for reading");
    }
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// ---------------------------------------------------------------- SVG

struct Series {
    std::vector<double> x;
    std::vector<double> y;
    std::string color = "#1f77b4";
    std::string label;
    bool dashed = false;
};

struct Panel {
    std::string y_label;
    std::vector<Series> series;
    std::vector<double> h_refs;  // horizontal reference lines
    std::vector<double> v_marks;  // vertical markers (e.g. pole magnitudes)
    std::string v_mark_color = "#d62728";
};

struct Plot {
    std::string title;
    std::string x_label;
    bool log_x = false;
    std::vector<Panel> panels;
};

inline Series series(std::string color, std::string label) {
    Series s;
    s.color = std::move(color);
    s.label = std::move(label);
    return s;
}

inline Panel panel(std::string y_label, std::vector<Series> ss, std::vector<double> h_refs = {},
                   std::vector<double> v_marks = {}) {
    Panel p;
    p.y_label = std::move(y_label);
    p.series = std::move(ss);
    p.h_refs = std::move(h_refs);
    p.v_marks = std::move(v_marks);
    return p;
}

inline Plot plot(std::string title, std::string x_label, bool log_x) {
    Plot p;
    p.title = std::move(title);
    p.x_label = std::move(x_label);
    p.log_x = log_x;
    return p;
}

namespace detail {

inline std::string fmt(double v, const char* spec = "%.2f") {
    char buf[48];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

inline std::string esc(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

inline std::string tick_label(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

// 1-2-5 ticks covering [lo, hi].
inline std::vector<double> linear_ticks(double lo, double hi) {
    const double span = hi - lo;
    const double raw = span / 6.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double m : {1.0, 2.0, 5.0, 10.0}) {
        if (m * mag >= raw) {
            step = m * mag;
            break;
        }
    }
    std::vector<double> t;
    for (double v = std::ceil(lo / step) * step; v <= hi + 1e-9 * span; v += step) {
        t.push_back(std::abs(v) < 1e-12 * step ? 0.0 : v);
    }
    return t;
}

}  // namespace detail

/// Standalone SVG document, 960x540 viewBox, panels stacked vertically.
inline std::string render_svg(const Plot& plot) {
    using detail::fmt;
    constexpr double W = 960.0, H = 540.0;
    constexpr double left = 80.0, right = 150.0, top = 40.0, bottom = 50.0, gap = 30.0;
    const std::size_t np = std::max<std::size_t>(plot.panels.size(), 1);
    const double ph = (H - top - bottom - gap * static_cast<double>(np - 1)) / static_cast<double>(np);
    const double pw = W - left - right;

    double xlo = std::numeric_limits<double>::infinity();
    double xhi = -xlo;
    for (const auto& p : plot.panels) {
        for (const auto& s : p.series) {
            for (double x : s.x) {
                if (plot.log_x && !(x > 0.0)) continue;
                xlo = std::min(xlo, x);
                xhi = std::max(xhi, x);
            }
        }
    }
    if (!std::isfinite(xlo)) {
        xlo = plot.log_x ? 1.0 : 0.0;
        xhi = plot.log_x ? 10.0 : 1.0;
    }
    if (xhi <= xlo) {
        xhi = plot.log_x ? xlo * 10.0 : xlo + 1.0;
    }
    auto xmap = [&](double x) {
        const double f = plot.log_x ? (std::log10(x) - std::log10(xlo)) / (std::log10(xhi) - std::log10(xlo))
                                    : (x - xlo) / (xhi - xlo);
        return left + f * pw;
    };

    std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 960 540\" "
                    "width=\"960\" height=\"540\" font-family=\"sans-serif\" font-size=\"12\">\n";
    s += "<rect x=\"0\" y=\"0\" width=\"960\" height=\"540\" fill=\"white\"/>\n";
    s += "<text x=\"" + fmt(W / 2) + "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" +
         detail::esc(plot.title) + "</text>\n";

    for (std::size_t k = 0; k < plot.panels.size(); ++k) {
        const Panel& p = plot.panels[k];
        const double y0 = top + static_cast<double>(k) * (ph + gap);
        double ylo = std::numeric_limits<double>::infinity();
        double yhi = -ylo;
        for (const auto& ser : p.series) {
            for (double y : ser.y) {
                if (std::isfinite(y)) {
                    ylo = std::min(ylo, y);
                    yhi = std::max(yhi, y);
                }
            }
        }
        for (double r : p.h_refs) {
            ylo = std::min(ylo, r);
            yhi = std::max(yhi, r);
        }
        if (!std::isfinite(ylo)) {
            ylo = 0.0;
            yhi = 1.0;
        }
        if (yhi - ylo < 1e-12 * std::max(1.0, std::abs(yhi))) {
            ylo -= 1.0;
            yhi += 1.0;
        }
        const double pad = 0.05 * (yhi - ylo);
        ylo -= pad;
        yhi += pad;
        auto ymap = [&](double y) { return y0 + ph - (y - ylo) / (yhi - ylo) * ph; };

        s += "<rect x=\"" + fmt(left) + "\" y=\"" + fmt(y0) + "\" width=\"" + fmt(pw) +
             "\" height=\"" + fmt(ph) + "\" fill=\"none\" stroke=\"#333\"/>\n";

        // x grid and labels
        if (plot.log_x) {
            for (double d = std::ceil(std::log10(xlo)); d <= std::floor(std::log10(xhi)); d += 1.0) {
                const double x = xmap(std::pow(10.0, d));
                s += "<line x1=\"" + fmt(x) + "\" y1=\"" + fmt(y0) + "\" x2=\"" + fmt(x) + "\" y2=\"" +
                     fmt(y0 + ph) + "\" stroke=\"#ddd\"/>\n";
                if (k + 1 == plot.panels.size()) {
                    s += "<text x=\"" + fmt(x) + "\" y=\"" + fmt(y0 + ph + 16) +
                         "\" text-anchor=\"middle\">1e" + fmt(d, "%.0f") + "</text>\n";
                }
            }
        } else {
            for (double t : detail::linear_ticks(xlo, xhi)) {
                const double x = xmap(t);
                s += "<line x1=\"" + fmt(x) + "\" y1=\"" + fmt(y0) + "\" x2=\"" + fmt(x) + "\" y2=\"" +
                     fmt(y0 + ph) + "\" stroke=\"#ddd\"/>\n";
                if (k + 1 == plot.panels.size()) {
                    s += "<text x=\"" + fmt(x) + "\" y=\"" + fmt(y0 + ph + 16) +
                         "\" text-anchor=\"middle\">" + detail::tick_label(t) + "</text>\n";
                }
            }
        }
        for (double t : detail::linear_ticks(ylo, yhi)) {
            const double y = ymap(t);
            s += "<line x1=\"" + fmt(left) + "\" y1=\"" + fmt(y) + "\" x2=\"" + fmt(left + pw) +
                 "\" y2=\"" + fmt(y) + "\" stroke=\"#eee\"/>\n";
            s += "<text x=\"" + fmt(left - 6) + "\" y=\"" + fmt(y + 4) + "\" text-anchor=\"end\">" +
                 detail::tick_label(t) + "</text>\n";
        }
        s += "<text x=\"18\" y=\"" + fmt(y0 + ph / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 18 " +
             fmt(y0 + ph / 2) + ")\">" + detail::esc(p.y_label) + "</text>\n";

        for (double r : p.h_refs) {
            s += "<line x1=\"" + fmt(left) + "\" y1=\"" + fmt(ymap(r)) + "\" x2=\"" + fmt(left + pw) +
                 "\" y2=\"" + fmt(ymap(r)) + "\" stroke=\"#d62728\" stroke-dasharray=\"6 4\"/>\n";
        }
        for (double m : p.v_marks) {
            if ((plot.log_x && !(m > 0.0)) || m < xlo || m > xhi) continue;
            const double x = xmap(m);
            s += "<line x1=\"" + fmt(x) + "\" y1=\"" + fmt(y0) + "\" x2=\"" + fmt(x) + "\" y2=\"" +
                 fmt(y0 + ph) + "\" stroke=\"" + p.v_mark_color + "\" stroke-dasharray=\"2 3\"/>\n";
        }

        double legend_y = y0 + 14;
        for (const auto& ser : p.series) {
            std::string pts;
            for (std::size_t i = 0; i < ser.x.size() && i < ser.y.size(); ++i) {
                if ((plot.log_x && !(ser.x[i] > 0.0)) || !std::isfinite(ser.y[i])) continue;
                pts += fmt(xmap(ser.x[i])) + "," + fmt(ymap(ser.y[i])) + " ";
            }
            s += "<polyline fill=\"none\" stroke=\"" + ser.color + "\" stroke-width=\"1.5\"" +
                 (ser.dashed ? " stroke-dasharray=\"5 3\"" : "") + " points=\"" + pts + "\"/>\n";
            if (!ser.label.empty()) {
                s += "<line x1=\"" + fmt(left + pw + 10) + "\" y1=\"" + fmt(legend_y - 4) + "\" x2=\"" +
                     fmt(left + pw + 30) + "\" y2=\"" + fmt(legend_y - 4) + "\" stroke=\"" + ser.color +
                     "\" stroke-width=\"2\"/>\n";
                s += "<text x=\"" + fmt(left + pw + 34) + "\" y=\"" + fmt(legend_y) + "\">" +
                     detail::esc(ser.label) + "</text>\n";
                legend_y += 16;
            }
        }
    }
    s += "<text x=\"" + fmt(left + pw / 2) + "\" y=\"" + fmt(H - 12) + "\" text-anchor=\"middle\">" +
         detail::esc(plot.x_label) + "</text>\n";
    s += "</svg>\n";
    return s;
}

}  // namespace ldolens
