#include "delayoco/report.hpp"

#include "delayoco/common.hpp"
#include "delayoco/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

namespace delayoco::report {

namespace fs = std::filesystem;

namespace {

std::vector<std::string> split(const std::string &line, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

double to_num(const std::string &s, int line) {
    try {
        std::size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos == s.size())
            return v;
    } catch (const std::exception &) {
    }
    throw ValidationError("csv line " + std::to_string(line) + ": bad number `" + s + "`");
}

std::string xml_escape(const std::string &s) {
    std::string o;
    for (char c : s) {
        switch (c) {
        case '<':
            o += "&lt;";
            break;
        case '>':
            o += "&gt;";
            break;
        case '&':
            o += "&amp;";
            break;
        case '"':
            o += "&quot;";
            break;
        default:
            o += c;
        }
    }
    return o;
}

} // namespace

std::string series_csv(const std::vector<Series> &s) {
    std::string out = "curve,x,y\n";
    for (const auto &c : s) {
        require(c.x.size() == c.y.size(), "series `" + c.name + "`: x and y lengths differ");
        require(c.name.find_first_of(",\n") == std::string::npos,
                "series name may not contain commas or newlines");
        for (std::size_t i = 0; i < c.x.size(); ++i)
            out += c.name + ',' + harness::fmt_double(c.x[i]) + ',' +
                   harness::fmt_double(c.y[i]) + '\n';
    }
    return out;
}

std::vector<Series> parse_series_csv(const std::string &text) {
    std::istringstream in(text);
    std::string line;
    require(static_cast<bool>(std::getline(in, line)), "plot data: empty input");
    if (!line.empty() && line.back() == '\r')
        line.pop_back();
    require(line == "curve,x,y", "plot data: expected header `curve,x,y`");
    std::vector<Series> out;
    std::map<std::string, std::size_t> index;
    int n = 1;
    while (std::getline(in, line)) {
        ++n;
        if (line.empty() || line == "\r")
            continue;
        auto f = split(line, ',');
        require(f.size() == 3, "csv line " + std::to_string(n) + ": expected 3 fields");
        auto it = index.find(f[0]);
        if (it == index.end()) {
            it = index.emplace(f[0], out.size()).first;
            out.push_back({f[0], {}, {}});
        }
        out[it->second].x.push_back(to_num(f[1], n));
        out[it->second].y.push_back(to_num(f[2], n));
    }
    return out;
}

std::vector<Series> log_log(const std::vector<Series> &s) {
    std::vector<Series> out;
    for (const auto &c : s) {
        Series l{c.name, {}, {}};
        for (std::size_t i = 0; i < c.x.size(); ++i)
            if (c.x[i] > 0 && c.y[i] > 0) {
                l.x.push_back(std::log(c.x[i]));
                l.y.push_back(std::log(c.y[i]));
            }
        out.push_back(std::move(l));
    }
    return out;
}

Series series_from_table(const std::string &name, const std::string &table_csv) {
    std::istringstream in(table_csv);
    std::string line;
    require(static_cast<bool>(std::getline(in, line)), "table: empty input");
    auto head = split(line, ',');
    auto col = [&](const char *c) {
        auto it = std::find(head.begin(), head.end(), c);
        require(it != head.end(), std::string("table: missing column `") + c + "`");
        return static_cast<std::size_t>(it - head.begin());
    };
    const std::size_t cT = col("T"), cm = col("mean");
    Series s{name, {}, {}};
    int n = 1;
    while (std::getline(in, line)) {
        ++n;
        if (line.empty() || line == "\r")
            continue;
        auto f = split(line, ',');
        require(f.size() == head.size(),
                "table line " + std::to_string(n) + ": wrong number of fields");
        s.x.push_back(to_num(f[cT], n));
        s.y.push_back(to_num(f[cm], n));
    }
    return s;
}

std::string svg_chart(const std::vector<Series> &s, const std::string &title,
                      const std::string &xlabel, const std::string &ylabel) {
    const double W = 640, H = 420, L = 70, R = 150, Tm = 40, B = 50;
    double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
    for (const auto &c : s)
        for (std::size_t i = 0; i < c.x.size(); ++i) {
            x0 = std::min(x0, c.x[i]);
            x1 = std::max(x1, c.x[i]);
            y0 = std::min(y0, c.y[i]);
            y1 = std::max(y1, c.y[i]);
        }
    if (!std::isfinite(x0)) {
        x0 = y0 = 0;
        x1 = y1 = 1;
    }
    if (x1 == x0)
        x1 = x0 + 1;
    if (y1 == y0)
        y1 = y0 + 1;
    auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
    auto py = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - Tm - B); };
    static const char *colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                   "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};
    char buf[256];
    std::string o;
    std::snprintf(buf, sizeof buf,
                  "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%.0f\" height=\"%.0f\">\n",
                  W, H);
    o += buf;
    o += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    std::snprintf(buf, sizeof buf,
                  "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"black\"/>\n"
                  "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"black\"/>\n",
                  L, H - B, W - R, H - B, L, Tm, L, H - B);
    o += buf;
    for (int i = 0; i <= 4; ++i) {
        double xv = x0 + (x1 - x0) * i / 4, yv = y0 + (y1 - y0) * i / 4;
        std::snprintf(buf, sizeof buf,
                      "<text x=\"%.1f\" y=\"%.1f\" font-size=\"11\" text-anchor=\"middle\">%.3g</text>\n"
                      "<text x=\"%.1f\" y=\"%.1f\" font-size=\"11\" text-anchor=\"end\">%.3g</text>\n",
                      px(xv), H - B + 16, xv, L - 6, py(yv) + 4, yv);
        o += buf;
    }
    o += "<text x=\"" + std::to_string(static_cast<int>(W / 2)) +
         "\" y=\"22\" font-size=\"14\" text-anchor=\"middle\">" + xml_escape(title) +
         "</text>\n";
    o += "<text x=\"" + std::to_string(static_cast<int>((L + W - R) / 2)) + "\" y=\"" +
         std::to_string(static_cast<int>(H - 12)) +
         "\" font-size=\"12\" text-anchor=\"middle\">" + xml_escape(xlabel) + "</text>\n";
    o += "<text x=\"16\" y=\"" + std::to_string(static_cast<int>(H / 2)) +
         "\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 16 " +
         std::to_string(static_cast<int>(H / 2)) + ")\">" + xml_escape(ylabel) + "</text>\n";
    for (std::size_t k = 0; k < s.size(); ++k) {
        const char *col = colors[k % 8];
        std::string pts;
        for (std::size_t i = 0; i < s[k].x.size(); ++i) {
            std::snprintf(buf, sizeof buf, "%.2f,%.2f ", px(s[k].x[i]), py(s[k].y[i]));
            pts += buf;
        }
        o += std::string("<polyline fill=\"none\" stroke=\"") + col +
             "\" stroke-width=\"2\" points=\"" + pts + "\"/>\n";
        std::snprintf(buf, sizeof buf,
                      "<text x=\"%.1f\" y=\"%.1f\" font-size=\"12\" fill=\"%s\">",
                      W - R + 10, Tm + 16.0 * static_cast<double>(k + 1), col);
        o += buf + xml_escape(s[k].name) + "</text>\n";
    }
    o += "</svg>\n";
    return o;
}

void write_atomic(const std::string &path, const std::string &content) {
    fs::path p(path);
    fs::path tmp = p;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw std::runtime_error("cannot write " + tmp.string());
        out << content;
        out.flush();
        if (!out) {
            out.close();
            std::error_code ec;
            fs::remove(tmp, ec);
            throw std::runtime_error("write failed: " + tmp.string());
        }
    }
    fs::rename(tmp, p);
}

void write_all(const std::string &dir, const std::vector<OutputFile> &files) {
    fs::create_directories(dir);
    std::vector<fs::path> done;
    try {
        for (const auto &f : files) {
            fs::path p = fs::path(dir) / f.name;
            write_atomic(p.string(), f.content);
            done.push_back(p);
        }
    } catch (...) {
        std::error_code ec;
        for (const auto &p : done)
            fs::remove(p, ec);
        throw;
    }
}

std::string slug(const std::string &name) {
    std::string s;
    for (char c : name) {
        if (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_')
            s += c;
        else if (!s.empty() && s.back() != '_')
            s += '_';
    }
    while (!s.empty() && s.back() == '_')
        s.pop_back();
    return s.empty() ? "curve" : s;
}

} // namespace delayoco::report
