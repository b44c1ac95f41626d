#pragma once

#include <string>
#include <vector>

namespace delayoco::report {

// One x,y curve of plot data.
struct Series {
    std::string name;
    std::vector<double> x, y;
};

// Long format with header `curve,x,y`.
std::string series_csv(const std::vector<Series> &s);
std::vector<Series> parse_series_csv(const std::string &text);

// Natural logs of both axes; non-positive points are dropped.
std::vector<Series> log_log(const std::vector<Series> &s);

// Curve of mean regret vs T from a sweep table CSV (`T,mean,...`).
Series series_from_table(const std::string &name, const std::string &table_csv);

// Minimal SVG line chart.
std::string svg_chart(const std::vector<Series> &s, const std::string &title,
                      const std::string &xlabel, const std::string &ylabel);

// Writes through a temporary file in the same directory and renames it.
void write_atomic(const std::string &path, const std::string &content);

// Writes a set of files; if any write fails, removes the ones already
// written and rethrows.
struct OutputFile {
    std::string name;
    std::string content;
};
void write_all(const std::string &dir, const std::vector<OutputFile> &files);

// Curve name usable as a file-name fragment.
std::string slug(const std::string &name);

} // namespace delayoco::report
