// Copyright 2026 The ncdlab Authors
// SPDX-License-Identifier: Apache-2.0

#include "ncdlab/plot.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <sstream>
#include <vector>

#include "ncdlab/csv.hpp"
#include "ncdlab/losses.hpp"

namespace ncd {

namespace {

constexpr double kWidth = 720;
constexpr double kHeight = 420;
constexpr double kLeft = 70;
constexpr double kRight = 150;
constexpr double kTop = 30;
constexpr double kBottom = 60;
constexpr const char* kGridHeader =
    "axis,cell,seeds,labeled_mean,labeled_sd,acc_mean,acc_sd,acc_median,leakage_mean,failures";
constexpr const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string escape(const std::string& s) {
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

std::vector<std::vector<std::string>> body_rows(std::istream& in, std::size_t width) {
  std::vector<std::vector<std::string>> rows;
  std::string line;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = csv::split_line(line);
    if (fields.size() != width) {
      throw PlotInputError("line " + std::to_string(line_no) + ": expected " + std::to_string(width) +
                           " fields, got " + std::to_string(fields.size()));
    }
    rows.push_back(std::move(fields));
  }
  if (rows.empty()) throw PlotInputError("no data rows");
  return rows;
}

double parse_field(const std::string& s, std::size_t row) {
  try {
    const double v = csv::parse_real(s, "value");
    if (!std::isfinite(v)) throw std::runtime_error("non-finite");
    return v;
  } catch (const std::exception&) {
    throw PlotInputError("data row " + std::to_string(row + 1) + ": bad number '" + s + "'");
  }
}

std::string svg_open(const std::string& title) {
  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
    << "\" font-family=\"sans-serif\" font-size=\"11\">\n"
    << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    << "<text x=\"" << num(kWidth / 2) << "\" y=\"18\" text-anchor=\"middle\" font-size=\"13\">" << escape(title)
    << "</text>\n"
    << "<line x1=\"" << kLeft << "\" y1=\"" << kHeight - kBottom << "\" x2=\"" << kWidth - kRight << "\" y2=\""
    << kHeight - kBottom << "\" stroke=\"black\"/>\n"
    << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\"" << kHeight - kBottom
    << "\" stroke=\"black\"/>\n";
  return o.str();
}

std::string render_history(std::istream& in) {
  const auto rows = body_rows(in, 9);
  const char* names[] = {"ce", "H", "mse", "kl", "var"};
  // epoch -> per-component (sum, count)
  std::map<long long, std::array<std::pair<double, std::size_t>, 5>> by_epoch;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    long long epoch = 0;
    try {
      epoch = csv::parse_int(r[0], "epoch");
    } catch (const std::exception&) {
      throw PlotInputError("data row " + std::to_string(i + 1) + ": bad epoch '" + r[0] + "'");
    }
    auto& slot = by_epoch[epoch];
    if (r[2] == "labeled") {
      slot[0].first += parse_field(r[3], i);
      ++slot[0].second;
    } else if (r[2] == "unlabeled") {
      for (std::size_t k = 1; k < 5; ++k) {
        slot[k].first += parse_field(r[3 + k], i);
        ++slot[k].second;
      }
    } else {
      throw PlotInputError("data row " + std::to_string(i + 1) + ": unknown branch '" + r[2] + "'");
    }
  }

  constexpr double kFloor = 1e-6;
  std::array<std::vector<std::pair<double, double>>, 5> series;
  double lo = INFINITY, hi = -INFINITY;
  for (const auto& [epoch, slot] : by_epoch) {
    for (std::size_t k = 0; k < 5; ++k) {
      if (slot[k].second == 0) continue;
      const double v = std::max(slot[k].first / static_cast<double>(slot[k].second), kFloor);
      series[k].emplace_back(static_cast<double>(epoch), std::log10(v));
      lo = std::min(lo, std::log10(v));
      hi = std::max(hi, std::log10(v));
    }
  }
  lo = std::floor(lo);
  hi = std::max(std::ceil(hi), lo + 1);
  const double e0 = static_cast<double>(by_epoch.begin()->first);
  const double e1 = std::max(static_cast<double>(by_epoch.rbegin()->first), e0 + 1);
  auto px = [&](double e) { return kLeft + (e - e0) / (e1 - e0) * (kWidth - kLeft - kRight); };
  auto py = [&](double l) { return kHeight - kBottom - (l - lo) / (hi - lo) * (kHeight - kTop - kBottom); };

  std::ostringstream o;
  o << svg_open("loss components (epoch mean, log scale)");
  for (double d = lo; d <= hi; d += 1) {
    o << "<line x1=\"" << kLeft << "\" y1=\"" << num(py(d)) << "\" x2=\"" << kWidth - kRight << "\" y2=\""
      << num(py(d)) << "\" stroke=\"#ddd\"/>\n"
      << "<text x=\"" << kLeft - 6 << "\" y=\"" << num(py(d) + 4) << "\" text-anchor=\"end\">1e"
      << static_cast<int>(d) << "</text>\n";
  }
  o << "<text x=\"" << num(px(e0)) << "\" y=\"" << kHeight - kBottom + 16 << "\">" << static_cast<long long>(e0)
    << "</text>\n"
    << "<text x=\"" << num(px(e1)) << "\" y=\"" << kHeight - kBottom + 16 << "\" text-anchor=\"end\">"
    << static_cast<long long>(e1) << "</text>\n"
    << "<text x=\"" << num((kLeft + kWidth - kRight) / 2) << "\" y=\"" << kHeight - 20
    << "\" text-anchor=\"middle\">epoch</text>\n";
  for (std::size_t k = 0; k < 5; ++k) {
    if (series[k].empty()) continue;
    o << "<polyline fill=\"none\" stroke=\"" << kColors[k] << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < series[k].size(); ++i) {
      o << (i ? " " : "") << num(px(series[k][i].first)) << ',' << num(py(series[k][i].second));
    }
    o << "\"/>\n";
    const double ly = kTop + 20 + 18 * static_cast<double>(k);
    o << "<line x1=\"" << kWidth - kRight + 15 << "\" y1=\"" << ly << "\" x2=\"" << kWidth - kRight + 35
      << "\" y2=\"" << ly << "\" stroke=\"" << kColors[k] << "\" stroke-width=\"2\"/>\n"
      << "<text x=\"" << kWidth - kRight + 40 << "\" y=\"" << ly + 4 << "\">" << names[k] << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

std::string render_grid(std::istream& in) {
  const auto rows = body_rows(in, 10);
  std::vector<std::string> labels;
  std::vector<double> acc, sd;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    labels.push_back(rows[i][0] + "/" + rows[i][1]);
    acc.push_back(std::clamp(parse_field(rows[i][5], i), 0.0, 1.0));
    sd.push_back(std::max(parse_field(rows[i][6], i), 0.0));
  }
  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  const double slot = plot_w / static_cast<double>(acc.size());
  auto py = [&](double v) { return kHeight - kBottom - v * plot_h; };

  std::ostringstream o;
  o << svg_open("novel ACC per ablation cell (mean, sd whiskers)");
  for (int t = 0; t <= 4; ++t) {
    const double v = 0.25 * t;
    o << "<line x1=\"" << kLeft << "\" y1=\"" << num(py(v)) << "\" x2=\"" << kWidth - kRight << "\" y2=\""
      << num(py(v)) << "\" stroke=\"#ddd\"/>\n"
      << "<text x=\"" << kLeft - 6 << "\" y=\"" << num(py(v) + 4) << "\" text-anchor=\"end\">" << num(v)
      << "</text>\n";
  }
  for (std::size_t i = 0; i < acc.size(); ++i) {
    const double x = kLeft + slot * static_cast<double>(i) + slot * 0.15;
    const double w = slot * 0.7;
    o << "<rect x=\"" << num(x) << "\" y=\"" << num(py(acc[i])) << "\" width=\"" << num(w) << "\" height=\""
      << num(acc[i] * plot_h) << "\" fill=\"" << kColors[0] << "\"/>\n";
    const double cx = x + w / 2;
    o << "<line x1=\"" << num(cx) << "\" y1=\"" << num(py(std::min(acc[i] + sd[i], 1.0))) << "\" x2=\"" << num(cx)
      << "\" y2=\"" << num(py(std::max(acc[i] - sd[i], 0.0))) << "\" stroke=\"black\"/>\n"
      << "<text transform=\"translate(" << num(cx) << ',' << num(kHeight - kBottom + 10)
      << ") rotate(30)\" font-size=\"9\">" << escape(labels[i]) << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

}  // namespace

std::string render_svg(std::istream& in) {
  std::string header;
  if (!std::getline(in, header)) throw PlotInputError("empty input");
  if (!header.empty() && header.back() == '\r') header.pop_back();
  if (header == kHistoryHeader) return render_history(in);
  if (header == kGridHeader) return render_grid(in);
  throw PlotInputError("unrecognized header '" + header + "'");
}

}  // namespace ncd
