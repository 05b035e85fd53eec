#include "fblab/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace fblab {

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

CsvTable::CsvTable(std::vector<std::string> header) : header_(std::move(header)) {
  for (std::size_t i = 0; i < header_.size(); ++i) {
    if (header_[i] == "status") status_column_ = static_cast<int>(i);
  }
}

void CsvTable::add_row(std::vector<CsvCell> row) {
  if (row.size() != header_.size()) throw std::logic_error("csv row width does not match header");
  std::string flags;
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (auto* d = std::get_if<double>(&row[i]); d && !std::isfinite(*d)) {
      *d = 0.0;
      flags += (flags.empty() ? "nonfinite:" : ";") + header_[i];
    }
  }
  if (!flags.empty() && status_column_ >= 0) {
    auto& status = std::get<std::string>(row[static_cast<std::size_t>(status_column_)]);
    status = status.empty() || status == "ok" ? flags : status + " " + flags;
  }
  rows_.push_back(std::move(row));
}

namespace {

std::string cell_text(const CsvCell& c) {
  if (const auto* d = std::get_if<double>(&c)) return format_number(*d);
  if (const auto* i = std::get_if<long long>(&c)) return std::to_string(*i);
  std::string s = std::get<std::string>(c);
  if (s.find_first_of(",\"\n") != std::string::npos) {
    std::string q = "\"";
    for (char ch : s) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
    return q + "\"";
  }
  return s;
}

std::string escape_xml(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace

std::string CsvTable::str() const {
  std::string out;
  for (std::size_t i = 0; i < header_.size(); ++i) out += (i ? "," : "") + header_[i];
  out += "\n";
  for (const auto& row : rows_) {
    for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + cell_text(row[i]);
    out += "\n";
  }
  return out;
}

std::string loglog_svg(const std::string& title, const std::string& xlabel,
                       const std::string& ylabel, const std::vector<Series>& series) {
  constexpr double kWidth = 640;
  constexpr double kHeight = 420;
  constexpr double kLeft = 80;
  constexpr double kRight = 20;
  constexpr double kTop = 40;
  constexpr double kBottom = 60;
  static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

  double xmin = std::numeric_limits<double>::infinity();
  double xmax = -xmin;
  double ymin = xmin;
  double ymax = -xmin;
  for (const Series& s : series) {
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      if (!(s.x[i] > 0.0 && s.y[i] > 0.0 && std::isfinite(s.x[i]) && std::isfinite(s.y[i]))) continue;
      xmin = std::min(xmin, std::log10(s.x[i]));
      xmax = std::max(xmax, std::log10(s.x[i]));
      ymin = std::min(ymin, std::log10(s.y[i]));
      ymax = std::max(ymax, std::log10(s.y[i]));
    }
  }
  if (!std::isfinite(xmin)) {
    xmin = ymin = 0.0;
    xmax = ymax = 1.0;
  }
  xmin = std::floor(xmin);
  ymin = std::floor(ymin);
  xmax = std::max(std::ceil(xmax), xmin + 1.0);
  ymax = std::max(std::ceil(ymax), ymin + 1.0);
  const double pw = kWidth - kLeft - kRight;
  const double ph = kHeight - kTop - kBottom;
  const auto px = [&](double lx) { return kLeft + (lx - xmin) / (xmax - xmin) * pw; };
  const auto py = [&](double ly) { return kTop + (ymax - ly) / (ymax - ymin) * ph; };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
     << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << fmt(kWidth / 2) << "\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">"
     << escape_xml(title) << "</text>\n";
  os << "<rect x=\"" << fmt(kLeft) << "\" y=\"" << fmt(kTop) << "\" width=\"" << fmt(pw)
     << "\" height=\"" << fmt(ph) << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int d = static_cast<int>(xmin); d <= static_cast<int>(xmax); ++d) {
    const double x = px(d);
    os << "<line x1=\"" << fmt(x) << "\" y1=\"" << fmt(kTop + ph) << "\" x2=\"" << fmt(x)
       << "\" y2=\"" << fmt(kTop + ph + 5) << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << fmt(x) << "\" y=\"" << fmt(kTop + ph + 20)
       << "\" text-anchor=\"middle\">1e" << d << "</text>\n";
  }
  for (int d = static_cast<int>(ymin); d <= static_cast<int>(ymax); ++d) {
    const double y = py(d);
    os << "<line x1=\"" << fmt(kLeft - 5) << "\" y1=\"" << fmt(y) << "\" x2=\"" << fmt(kLeft)
       << "\" y2=\"" << fmt(y) << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << fmt(kLeft - 8) << "\" y=\"" << fmt(y + 4)
       << "\" text-anchor=\"end\">1e" << d << "</text>\n";
  }
  os << "<text x=\"" << fmt(kLeft + pw / 2) << "\" y=\"" << fmt(kHeight - 15)
     << "\" text-anchor=\"middle\">" << escape_xml(xlabel) << "</text>\n";
  os << "<text x=\"18\" y=\"" << fmt(kTop + ph / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
     << fmt(kTop + ph / 2) << ")\">" << escape_xml(ylabel) << "</text>\n";
  for (std::size_t k = 0; k < series.size(); ++k) {
    const Series& s = series[k];
    const char* color = kColors[k % (sizeof kColors / sizeof *kColors)];
    std::string points;
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      if (!(s.x[i] > 0.0 && s.y[i] > 0.0 && std::isfinite(s.x[i]) && std::isfinite(s.y[i]))) continue;
      points += (points.empty() ? "" : " ") + fmt(px(std::log10(s.x[i]))) + "," +
                fmt(py(std::log10(s.y[i])));
    }
    if (!points.empty()) {
      os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\""
         << points << "\"/>\n";
    }
    os << "<text x=\"" << fmt(kLeft + 10) << "\" y=\"" << fmt(kTop + 16 + 14 * k) << "\" fill=\""
       << color << "\">" << escape_xml(s.name) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace fblab
