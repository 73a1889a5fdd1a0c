#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "quarks/error.hpp"
#include "quarks/harness.hpp"

namespace quarks::harness {

using nlohmann::json;

namespace {

const char* const op_names[] = {"send", "read", "all"};

std::string fmt(double v) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, r.ptr};
}

std::string fmt_fixed(double v, int digits = 1) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

double parse_double(const std::string& s) {
  double v = 0;
  auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc{} || r.ptr != s.data() + s.size()) fail(ErrorKind::validation, "bad number " + s);
  return v;
}

std::size_t parse_size(const std::string& s) {
  std::size_t v = 0;
  auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc{} || r.ptr != s.data() + s.size()) fail(ErrorKind::validation, "bad integer " + s);
  return v;
}

void split(const std::vector<CycleResult>& results, std::size_t ceiling, std::vector<const CycleResult*>& normal,
           std::vector<const CycleResult*>& stress) {
  for (const auto& r : results) (r.user_count <= ceiling ? normal : stress).push_back(&r);
}

}  // namespace

json TrendReport::to_json() const {
  json checks_json = json::array();
  for (const auto& c : checks) checks_json.push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
  return {{"pass", pass}, {"checks", checks_json}};
}

TrendReport assert_trends(const std::vector<CycleResult>& results, TrendTolerance tol) {
  std::vector<const CycleResult*> normal, stress;
  split(results, tol.normal_ceiling, normal, stress);
  TrendReport report;
  auto all = [](const CycleResult* r) -> const OpStats& { return r->op("all"); };

  TrendCheck a{"throughput_nondecreasing", normal.size() >= 5, ""};
  if (!a.pass) a.detail = "need at least 5 normal cycles, have " + std::to_string(normal.size());
  for (std::size_t i = 0; a.pass && i + 1 < normal.size(); ++i) {
    const double prev = all(normal[i]).throughput_rps, next = all(normal[i + 1]).throughput_rps;
    if (next < (1.0 - tol.throughput_step) * prev) {
      a.pass = false;
      a.detail = std::to_string(normal[i]->user_count) + "->" + std::to_string(normal[i + 1]->user_count) +
                 " users: " + fmt_fixed(prev) + " -> " + fmt_fixed(next) + " rps";
    }
  }
  if (a.pass) a.detail = "all normal steps within tolerance";

  TrendCheck b{"stress_plateau", stress.size() >= 3, ""};
  if (!b.pass) {
    b.detail = "need at least 3 stress cycles, have " + std::to_string(stress.size());
  } else {
    double sum = 0, mx = 0;
    for (auto* r : stress) {
      sum += all(r).throughput_rps;
      mx = std::max(mx, all(r).throughput_rps);
    }
    const double mean = sum / static_cast<double>(stress.size());
    b.pass = mx <= (1.0 + tol.plateau) * mean;
    b.detail = "max " + fmt_fixed(mx) + " rps vs mean " + fmt_fixed(mean) + " rps (limit " +
               fmt_fixed((1.0 + tol.plateau) * mean) + ")";
  }

  auto latency_check = [&](const std::string& op) {
    TrendCheck c{op + "_latency_nondecreasing", normal.size() >= 5, ""};
    if (!c.pass) c.detail = "need at least 5 normal cycles, have " + std::to_string(normal.size());
    for (std::size_t i = 0; c.pass && i + 1 < normal.size(); ++i) {
      const double prev = normal[i]->op(op).median_ms, next = normal[i + 1]->op(op).median_ms;
      if (next < (1.0 - tol.latency_step) * prev) {
        c.pass = false;
        c.detail = std::to_string(normal[i]->user_count) + "->" + std::to_string(normal[i + 1]->user_count) +
                   " users: " + fmt_fixed(prev, 2) + " -> " + fmt_fixed(next, 2) + " ms";
      }
    }
    if (c.pass) c.detail = "all normal steps within tolerance";
    return c;
  };

  std::size_t failures = 0;
  for (const auto& r : results) failures += r.failure_count();
  TrendCheck d{"zero_failures", failures == 0 && !results.empty(), std::to_string(failures) + " failed requests"};

  report.checks = {a, b, latency_check("send"), latency_check("read"), d};
  report.pass = std::all_of(report.checks.begin(), report.checks.end(), [](const auto& x) { return x.pass; });
  return report;
}

void write_csv(const std::vector<CycleResult>& results, const std::filesystem::path& file) {
  std::ofstream out(file, std::ios::trunc);
  if (!out) fail(ErrorKind::validation, "cannot write " + file.string());
  out << "cycle,user_count,op,median_ms,p95_ms,throughput_rps,failures\n";
  for (const auto& r : results)
    for (const auto* name : op_names) {
      auto it = r.ops.find(name);
      if (it == r.ops.end()) continue;
      const auto& s = it->second;
      out << r.cycle << ',' << r.user_count << ',' << name << ',' << fmt(s.median_ms) << ',' << fmt(s.p95_ms)
          << ',' << fmt(s.throughput_rps) << ',' << s.failures << '\n';
    }
  if (!out) fail(ErrorKind::internal, "failed writing " + file.string());
}

std::vector<CycleResult> read_csv(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) fail(ErrorKind::not_found, "cannot read " + file.string());
  std::string line;
  std::getline(in, line);
  if (line != "cycle,user_count,op,median_ms,p95_ms,throughput_rps,failures")
    fail(ErrorKind::validation, "unexpected CSV header");
  std::vector<CycleResult> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
    if (f.size() != 7) fail(ErrorKind::validation, "CSV row has " + std::to_string(f.size()) + " columns");
    const auto cycle = parse_size(f[0]);
    if (out.empty() || out.back().cycle != cycle) {
      out.push_back({});
      out.back().cycle = cycle;
      out.back().user_count = parse_size(f[1]);
    }
    out.back().ops[f[2]] = {parse_double(f[3]), parse_double(f[4]), parse_double(f[5]), parse_size(f[6])};
  }
  return out;
}

namespace {

struct Series {
  std::string name;
  std::string color;
  std::vector<std::pair<double, double>> points;
};

std::string line_chart(const std::string& title, const std::string& y_label, const std::vector<Series>& series) {
  constexpr double W = 640, H = 400, L = 70, R = 120, T = 40, B = 50;
  double x_min = 1e300, x_max = -1e300, y_max = 0;
  for (const auto& s : series)
    for (const auto& [x, y] : s.points) {
      x_min = std::min(x_min, x);
      x_max = std::max(x_max, x);
      y_max = std::max(y_max, y);
    }
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << title << "</text>\n";
  if (x_min > x_max) {
    svg << "<text x=\"" << W / 2 << "\" y=\"" << H / 2 << "\" text-anchor=\"middle\">no data</text>\n</svg>\n";
    return svg.str();
  }
  if (x_max == x_min) x_max = x_min + 1;
  if (y_max <= 0) y_max = 1;
  y_max *= 1.1;
  auto px = [&](double x) { return L + (x - x_min) / (x_max - x_min) * (W - L - R); };
  auto py = [&](double y) { return H - B - y / y_max * (H - T - B); };

  svg << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
      << "\" stroke=\"black\"/>\n<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B
      << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 5; ++i) {
    const double y = y_max * i / 5;
    svg << "<line x1=\"" << L - 4 << "\" y1=\"" << py(y) << "\" x2=\"" << W - R << "\" y2=\"" << py(y)
        << "\" stroke=\"#ddd\"/>\n<text x=\"" << L - 8 << "\" y=\"" << py(y) + 4 << "\" text-anchor=\"end\">"
        << fmt_fixed(y, y_max < 10 ? 2 : 0) << "</text>\n";
  }
  std::vector<double> xs;
  for (const auto& s : series)
    for (const auto& p : s.points) xs.push_back(p.first);
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  for (double x : xs)
    svg << "<text x=\"" << px(x) << "\" y=\"" << H - B + 18 << "\" text-anchor=\"middle\">" << x << "</text>\n";
  svg << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">users</text>\n"
      << "<text x=\"18\" y=\"" << (T + H - B) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
      << (T + H - B) / 2 << ")\">" << y_label << "</text>\n";
  double legend_y = T + 10;
  for (const auto& s : series) {
    svg << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"2\" points=\"";
    for (const auto& [x, y] : s.points) svg << px(x) << ',' << py(y) << ' ';
    svg << "\"/>\n";
    for (const auto& [x, y] : s.points)
      svg << "<circle cx=\"" << px(x) << "\" cy=\"" << py(y) << "\" r=\"3\" fill=\"" << s.color << "\"/>\n";
    svg << "<rect x=\"" << W - R + 15 << "\" y=\"" << legend_y - 9 << "\" width=\"12\" height=\"12\" fill=\""
        << s.color << "\"/>\n<text x=\"" << W - R + 32 << "\" y=\"" << legend_y + 1 << "\">" << s.name
        << "</text>\n";
    legend_y += 20;
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace

std::vector<std::filesystem::path> emit_plots(const std::vector<CycleResult>& results,
                                              const std::filesystem::path& dir, std::size_t ceiling) {
  if (results.empty()) fail(ErrorKind::validation, "no results to plot");
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  std::vector<std::filesystem::path> written;
  const auto csv = dir / "results.csv";
  write_csv(results, csv);
  written.push_back(csv);

  std::vector<const CycleResult*> normal, stress;
  split(results, ceiling, normal, stress);
  const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c"};
  auto build = [&](const std::vector<const CycleResult*>& rows, bool latency) {
    std::vector<Series> out;
    for (int i = 0; i < 3; ++i) {
      Series s{op_names[i], colors[i], {}};
      for (auto* r : rows) {
        auto it = r->ops.find(op_names[i]);
        if (it == r->ops.end()) continue;
        s.points.push_back({static_cast<double>(r->user_count),
                            latency ? it->second.median_ms : it->second.throughput_rps});
      }
      out.push_back(std::move(s));
    }
    return out;
  };
  const struct {
    const char* file;
    const char* title;
    const char* y;
    bool latency;
    const std::vector<const CycleResult*>* rows;
  } charts[] = {
      {"latency_normal.svg", "Median response time (normal load)", "median response time (ms)", true, &normal},
      {"latency_stress.svg", "Median response time (stress)", "median response time (ms)", true, &stress},
      {"throughput_normal.svg", "Throughput (normal load)", "requests per second", false, &normal},
      {"throughput_stress.svg", "Throughput (stress)", "requests per second", false, &stress},
  };
  for (const auto& c : charts) {
    const auto path = dir / c.file;
    std::ofstream out(path, std::ios::trunc);
    if (!out) fail(ErrorKind::validation, "cannot write " + path.string());
    out << line_chart(c.title, c.y, build(*c.rows, c.latency));
    written.push_back(path);
  }
  return written;
}

}  // namespace quarks::harness
