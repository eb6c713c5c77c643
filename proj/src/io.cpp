#include "vfc/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <vector>

namespace vfc {

namespace {

std::string fmt17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

[[noreturn]] void io_fail(const std::string& path, const std::string& what) {
  throw Error("io: " + what + " (" + path + ")");
}

}  // namespace

void emit_csv(const Trajectory& traj, const std::string& path) {
  if (traj.records() == 0) io_fail(path, "refusing to write an empty trajectory");
  std::ofstream out(path);
  if (!out) io_fail(path, "cannot open for writing");

  const int N = traj.n_agents, n = traj.state_dim, p = traj.param_dim;
  const bool has_s = !traj.s.empty();

  out << "t";
  for (int i = 0; i < N; ++i)
    for (int q = 0; q < n; ++q) out << ",x_" << i << "_" << q;
  for (int i = 0; i < N; ++i)
    for (int q = 0; q < p; ++q) out << ",theta_" << i << "_" << q;
  for (int q = 0; q < n; ++q) out << ",chi_o_" << q;
  out << ",norm_chi_tilde";
  for (int q = 0; q < p; ++q) out << ",vartheta_o_" << q;
  out << ",norm_vartheta_tilde,norm_xi";
  if (has_s) {
    for (int q = 0; q < n; ++q) out << ",s_" << q;
    out << ",sync_err";
  }
  out << ",param_err\n";

  for (std::size_t j = 0; j < traj.records(); ++j) {
    out << fmt17(traj.times[j]);
    for (int i = 0; i < N; ++i)
      for (int q = 0; q < n; ++q) out << "," << fmt17(traj.x[j](q, i));
    for (int i = 0; i < N; ++i)
      for (int q = 0; q < p; ++q) out << "," << fmt17(traj.theta[j](q, i));
    for (int q = 0; q < n; ++q) out << "," << fmt17(traj.chi_o[j](q));
    out << "," << fmt17(traj.norm_chi_tilde[j]);
    for (int q = 0; q < p; ++q) out << "," << fmt17(traj.vartheta_o[j](q));
    out << "," << fmt17(traj.norm_vartheta_tilde[j]);
    out << "," << fmt17(traj.norm_xi[j]);
    if (has_s) {
      for (int q = 0; q < n; ++q) out << "," << fmt17(traj.s[j](q));
      out << "," << fmt17(traj.sync_err[j]);
    }
    out << "," << fmt17(traj.param_err[j]) << "\n";
  }
  if (!out) io_fail(path, "write failed");
}

Trajectory read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) io_fail(path, "cannot open for reading");
  std::string header;
  if (!std::getline(in, header)) io_fail(path, "missing header");

  std::vector<std::string> cols;
  {
    std::stringstream ss(header);
    std::string tok;
    while (std::getline(ss, tok, ',')) cols.push_back(tok);
  }
  int N = 0, n = 0, p = 0;
  bool has_s = false;
  for (const auto& c : cols) {
    int i, q;
    if (std::sscanf(c.c_str(), "x_%d_%d", &i, &q) == 2) {
      N = std::max(N, i + 1);
      n = std::max(n, q + 1);
    } else if (std::sscanf(c.c_str(), "theta_%d_%d", &i, &q) == 2) {
      p = std::max(p, q + 1);
    } else if (c == "s_0") {
      has_s = true;
    }
  }
  if (N == 0 || n == 0 || p == 0) io_fail(path, "header lacks state/theta columns");

  Trajectory traj;
  traj.n_agents = N;
  traj.state_dim = n;
  traj.param_dim = p;

  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string tok;
    std::vector<double> v;
    while (std::getline(ss, tok, ',')) v.push_back(std::strtod(tok.c_str(), nullptr));
    if (v.size() != cols.size()) io_fail(path, "row width mismatch");
    std::size_t at = 0;
    traj.times.push_back(v[at++]);
    Eigen::MatrixXd x(n, N), theta(p, N);
    for (int i = 0; i < N; ++i)
      for (int q = 0; q < n; ++q) x(q, i) = v[at++];
    for (int i = 0; i < N; ++i)
      for (int q = 0; q < p; ++q) theta(q, i) = v[at++];
    traj.x.push_back(x);
    traj.theta.push_back(theta);
    Eigen::VectorXd chi_o(n);
    for (int q = 0; q < n; ++q) chi_o(q) = v[at++];
    traj.chi_o.push_back(chi_o);
    traj.norm_chi_tilde.push_back(v[at++]);
    Eigen::VectorXd vo(p);
    for (int q = 0; q < p; ++q) vo(q) = v[at++];
    traj.vartheta_o.push_back(vo);
    traj.norm_vartheta_tilde.push_back(v[at++]);
    traj.norm_xi.push_back(v[at++]);
    if (has_s) {
      Eigen::VectorXd s(n);
      for (int q = 0; q < n; ++q) s(q) = v[at++];
      traj.s.push_back(s);
      traj.sync_err.push_back(v[at++]);
    }
    traj.param_err.push_back(v[at++]);
  }
  return traj;
}

namespace {

struct Panel {
  std::string title;
  bool log_scale = false;
  struct Curve {
    std::string label;
    std::vector<double> y;
    bool dashed = false;
  };
  std::vector<Curve> curves;
};

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

void render_svg(const std::vector<Panel>& panels, const std::vector<double>& t,
                const std::string& path) {
  const int width = 880, panel_h = 220, margin_l = 70, margin_r = 20,
            margin_v = 40;
  const int height = static_cast<int>(panels.size()) * (panel_h + margin_v) + 20;
  std::ofstream out(path);
  if (!out) io_fail(path, "cannot open for writing");
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
      << "\" height=\"" << height << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  const double t0 = t.front(), t1 = t.back();
  for (std::size_t pi = 0; pi < panels.size(); ++pi) {
    const Panel& panel = panels[pi];
    const int top = 20 + static_cast<int>(pi) * (panel_h + margin_v);
    const int plot_w = width - margin_l - margin_r;

    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    auto tr_y = [&](double y) { return panel.log_scale ? std::log10(std::max(y, 1e-300)) : y; };
    for (const auto& c : panel.curves) {
      for (double y : c.y) {
        if (!std::isfinite(y)) continue;
        lo = std::min(lo, tr_y(y));
        hi = std::max(hi, tr_y(y));
      }
    }
    if (!std::isfinite(lo)) {
      lo = 0.0;
      hi = 1.0;
    }
    if (hi - lo < 1e-12) {
      hi += 0.5;
      lo -= 0.5;
    }
    const double pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;

    auto px = [&](double tv) {
      return margin_l + plot_w * (tv - t0) / std::max(1e-300, t1 - t0);
    };
    auto py = [&](double yv) { return top + panel_h * (hi - tr_y(yv)) / (hi - lo); };

    out << "<text x=\"" << margin_l << "\" y=\"" << top - 6 << "\">" << panel.title
        << "</text>\n";
    out << "<rect x=\"" << margin_l << "\" y=\"" << top << "\" width=\"" << plot_w
        << "\" height=\"" << panel_h << "\" fill=\"none\" stroke=\"#444\"/>\n";
    // Axis extremes.
    char lab[64];
    std::snprintf(lab, sizeof(lab), "%.4g", panel.log_scale ? std::pow(10.0, hi) : hi);
    out << "<text x=\"4\" y=\"" << top + 12 << "\">" << lab << "</text>\n";
    std::snprintf(lab, sizeof(lab), "%.4g", panel.log_scale ? std::pow(10.0, lo) : lo);
    out << "<text x=\"4\" y=\"" << top + panel_h << "\">" << lab << "</text>\n";
    std::snprintf(lab, sizeof(lab), "t = %.4g .. %.4g%s", t0, t1,
                  panel.log_scale ? " (log scale)" : "");
    out << "<text x=\"" << margin_l << "\" y=\"" << top + panel_h + 14 << "\">" << lab
        << "</text>\n";

    int color = 0;
    int legend_x = margin_l + 8;
    for (const auto& c : panel.curves) {
      const char* col = kPalette[color % 8];
      out << "<polyline fill=\"none\" stroke=\"" << col << "\" stroke-width=\"1.2\"";
      if (c.dashed) out << " stroke-dasharray=\"6 3\"";
      out << " points=\"";
      // Thin long series so the SVG stays small.
      const std::size_t stride = std::max<std::size_t>(1, t.size() / 2000);
      for (std::size_t j = 0; j < t.size(); j += stride) {
        if (!std::isfinite(c.y[j])) continue;
        out << px(t[j]) << "," << py(c.y[j]) << " ";
      }
      if (!c.y.empty() && std::isfinite(c.y.back())) {
        out << px(t.back()) << "," << py(c.y.back());
      }
      out << "\"/>\n";
      out << "<text x=\"" << legend_x << "\" y=\"" << top + 14 << "\" fill=\"" << col
          << "\">" << c.label << "</text>\n";
      legend_x += static_cast<int>(c.label.size()) * 7 + 18;
      ++color;
    }
  }
  out << "</svg>\n";
  if (!out) io_fail(path, "write failed");
}

}  // namespace

void emit_plot(const Trajectory& traj, const std::string& path,
               const PlotSelection& sel) {
  if (!sel.states && !sel.params && !sel.errors) {
    throw EmptySelection("emit_plot: no signal groups selected");
  }
  if (traj.records() == 0) io_fail(path, "empty trajectory");

  const int N = traj.n_agents, n = traj.state_dim, p = traj.param_dim;
  std::vector<Panel> panels;

  if (sel.states) {
    for (int q = 0; q < n; ++q) {
      Panel panel;
      panel.title = n == 1 ? "agent states" : "agent states, component " + std::to_string(q);
      for (int i = 0; i < N; ++i) {
        Panel::Curve c;
        c.label = "x_" + std::to_string(i);
        for (const auto& x : traj.x) c.y.push_back(x(q, i));
        panel.curves.push_back(std::move(c));
      }
      if (!traj.s.empty()) {
        Panel::Curve c;
        c.label = "s";
        c.dashed = true;
        for (const auto& s : traj.s) c.y.push_back(s(q));
        panel.curves.push_back(std::move(c));
      }
      panels.push_back(std::move(panel));
    }
  }
  if (sel.params) {
    for (int q = 0; q < p; ++q) {
      Panel panel;
      panel.title = "parameters, component " + std::to_string(q);
      for (int i = 0; i < N; ++i) {
        Panel::Curve c;
        c.label = "theta_" + std::to_string(i);
        for (const auto& th : traj.theta) c.y.push_back(th(q, i));
        panel.curves.push_back(std::move(c));
      }
      panels.push_back(std::move(panel));
    }
  }
  if (sel.errors) {
    Panel panel;
    panel.title = "error norms";
    panel.log_scale = true;
    auto add = [&](const char* label, const std::vector<double>& y) {
      if (y.empty()) return;
      bool any = false;
      for (double v : y) any = any || std::isfinite(v);
      if (!any) return;
      Panel::Curve c;
      c.label = label;
      c.y = y;
      panel.curves.push_back(std::move(c));
    };
    add("|chi~|", traj.norm_chi_tilde);
    add("|vartheta~|", traj.norm_vartheta_tilde);
    add("|xi|", traj.norm_xi);
    add("sync_err", traj.sync_err);
    add("param_err", traj.param_err);
    panels.push_back(std::move(panel));
  }
  render_svg(panels, traj.times, path);
}

}  // namespace vfc
