#include "hj/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace hj {

namespace {

double round_sig(double v) {
    if (v == 0.0 || !std::isfinite(v)) return v;
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return std::stod(buf);
}

const char* status_name(EvolveStatus s) {
    switch (s) {
        case EvolveStatus::converged: return "converged";
        case EvolveStatus::diverged_down: return "diverged-down";
        case EvolveStatus::time_capped: return "time-capped";
    }
    return "?";
}

}  // namespace

void canonicalize_numbers(nlohmann::json& j) {
    if (j.is_number_float()) {
        j = round_sig(j.get<double>());
    } else if (j.is_object() || j.is_array()) {
        for (auto& item : j) canonicalize_numbers(item);
    }
}

void write_report(const std::string& path, nlohmann::json j) {
    canonicalize_numbers(j);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_report: cannot open " + path);
    out << j.dump(2) << "\n";
}

nlohmann::json to_json(const EvolveReport& rep) {
    nlohmann::json j;
    j["status"] = status_name(rep.status);
    j["t_elapsed"] = rep.t_elapsed;
    j["steps"] = rep.steps;
    j["boundary_hit"] = rep.boundary_hit;
    auto hist = [](const std::vector<std::pair<double, double>>& h) {
        nlohmann::json a = nlohmann::json::array();
        for (const auto& [t, v] : h) a.push_back({t, v});
        return a;
    };
    j["min_history"] = hist(rep.min_history);
    j["max_history"] = hist(rep.max_history);
    return j;
}

nlohmann::json to_json(const C0Estimate& est) {
    nlohmann::json j;
    j["c0_lo"] = est.lo;
    j["c0_hi"] = est.hi;
    j["iterations"] = est.iterations;
    j["monotone"] = est.monotone;
    nlohmann::json probes = nlohmann::json::array();
    for (const auto& p : est.probes) {
        probes.push_back({{"c", p.c},
                          {"class", p.cls == Solvability::solvable     ? "solvable"
                                    : p.cls == Solvability::unsolvable ? "unsolvable"
                                                                       : "ambiguous"},
                          {"status", status_name(p.status)},
                          {"t_elapsed", p.t_elapsed}});
    }
    j["probes"] = probes;
    return j;
}

nlohmann::json to_json(const FixedPointReport& rep) {
    nlohmann::json j;
    j["x"] = rep.state.x;
    j["u"] = rep.state.u;
    j["p"] = rep.state.p;
    j["eigen_re1"] = rep.eig1.real();
    j["eigen_im1"] = rep.eig1.imag();
    j["eigen_re2"] = rep.eig2.real();
    j["eigen_im2"] = rep.eig2.imag();
    j["class"] = to_string(rep.cls);
    return j;
}

void write_trajectory_csv(const std::string& path, const Trajectory& traj) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_trajectory_csv: cannot open " + path);
    out << "t,x,u,p,H\n";
    char buf[160];
    for (const auto& pt : traj.points) {
        std::snprintf(buf, sizeof(buf), "%.15g,%.15g,%.15g,%.15g,%.15g\n", pt.t, pt.state.x,
                      pt.state.u, pt.state.p, pt.H);
        out << buf;
    }
}

void write_svg(const std::string& path, const GridFunction& f, const std::string& title) {
    const int W = 720, H = 480, ml = 60, mr = 20, mt = 40, mb = 50;
    double ymin = f.min(), ymax = f.max();
    if (ymax - ymin < 1e-12) {
        ymin -= 0.5;
        ymax += 0.5;
    }
    double xmax = f.grid.period;
    auto sx = [&](double x) { return ml + x / xmax * (W - ml - mr); };
    auto sy = [&](double y) { return H - mb - (y - ymin) / (ymax - ymin) * (H - mt - mb); };

    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_svg: cannot open " + path);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
        << "\">\n";
    out << "<rect width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
    out << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" << title
        << "</text>\n";
    // axes
    out << "<line x1=\"" << ml << "\" y1=\"" << H - mb << "\" x2=\"" << W - mr << "\" y2=\""
        << H - mb << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << H - mb
        << "\" stroke=\"black\"/>\n";
    char buf[128];
    std::snprintf(buf, sizeof(buf),
                  "<text x=\"%d\" y=\"%d\" text-anchor=\"middle\" font-size=\"13\">x</text>\n",
                  (ml + W - mr) / 2, H - 12);
    out << buf;
    std::snprintf(buf, sizeof(buf),
                  "<text x=\"16\" y=\"%d\" text-anchor=\"middle\" font-size=\"13\" "
                  "transform=\"rotate(-90 16 %d)\">u(x)</text>\n",
                  (mt + H - mb) / 2, (mt + H - mb) / 2);
    out << buf;
    for (double v : {ymin, ymax}) {
        std::snprintf(buf, sizeof(buf),
                      "<text x=\"%d\" y=\"%.1f\" text-anchor=\"end\" font-size=\"11\">%.4g</text>\n",
                      ml - 6, sy(v) + 4, v);
        out << buf;
    }
    for (double v : {0.0, xmax}) {
        std::snprintf(buf, sizeof(buf),
                      "<text x=\"%.1f\" y=\"%d\" text-anchor=\"middle\" font-size=\"11\">"
                      "%.4g</text>\n",
                      sx(v), H - mb + 18, v);
        out << buf;
    }
    out << "<polyline fill=\"none\" stroke=\"#1f5fbf\" stroke-width=\"1.5\" points=\"";
    for (int i = 0; i < f.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.2f,%.2f ", sx(f.grid.node(i)), sy(f[i]));
        out << buf;
    }
    // close the periodic curve at x = period
    std::snprintf(buf, sizeof(buf), "%.2f,%.2f", sx(xmax), sy(f[0]));
    out << buf << "\"/>\n</svg>\n";
}

}  // namespace hj
