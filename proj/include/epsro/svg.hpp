#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "epsro/game_gen.hpp"
#include "epsro/ledger.hpp"

namespace epsro {

struct PlotSeries {
   std::string name;
   std::vector<std::pair<double, double>> points;
};

struct LinePlot {
   std::string title;
   std::string x_label;
   std::string y_label;
   std::vector<PlotSeries> series;
   /// log10 y axis; nonpositive values are clamped to the smallest positive one
   bool log_y = false;
};

namespace detail {

inline std::string xml_escape(const std::string& s)
{
   std::string out;
   for(const char c : s) {
      switch(c) {
         case '&': out += "&amp;"; break;
         case '<': out += "&lt;"; break;
         case '>': out += "&gt;"; break;
         case '"': out += "&quot;"; break;
         case '\'': out += "&apos;"; break;
         default: out += c;
      }
   }
   return out;
}

inline const char* palette(std::size_t i)
{
   static constexpr const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"};
   return colors[i % (sizeof(colors) / sizeof(colors[0]))];
}

inline std::string fmt(double x)
{
   std::ostringstream os;
   os.precision(4);
   os << x;
   return os.str();
}

struct Frame {
   double x0 = 70, y0 = 40, w = 560, h = 340;
   double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
   [[nodiscard]] double px(double x) const { return x0 + (x - xmin) / (xmax - xmin) * w; }
   [[nodiscard]] double py(double y) const { return y0 + h - (y - ymin) / (ymax - ymin) * h; }
};

}  // namespace detail

inline void write_line_plot(std::ostream& os, const LinePlot& plot)
{
   detail::Frame f;
   double xmin = std::numeric_limits<double>::infinity();
   double xmax = -xmin;
   double ymin = xmin;
   double ymax = -xmin;
   double min_positive = xmin;
   for(const auto& s : plot.series) {
      for(const auto& [x, y] : s.points) {
         xmin = std::min(xmin, x);
         xmax = std::max(xmax, x);
         if(y > 0.) {
            min_positive = std::min(min_positive, y);
         }
      }
   }
   const auto ty = [&](double y) {
      if(not plot.log_y) {
         return y;
      }
      const double floor = std::isfinite(min_positive) ? min_positive : 1e-12;
      return std::log10(std::max(y, floor));
   };
   for(const auto& s : plot.series) {
      for(const auto& p : s.points) {
         ymin = std::min(ymin, ty(p.second));
         ymax = std::max(ymax, ty(p.second));
      }
   }
   if(not std::isfinite(xmin)) {
      xmin = 0, xmax = 1, ymin = 0, ymax = 1;
   }
   if(xmax <= xmin) {
      xmax = xmin + 1.;
   }
   if(ymax <= ymin) {
      ymax = ymin + 1.;
   }
   f.xmin = xmin, f.xmax = xmax, f.ymin = ymin, f.ymax = ymax;

   os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
   os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" height=\"440\" viewBox=\"0 0 800 440\">\n";
   os << "<rect width=\"800\" height=\"440\" fill=\"white\"/>\n";
   os << "<text x=\"400\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">" << detail::xml_escape(plot.title) << "</text>\n";
   os << "<rect x=\"" << f.x0 << "\" y=\"" << f.y0 << "\" width=\"" << f.w << "\" height=\"" << f.h << "\" fill=\"none\" stroke=\"black\"/>\n";
   for(int t = 0; t <= 4; ++t) {
      const double xv = xmin + (xmax - xmin) * t / 4.;
      const double yv = ymin + (ymax - ymin) * t / 4.;
      os << "<text x=\"" << f.px(xv) << "\" y=\"" << f.y0 + f.h + 16 << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
         << detail::fmt(xv) << "</text>\n";
      os << "<text x=\"" << f.x0 - 6 << "\" y=\"" << f.py(yv) + 4 << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
         << detail::fmt(plot.log_y ? std::pow(10., yv) : yv) << "</text>\n";
   }
   os << "<text x=\"" << f.x0 + f.w / 2 << "\" y=\"" << f.y0 + f.h + 34 << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
      << detail::xml_escape(plot.x_label) << "</text>\n";
   os << "<text x=\"16\" y=\"" << f.y0 + f.h / 2 << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" transform=\"rotate(-90 16 "
      << f.y0 + f.h / 2 << ")\">" << detail::xml_escape(plot.y_label) << "</text>\n";
   for(std::size_t i = 0; i < plot.series.size(); ++i) {
      const auto& s = plot.series[i];
      if(s.points.size() > 1) {
         os << "<polyline fill=\"none\" stroke=\"" << detail::palette(i) << "\" stroke-width=\"2\" points=\"";
         for(const auto& [x, y] : s.points) {
            os << f.px(x) << ',' << f.py(ty(y)) << ' ';
         }
         os << "\"/>\n";
      }
      for(const auto& [x, y] : s.points) {
         os << "<circle cx=\"" << f.px(x) << "\" cy=\"" << f.py(ty(y)) << "\" r=\"2.5\" fill=\"" << detail::palette(i) << "\"/>\n";
      }
      const double ly = f.y0 + 14 + 18. * static_cast<double>(i);
      os << "<line x1=\"" << f.x0 + f.w + 14 << "\" y1=\"" << ly - 4 << "\" x2=\"" << f.x0 + f.w + 34 << "\" y2=\"" << ly - 4 << "\" stroke=\""
         << detail::palette(i) << "\" stroke-width=\"2\"/>\n";
      os << "<text x=\"" << f.x0 + f.w + 40 << "\" y=\"" << ly << "\" font-family=\"sans-serif\" font-size=\"12\">" << detail::xml_escape(s.name)
         << "</text>\n";
   }
   os << "</svg>\n";
}

enum class LedgerAxis { epoch, sim_episodes, meta_iters };

/// One series per algorithm: NashConv averaged over seeds at each x value.
inline LinePlot nashconv_plot(std::span<const RunLedger> ledgers, LedgerAxis axis)
{
   LinePlot plot;
   plot.y_label = "NashConv";
   plot.log_y = true;
   switch(axis) {
      case LedgerAxis::epoch:
         plot.title = "NashConv vs epoch";
         plot.x_label = "epoch";
         break;
      case LedgerAxis::sim_episodes:
         plot.title = "NashConv vs table simulation episodes";
         plot.x_label = "simulation episodes";
         break;
      case LedgerAxis::meta_iters:
         plot.title = "NashConv vs meta iterations";
         plot.x_label = "meta iterations";
         break;
   }
   std::vector<std::string> order;
   std::map<std::string, std::vector<const RunLedger*>> by_algo;
   for(const auto& l : ledgers) {
      if(by_algo.count(l.algo()) == 0) {
         order.push_back(l.algo());
      }
      by_algo[l.algo()].push_back(&l);
   }
   for(const auto& algo : order) {
      PlotSeries s{algo, {}};
      const auto& runs = by_algo[algo];
      std::size_t n_rows = std::numeric_limits<std::size_t>::max();
      for(const auto* r : runs) {
         n_rows = std::min(n_rows, r->rows().size());
      }
      for(std::size_t i = 0; i < n_rows; ++i) {
         double x = 0.;
         double y = 0.;
         for(const auto* r : runs) {
            const auto& row = r->rows()[i];
            switch(axis) {
               case LedgerAxis::epoch: x += row.epoch; break;
               case LedgerAxis::sim_episodes: x += static_cast<double>(row.sim_episodes); break;
               case LedgerAxis::meta_iters: x += static_cast<double>(row.meta_iters); break;
            }
            y += row.nashconv;
         }
         const auto n = static_cast<double>(runs.size());
         s.points.emplace_back(x / n, y / n);
      }
      plot.series.push_back(std::move(s));
   }
   return plot;
}

struct Trajectory {
   std::string name;
   std::vector<Point2D> points;
};

/// Scatter of population points in the mixture-game arena with the hump
/// centers marked by crosses.
inline void write_trajectory_svg(std::ostream& os, const MixtureGame& game, std::span<const Trajectory> trajectories, double coverage_radius = 0.3)
{
   const double size = 440.;
   const double margin = 20.;
   const double r = game.arena_radius();
   const double scale = (size - 2. * margin) / (2. * r);
   const auto px = [&](double x) { return size / 2. + x * scale; };
   const auto py = [&](double y) { return size / 2. - y * scale; };
   os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
   os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"" << size << "\" viewBox=\"0 0 640 " << size << "\">\n";
   os << "<rect width=\"640\" height=\"" << size << "\" fill=\"white\"/>\n";
   os << "<circle cx=\"" << px(0) << "\" cy=\"" << py(0) << "\" r=\"" << r * scale << "\" fill=\"none\" stroke=\"#888\"/>\n";
   for(const auto& c : game.centers()) {
      const double cx = px(c.x);
      const double cy = py(c.y);
      os << "<circle cx=\"" << cx << "\" cy=\"" << cy << "\" r=\"" << coverage_radius * scale << "\" fill=\"none\" stroke=\"#bbb\" stroke-dasharray=\"3,3\"/>\n";
      os << "<path d=\"M" << cx - 6 << ',' << cy - 6 << " L" << cx + 6 << ',' << cy + 6 << " M" << cx - 6 << ',' << cy + 6 << " L" << cx + 6 << ','
         << cy - 6 << "\" stroke=\"black\" stroke-width=\"2\"/>\n";
   }
   for(std::size_t i = 0; i < trajectories.size(); ++i) {
      const auto& t = trajectories[i];
      if(t.points.size() > 1) {
         os << "<polyline fill=\"none\" stroke=\"" << detail::palette(i) << "\" stroke-opacity=\"0.5\" points=\"";
         for(const auto& p : t.points) {
            os << px(p.x) << ',' << py(p.y) << ' ';
         }
         os << "\"/>\n";
      }
      for(const auto& p : t.points) {
         os << "<circle cx=\"" << px(p.x) << "\" cy=\"" << py(p.y) << "\" r=\"3\" fill=\"" << detail::palette(i) << "\"/>\n";
      }
      os << "<text x=\"" << size + 20 << "\" y=\"" << 30 + 18. * static_cast<double>(i) << "\" font-family=\"sans-serif\" font-size=\"12\" fill=\""
         << detail::palette(i) << "\">" << detail::xml_escape(t.name) << "</text>\n";
   }
   os << "</svg>\n";
}

}  // namespace epsro
