#pragma once

#include <optional>
#include <string>
#include <vector>

namespace cwlab {

struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

struct PlotMarker {
  std::string label;
  double x = 0.0;
};

struct LinePlot {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<PlotSeries> series;
  std::vector<PlotMarker> vertical_lines;
  std::optional<double> y_min;  // defaults to the data range
  std::optional<double> y_max;
  bool diagonal = false;        // dashed y = x reference (ROC plots)
};

/// Standalone SVG document with axes, polylines, legend and labelled
/// vertical markers. Output depends only on the plot contents.
std::string render_svg(const LinePlot& plot);

std::string xml_escape(const std::string& text);

}  // namespace cwlab
