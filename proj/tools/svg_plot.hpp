#ifndef ESMPPT_TOOLS_SVG_PLOT_HPP
#define ESMPPT_TOOLS_SVG_PLOT_HPP

#include <string>
#include <vector>

namespace svgplot {

// Minimal SVG 1.1 line plotter: axes, ticks, legend, polylines. Diagnostic
// quality only; long series are decimated before rendering.
class LinePlot {
 public:
  LinePlot(std::string title, std::string x_label, std::string y_label);

  void add_series(const std::string& label, const std::vector<double>& x,
                  const std::vector<double>& y);

  std::string render() const;

 private:
  struct Series {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
  };

  std::string title_;
  std::string x_label_;
  std::string y_label_;
  std::vector<Series> series_;
};

}  // namespace svgplot

#endif
