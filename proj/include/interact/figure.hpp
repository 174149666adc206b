#pragma once

#include <array>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "interact/glm.hpp"
#include "interact/table.hpp"
#include "interact/variance.hpp"

namespace interact {

enum class FigureKind { additivity, log_risk, log_odds };
enum class YScale { risk_per_100k, log_probability, log_odds };

std::string_view to_string(FigureKind k);
std::string_view to_string(YScale s);
/// Throws std::invalid_argument for unknown figure names.
FigureKind parse_figure(std::string_view s);

struct FigurePoint {
    int x = 0;
    double estimate = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
};

struct FigureSeries {
    int z = 0;
    std::string label;
    std::vector<FigurePoint> points;
};

struct Figure {
    FigureKind kind = FigureKind::additivity;
    YScale y_scale = YScale::risk_per_100k;
    std::array<FigureSeries, 2> series;
    std::string title;
    std::string x_label;
    std::string y_label;
};

/// Per-Z series over X in {0,1}. The additivity figure uses the identity fit
/// on the display scale; the log figures show link-scale predictions of the
/// log and logit fits. Throws FitFailedError when the needed fit fails.
Figure make_figure(const ExposureTable& table, FigureKind kind, double scale = 100000.0, double level = 0.95,
                   CovarianceFlavor flavor = CovarianceFlavor::model_based);

/// (estimate at x=1 minus x=0) in the Z=1 series minus the same in Z=0.
double slope_difference(const Figure& figure);

void write_figure_csv(std::ostream& out, const Figure& figure);
void write_figure_svg(std::ostream& out, const Figure& figure);

}  // namespace interact
