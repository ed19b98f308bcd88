#include "adaptprobe/reporting.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "adaptprobe/error.hpp"

namespace adaptprobe {

namespace {

constexpr double kSize = 560.0;
constexpr double kCenter = kSize / 2.0;
constexpr double kRadius = 190.0;

const std::array<const char*, 8> kPalette = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                              "#ff7f0e", "#17becf", "#8c564b", "#e377c2"};

std::string xml_escape(std::string_view s) {
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

std::string comment_safe(std::string s) {
  for (auto pos = s.find("--"); pos != std::string::npos; pos = s.find("--", pos)) s.replace(pos, 2, "- -");
  return s;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string csv_header(const json& meta) {
  std::string out;
  for (const auto& [k, v] : meta.items()) out += "# " + k + "=" + (v.is_string() ? v.get<std::string>() : v.dump()) + "\n";
  return out;
}

std::string fmt(double v) { return format_fixed(v, 3); }
std::string px(double v) { return format_fixed(v, 2); }

std::pair<double, double> polar(double r, std::size_t axis, std::size_t n) {
  const double angle = -std::numbers::pi / 2 + 2 * std::numbers::pi * static_cast<double>(axis) / static_cast<double>(n);
  return {kCenter + r * std::cos(angle), kCenter + r * std::sin(angle)};
}

std::string polygon_points(const std::vector<double>& radii, std::size_t n) {
  std::string out;
  for (std::size_t i = 0; i < n; ++i) {
    auto [x, y] = polar(radii[i], i, n);
    if (i) out += ' ';
    out += px(x) + "," + px(y);
  }
  return out;
}

}  // namespace

void RadarSpec::validate() const {
  if (axes.size() < 3) fail(ErrorCode::PreconditionViolation, "radar chart needs at least 3 axes");
  for (const auto& [name, values] : series) {
    if (values.size() != axes.size())
      fail(ErrorCode::LengthMismatch, "series '" + name + "' has " + std::to_string(values.size()) + " values");
    for (double v : values)
      if (!std::isfinite(v) || v < 0) fail(ErrorCode::ValueOutOfRange, "series '" + name + "' has a negative value");
  }
  if (!(baseline > 0)) fail(ErrorCode::ValueOutOfRange, "baseline ring must be positive");
}

std::optional<RadarSpec> radar_from_reports(const std::vector<std::pair<std::string, DistanceReport>>& runs) {
  if (runs.empty()) return std::nullopt;
  const auto& first = runs.front().second;
  if (first.pairs.size() < 3) return std::nullopt;
  RadarSpec spec;
  spec.title = first.attribute + " / " + std::string(to_string(first.scenario));
  for (const auto& p : first.pairs) spec.axes.push_back(p.group_a + " vs " + p.group_b);
  for (const auto& [name, report] : runs) {
    if (report.baseline <= 0) continue;
    std::vector<double> values;
    for (const auto& p : first.pairs) values.push_back(divergence_ratio(report.distance(p.group_a, p.group_b), report.baseline));
    spec.series.emplace_back(name, std::move(values));
  }
  if (spec.series.empty()) return std::nullopt;
  return spec;
}

std::string render_radar_svg(const RadarSpec& spec, const json& meta) {
  spec.validate();
  const std::size_t n = spec.axes.size();
  double top = spec.baseline;
  for (const auto& [_, values] : spec.series)
    for (double v : values) top = std::max(top, v);
  const double scale_max = std::max(1.25 * spec.baseline, std::ceil(top * 4.0) / 4.0);
  const double unit = kRadius / scale_max;

  std::ostringstream os;
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  os << "<!-- " << comment_safe(meta.dump()) << " -->\n";
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kSize << "\" height=\"" << kSize
     << "\" viewBox=\"0 0 " << kSize << " " << kSize << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  os << "  <rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";
  os << "  <text x=\"" << px(kCenter) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << xml_escape(spec.title)
     << "</text>\n";

  os << "  <g class=\"grid\" fill=\"none\" stroke=\"#cccccc\" stroke-width=\"0.8\">\n";
  for (double r = 0.25; r <= scale_max + 1e-9; r += 0.25)
    os << "    <polygon points=\"" << polygon_points(std::vector<double>(n, r * unit), n) << "\"/>\n";
  for (std::size_t i = 0; i < n; ++i) {
    auto [x, y] = polar(kRadius, i, n);
    os << "    <line x1=\"" << px(kCenter) << "\" y1=\"" << px(kCenter) << "\" x2=\"" << px(x) << "\" y2=\"" << px(y)
       << "\"/>\n";
  }
  os << "  </g>\n";

  os << "  <polygon class=\"baseline\" points=\"" << polygon_points(std::vector<double>(n, spec.baseline * unit), n)
     << "\" fill=\"none\" stroke=\"#000000\" stroke-width=\"1.5\" stroke-dasharray=\"5,4\"/>\n";

  for (std::size_t s = 0; s < spec.series.size(); ++s) {
    const auto& [name, values] = spec.series[s];
    std::vector<double> radii;
    for (double v : values) radii.push_back(v * unit);
    const char* color = kPalette[s % kPalette.size()];
    os << "  <polygon class=\"series\" data-run=\"" << xml_escape(name) << "\" points=\"" << polygon_points(radii, n)
       << "\" fill=\"" << color << "\" fill-opacity=\"0.15\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
  }

  for (std::size_t i = 0; i < n; ++i) {
    auto [x, y] = polar(kRadius + 18, i, n);
    const char* anchor = std::abs(x - kCenter) < 1 ? "middle" : (x > kCenter ? "start" : "end");
    os << "  <text class=\"axis\" x=\"" << px(x) << "\" y=\"" << px(y + 4) << "\" text-anchor=\"" << anchor << "\">"
       << xml_escape(spec.axes[i]) << "</text>\n";
  }

  double ly = kSize - 14.0 * static_cast<double>(spec.series.size() + 1) - 6;
  os << "  <text x=\"12\" y=\"" << px(ly) << "\">baseline = " << fmt(spec.baseline) << "</text>\n";
  for (std::size_t s = 0; s < spec.series.size(); ++s) {
    ly += 14;
    os << "  <rect x=\"12\" y=\"" << px(ly - 9) << "\" width=\"10\" height=\"10\" fill=\""
       << kPalette[s % kPalette.size()] << "\"/>\n";
    os << "  <text x=\"28\" y=\"" << px(ly) << "\">" << xml_escape(spec.series[s].first) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

std::string confidence_csv(const std::vector<ConfidenceRow>& rows, const json& meta) {
  std::string out = csv_header(meta) + "run,scenario,mean_confidence\n";
  for (const auto& r : rows) out += csv_field(r.run) + "," + r.scenario + "," + fmt(r.mean_confidence) + "\n";
  return out;
}

std::string consistency_csv(const std::vector<ConsistencyRow>& rows, const json& meta) {
  std::string out = csv_header(meta) + "run,measured_distance,baseline,ratio\n";
  for (const auto& r : rows)
    out += csv_field(r.run) + "," + fmt(r.report.mean_emd) + "," + fmt(r.report.baseline_emd) + "," +
           (r.report.ratio ? fmt(*r.report.ratio) : std::string("undefined")) + "\n";
  return out;
}

std::string judge_scores_csv(const std::vector<JudgeRow>& rows, const json& meta) {
  std::string out = csv_header(meta) + "dimension,llm_judge,human\n";
  for (const auto& r : rows)
    out += csv_field(r.dimension) + "," + format_fixed(r.judge, 2) + "," + (r.human ? format_fixed(*r.human, 2) : "") + "\n";
  return out;
}

std::string alignment_csv(const std::vector<AlignmentCsvRow>& rows, const json& meta) {
  std::string out = csv_header(meta) + "dimension,items,icc3k,pearson\n";
  for (const auto& r : rows)
    out += csv_field(r.dimension) + "," + std::to_string(r.items) + "," + format_fixed(r.icc3k, 2) + "," +
           format_fixed(r.pearson, 2) + "\n";
  return out;
}

std::string distance_csv(const std::vector<std::pair<std::string, DistanceReport>>& runs, const json& meta) {
  std::string out = csv_header(meta) + "run,attribute,scenario,group_a,group_b,distance,baseline,ratio\n";
  for (const auto& [name, r] : runs)
    for (const auto& p : r.pairs)
      out += csv_field(name) + "," + r.attribute + "," + std::string(to_string(r.scenario)) + "," + csv_field(p.group_a) +
             "," + csv_field(p.group_b) + "," + fmt(p.distance) + "," + fmt(r.baseline) + "," +
             (p.ratio ? fmt(*p.ratio) : std::string("undefined")) + "\n";
  return out;
}

}  // namespace adaptprobe
