#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "lagflow/error.hpp"
#include "lagflow/transport.hpp"

namespace lagflow {

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_number(const std::string& s, std::size_t line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw IoError("measure csv line " + std::to_string(line) + ": bad number '" + s + "'");
  }
}

}  // namespace

void write_measure_csv(std::ostream& os, const DiscreteMeasure& measure) {
  const int d = measure.empty() ? 0 : measure.dim();
  os << "weight";
  for (int k = 1; k <= d; ++k) os << ",x_" << k;
  os << '\n';
  const auto old = os.precision(17);
  for (std::size_t i = 0; i < measure.size(); ++i) {
    os << measure.weight(i);
    for (int k = 0; k < d; ++k) os << ',' << measure.point(i)[k];
    os << '\n';
  }
  os.precision(old);
  if (!os) throw IoError("write_measure_csv: stream error");
}

DiscreteMeasure read_measure_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw IoError("measure csv: missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const std::vector<std::string> header = split_csv(line);
  if (header.empty() || header[0] != "weight") throw IoError("measure csv: header must start with 'weight'");
  const int d = static_cast<int>(header.size()) - 1;
  if (d > kMaxDim) throw IoError("measure csv: too many coordinate columns");
  for (int k = 1; k <= d; ++k)
    if (header[k] != "x_" + std::to_string(k)) throw IoError("measure csv: unexpected column '" + header[k] + "'");
  DiscreteMeasure m;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (d == 0) throw IoError("measure csv: no coordinate columns");
    const std::vector<std::string> cells = split_csv(line);
    if (static_cast<int>(cells.size()) != d + 1)
      throw IoError("measure csv line " + std::to_string(lineno) + ": expected " +
                    std::to_string(d + 1) + " columns");
    Vec x(d);
    for (int k = 0; k < d; ++k) x[k] = parse_number(cells[k + 1], lineno);
    try {
      m.add(wrap(x), parse_number(cells[0], lineno));
    } catch (const InvalidInput& e) {
      throw IoError("measure csv line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return m;
}

void write_plan_csv(std::ostream& os, const ExactTransport& result, const DiscreteMeasure& mu,
                    const DiscreteMeasure& nu, const GroundMetric& metric) {
  os << "i,j,mass,ground_cost\n";
  const auto old = os.precision(17);
  for (const PlanEntry& e : result.plan)
    os << e.i << ',' << e.j << ',' << e.mass << ',' << metric(mu.point(e.i), nu.point(e.j)) << '\n';
  os.precision(old);
  if (!os) throw IoError("write_plan_csv: stream error");
}

}  // namespace lagflow
