#include "spotvol/csv.hpp"

#include "spotvol/errors.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <vector>

namespace spotvol {

namespace {

std::string strip(const std::string& s)
{
  const auto b = s.find_first_not_of(" \t\r");
  const auto e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

double parse_number(const std::string& field, int line_no)
{
  try {
    std::size_t pos = 0;
    const double v = std::stod(field, &pos);
    if (pos != field.size())
      throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw DataError("CSV line " + std::to_string(line_no) + ": bad number '" +
                    field + "'");
  }
}

} // namespace

PricePath read_price_csv(std::istream& in)
{
  std::string line;
  int line_no = 0;
  // leading comment lines (e.g. "# metadata:") precede the header
  for (;;) {
    if (!std::getline(in, line))
      throw DataError("price CSV: no header row");
    ++line_no;
    const std::string s = strip(line);
    if (!s.empty() && s[0] != '#')
      break;
  }
  {
    std::istringstream hs(line);
    std::string h1, h2;
    std::getline(hs, h1, ',');
    std::getline(hs, h2, ',');
    if (strip(h1) != "time" || strip(h2) != "log_price")
      throw DataError("price CSV line " + std::to_string(line_no) +
                      ": header must start with 'time,log_price'");
  }
  std::vector<double> times, prices;
  std::vector<int> row_lines;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string s = strip(line);
    if (s.empty() || s[0] == '#')
      continue;
    std::istringstream ls(s);
    std::string f1, f2;
    if (!std::getline(ls, f1, ',') || !std::getline(ls, f2, ','))
      throw DataError("CSV line " + std::to_string(line_no) +
                      ": expected 'time,log_price'");
    times.push_back(parse_number(strip(f1), line_no));
    prices.push_back(parse_number(strip(f2), line_no));
    row_lines.push_back(line_no);
  }
  if (times.size() < 3)
    throw DataError("price CSV: need at least 3 observations");

  const int n = static_cast<int>(times.size()) - 1;
  const double t0 = times.front();
  const double T = times.back() - t0;
  if (!(T > 0.0))
    throw DataError("price CSV: times must be increasing");
  const double delta = T / n;
  for (int i = 0; i <= n; ++i) {
    const double expected = t0 + delta * i;
    if (std::abs(times[i] - expected) > 1e-9 * delta)
      throw DataError("CSV line " + std::to_string(row_lines[i]) +
                      ": time " + std::to_string(times[i]) +
                      " breaks the uniform grid (expected " +
                      std::to_string(expected) + ")");
  }
  return PricePath(T, std::move(prices));
}

PricePath read_price_csv_file(const std::string& filename)
{
  std::ifstream in(filename);
  if (!in)
    throw DataError("cannot open '" + filename + "'");
  return read_price_csv(in);
}

namespace {

void write_metadata(std::ostream& out,
                    const std::map<std::string, std::string>& metadata)
{
  for (const auto& [k, v] : metadata)
    out << "# metadata: " << k << "=" << v << "\n";
}

} // namespace

void write_spot_csv(std::ostream& out, const SpotVolSeries& series,
                    const ConfidenceBands* bands,
                    const std::map<std::string, std::string>& metadata)
{
  write_metadata(out, metadata);
  out.precision(17);
  out << "time,spot_var,bandwidth";
  if (bands)
    out << ",lo,hi";
  out << "\n";
  const int n = static_cast<int>(series.estimates.size()) - 1;
  for (int i = 0; i <= n; ++i) {
    out << series.horizon * i / n << "," << series.estimates[i] << ","
        << series.bandwidth;
    if (bands)
      out << "," << bands->lo[i] << "," << bands->hi[i];
    out << "\n";
  }
}

void write_simulated_csv(std::ostream& out, const SimulatedPath& sim,
                         const std::map<std::string, std::string>& metadata)
{
  write_metadata(out, metadata);
  out.precision(17);
  out << "time,log_price,true_var\n";
  const int n = sim.path.n();
  for (int i = 0; i <= n; ++i)
    out << sim.path.time(i) << "," << sim.path.log_prices[i] << ","
        << sim.true_var[i] << "\n";
}

} // namespace spotvol
