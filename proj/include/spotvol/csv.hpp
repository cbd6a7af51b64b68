#pragma once

#include "spotvol/asymptotics.hpp"
#include "spotvol/estimator.hpp"
#include "spotvol/simulate.hpp"

#include <iosfwd>
#include <map>
#include <optional>
#include <string>

namespace spotvol {

//! Reads "time,log_price" rows (header required). Times must be uniformly
//! spaced within 1e-9 * Delta relative tolerance; violations raise DataError
//! naming the offending line.
PricePath read_price_csv(std::istream& in);
PricePath read_price_csv_file(const std::string& filename);

//! Emits "time,spot_var,bandwidth" rows, optionally with lo/hi band columns,
//! preceded by "# metadata: key=value" comment lines.
void write_spot_csv(std::ostream& out, const SpotVolSeries& series,
                    const ConfidenceBands* bands = nullptr,
                    const std::map<std::string, std::string>& metadata = {});

//! Emits "time,log_price,true_var" for a simulated path.
void write_simulated_csv(std::ostream& out, const SimulatedPath& sim,
                         const std::map<std::string, std::string>& metadata = {});

} // namespace spotvol
