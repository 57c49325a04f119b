#pragma once

#include <iosfwd>
#include <string>
#include <variant>

#include "modalreg/modal_lpr.hpp"
#include "modalreg/varying_coeff.hpp"

namespace modalreg::cli {

// CSV with a header row. Scalar files have columns `x,y`; varying-coefficient
// files have `u,x1,...,xk,y` and get an intercept column prepended.
Dataset parse_scalar_dataset(std::istream& in, const std::string& source = "<stream>");
VCDataset parse_vc_dataset(std::istream& in, const std::string& source = "<stream>");

// Picks the layout from the first header cell (`x` or `u`).
std::variant<Dataset, VCDataset> parse_dataset(const std::string& path);
Dataset parse_scalar_dataset_file(const std::string& path);
VCDataset parse_vc_dataset_file(const std::string& path);

void write_dataset(std::ostream& out, const Dataset& data);
// Writes u, x1..x(p-1), y; the intercept column is not stored.
void write_dataset(std::ostream& out, const VCDataset& data);

}  // namespace modalreg::cli
