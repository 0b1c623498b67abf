#pragma once

#include <ostream>
#include <string>

#include "eiv/mc.hpp"

// Serialization for simulation studies: JSON configs in (field names mirror
// SimConfig), result tables out.

namespace eiv::mc {

// Parses a JSON study configuration. "xi" accepts either a number (every
// coordinate of xi equals it) or an array of length n-1. "pairs" is an array
// of two-element name arrays. Unknown keys are rejected so typos fail loudly.
SimConfig parse_sim_config(const std::string& json_text);
SimConfig load_sim_config(const std::string& path);

enum class OutputFormat { csv, tsv, pretty };
OutputFormat parse_output_format(const std::string& name);

// Emits one result table: comment header echoing the configuration and
// lambda, then estimator,bias,se_bias,mse,se_mse,failures rows, then paired
// comparisons as trailing comment lines. Standard errors that are undefined
// (fewer than two usable replications) print as "na". Values are printed
// with %.6g unless full_precision selects %.17g.
void write_result(std::ostream& os, const SimResult& result, OutputFormat fmt,
                  bool full_precision = false);

}  // namespace eiv::mc
