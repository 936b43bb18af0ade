#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "chainlab/chain_matrix.hpp"
#include "chainlab/diagnostics.hpp"

namespace chainlab {

// %.17g, with "nan", "inf" and "-inf" for non-finite values.
std::string format_double(double value);

// One CSV line (no quoting: fields never contain commas) with trailing newline.
std::string csv_line(const std::vector<std::string>& fields);

void write_text_file(const std::filesystem::path& path, const std::string& contents);
std::string read_text_file(const std::filesystem::path& path);

// Header `chain,group,phase,iter,dim_0..dim_{d-1}`; iter counts from 0 over
// the whole chain, phase is `warmup` or `sampling`.
std::string draws_to_csv(const ChainMatrix& matrix);
void write_draws_csv(const ChainMatrix& matrix, const std::filesystem::path& path);
ChainMatrix read_draws_csv(const std::filesystem::path& path);

// 16-byte header (8-byte magic "CHAINLAB", little-endian u32 version, u32
// reserved) followed by little-endian f64 draws in chain, iteration,
// dimension order. Shape, groups and chain metadata live in a JSON sidecar
// at `<path>.json`.
inline constexpr char kBinaryMagic[8] = {'C', 'H', 'A', 'I', 'N', 'L', 'A', 'B'};
inline constexpr std::uint32_t kBinaryVersion = 1;

void write_draws_binary(const ChainMatrix& matrix, const std::filesystem::path& path);
ChainMatrix read_draws_binary(const std::filesystem::path& path);

// Columns: quantity, mean, sd, q05, q50, q95, bhat, what, rhat, split_rhat,
// nested_rhat, ess, mcse, flags. Flags are `;`-separated; nested_rhat is
// empty when the run was ungrouped.
std::string report_to_csv(const DiagnosticsReport& report);
std::string report_to_json(const DiagnosticsReport& report);

}  // namespace chainlab
