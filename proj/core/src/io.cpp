#include "chainlab/io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "chainlab/errors.hpp"

namespace chainlab {

using nlohmann::json;

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

std::string csv_line(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out += ',';
    out += fields[i];
  }
  out += '\n';
  return out;
}

void write_text_file(const std::filesystem::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw RuntimeFailure("cannot open '" + path.string() + "' for writing");
  out << contents;
  if (!out) throw RuntimeFailure("failed writing '" + path.string() + "'");
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw RuntimeFailure("cannot open '" + path.string() + "' for reading");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

namespace {

double parse_double(std::string_view field, std::size_t line) {
  if (field == "nan") return std::nan("");
  if (field == "inf") return HUGE_VAL;
  if (field == "-inf") return -HUGE_VAL;
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    throw RuntimeFailure("draws file line " + std::to_string(line) + ": bad number '" +
                         std::string(field) + "'");
  }
  return v;
}

std::size_t parse_index(std::string_view field, std::size_t line) {
  std::size_t v = 0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    throw RuntimeFailure("draws file line " + std::to_string(line) + ": bad index '" +
                         std::string(field) + "'");
  }
  return v;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

json metadata_json(const ChainMatrix& m) {
  json chains = json::array();
  for (const auto& meta : m.metadata()) {
    chains.push_back({{"seed", meta.seed},
                      {"divergences", meta.divergences},
                      {"acceptance_rate", meta.acceptance_rate},
                      {"gradient_evaluations", meta.gradient_evaluations}});
  }
  return {{"chains", m.chains()},
          {"warmup", m.warmup_iterations()},
          {"sampling", m.sampling_iterations()},
          {"dimension", m.dimension()},
          {"group_of_chain", m.group_of_chain()},
          {"chain_metadata", chains}};
}

}  // namespace

std::string draws_to_csv(const ChainMatrix& matrix) {
  std::string out = "chain,group,phase,iter";
  for (std::size_t i = 0; i < matrix.dimension(); ++i) out += ",dim_" + std::to_string(i);
  out += '\n';
  for (std::size_t m = 0; m < matrix.chains(); ++m) {
    const std::string prefix = std::to_string(m) + ',' + std::to_string(matrix.group_of_chain()[m]);
    for (std::size_t n = 0; n < matrix.iterations(); ++n) {
      out += prefix;
      out += matrix.phase(n) == Phase::warmup ? ",warmup," : ",sampling,";
      out += std::to_string(n);
      for (double v : matrix.draw(m, n)) {
        out += ',';
        out += format_double(v);
      }
      out += '\n';
    }
  }
  return out;
}

void write_draws_csv(const ChainMatrix& matrix, const std::filesystem::path& path) {
  write_text_file(path, draws_to_csv(matrix));
}

ChainMatrix read_draws_csv(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw RuntimeFailure("draws file '" + path.string() + "' is empty");
  const auto header = split(line, ',');
  if (header.size() < 5 || header[0] != "chain" || header[1] != "group" || header[2] != "phase" ||
      header[3] != "iter") {
    throw RuntimeFailure("draws file '" + path.string() + "' has an unexpected header");
  }
  const std::size_t d = header.size() - 4;
  struct ChainRows {
    std::size_t group = 0;
    std::size_t warmup = 0;
    std::vector<double> values;
  };
  std::map<std::size_t, ChainRows> chains;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != d + 4) {
      throw RuntimeFailure("draws file line " + std::to_string(line_no) + ": expected " +
                           std::to_string(d + 4) + " fields");
    }
    auto& c = chains[parse_index(f[0], line_no)];
    c.group = parse_index(f[1], line_no);
    if (f[2] == "warmup") {
      ++c.warmup;
    } else if (f[2] != "sampling") {
      throw RuntimeFailure("draws file line " + std::to_string(line_no) + ": bad phase");
    }
    for (std::size_t i = 0; i < d; ++i) c.values.push_back(parse_double(f[4 + i], line_no));
  }
  if (chains.empty()) throw RuntimeFailure("draws file '" + path.string() + "' has no draws");
  const std::size_t total = chains.begin()->second.values.size() / d;
  const std::size_t warmup = chains.begin()->second.warmup;
  std::vector<std::size_t> groups;
  std::size_t expected = 0;
  for (const auto& [index, c] : chains) {
    if (index != expected++) throw RuntimeFailure("draws file: chain indices are not contiguous");
    if (c.values.size() / d != total || c.warmup != warmup) {
      throw RuntimeFailure("draws file: chains have unequal lengths");
    }
    groups.push_back(c.group);
  }
  ChainMatrix out(chains.size(), warmup, total - warmup, d, groups);
  for (const auto& [index, c] : chains) {
    std::copy(c.values.begin(), c.values.end(), out.draw(index, 0).data());
  }
  return out;
}

void write_draws_binary(const ChainMatrix& matrix, const std::filesystem::path& path) {
  std::string bytes(16 + matrix.raw().size() * 8, '\0');
  std::memcpy(bytes.data(), kBinaryMagic, 8);
  auto put_u32 = [&](std::size_t offset, std::uint32_t v) {
    for (int b = 0; b < 4; ++b) bytes[offset + b] = static_cast<char>((v >> (8 * b)) & 0xff);
  };
  put_u32(8, kBinaryVersion);
  put_u32(12, 0);
  std::size_t offset = 16;
  for (double v : matrix.raw()) {
    const auto u = std::bit_cast<std::uint64_t>(v);
    for (int b = 0; b < 8; ++b) bytes[offset++] = static_cast<char>((u >> (8 * b)) & 0xff);
  }
  write_text_file(path, bytes);
  write_text_file(path.string() + ".json", metadata_json(matrix).dump(2) + "\n");
}

ChainMatrix read_draws_binary(const std::filesystem::path& path) {
  const std::string bytes = read_text_file(path);
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kBinaryMagic, 8) != 0) {
    throw RuntimeFailure("'" + path.string() + "' is not a chainlab binary draws file");
  }
  auto get_u32 = [&](std::size_t offset) {
    std::uint32_t v = 0;
    for (int b = 0; b < 4; ++b) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[offset + b])) << (8 * b);
    return v;
  };
  if (get_u32(8) != kBinaryVersion) throw RuntimeFailure("unsupported binary draws version");
  ChainMatrix out;
  json chains;
  try {
    const json meta = json::parse(read_text_file(path.string() + ".json"));
    out = ChainMatrix(meta.at("chains").get<std::size_t>(), meta.at("warmup").get<std::size_t>(),
                      meta.at("sampling").get<std::size_t>(),
                      meta.at("dimension").get<std::size_t>(),
                      meta.at("group_of_chain").get<std::vector<std::size_t>>());
    chains = meta.at("chain_metadata");
  } catch (const json::exception& e) {
    throw RuntimeFailure("bad sidecar for '" + path.string() + "': " + e.what());
  }
  const std::size_t count = out.raw().size();
  if (bytes.size() != 16 + count * 8) throw RuntimeFailure("binary draws size does not match sidecar");
  std::size_t offset = 16;
  for (std::size_t m = 0; m < out.chains(); ++m) {
    for (std::size_t n = 0; n < out.iterations(); ++n) {
      for (double& v : out.draw(m, n)) {
        std::uint64_t u = 0;
        for (int b = 0; b < 8; ++b) {
          u |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[offset++])) << (8 * b);
        }
        v = std::bit_cast<double>(u);
      }
    }
  }
  try {
    for (std::size_t m = 0; m < out.chains() && m < chains.size(); ++m) {
      auto& md = out.metadata()[m];
      md.seed = chains[m].at("seed").get<std::uint64_t>();
      md.divergences = chains[m].at("divergences").get<std::uint64_t>();
      md.acceptance_rate = chains[m].at("acceptance_rate").get<double>();
      md.gradient_evaluations = chains[m].at("gradient_evaluations").get<std::uint64_t>();
    }
  } catch (const json::exception& e) {
    throw RuntimeFailure("bad chain metadata for '" + path.string() + "': " + e.what());
  }
  return out;
}

std::string report_to_csv(const DiagnosticsReport& report) {
  std::string out = csv_line({"quantity", "mean", "sd", "q05", "q50", "q95", "bhat", "what", "rhat",
                              "split_rhat", "nested_rhat", "ess", "mcse", "flags"});
  for (const auto& q : report.quantities) {
    std::string flags;
    for (std::size_t i = 0; i < q.flags.size(); ++i) flags += (i ? ";" : "") + q.flags[i];
    out += csv_line({q.name, format_double(q.mean), format_double(q.sd), format_double(q.q05),
                     format_double(q.q50), format_double(q.q95), format_double(q.bhat),
                     format_double(q.what), format_double(q.rhat), format_double(q.split_rhat),
                     q.nested_rhat ? format_double(*q.nested_rhat) : std::string(),
                     format_double(q.ess), format_double(q.mcse), flags});
  }
  return out;
}

std::string report_to_json(const DiagnosticsReport& report) {
  // Non-finite values become null.
  auto num = [](double v) -> json { return std::isfinite(v) ? json(v) : json(nullptr); };
  json quantities = json::array();
  for (const auto& q : report.quantities) {
    json means = json::array();
    for (double v : q.per_chain_means) means.push_back(num(v));
    quantities.push_back({{"quantity", q.name},
                          {"mean", num(q.mean)},
                          {"per_chain_means", means},
                          {"sd", num(q.sd)},
                          {"q05", num(q.q05)},
                          {"q50", num(q.q50)},
                          {"q95", num(q.q95)},
                          {"bhat", num(q.bhat)},
                          {"what", num(q.what)},
                          {"rhat", num(q.rhat)},
                          {"split_rhat", num(q.split_rhat)},
                          {"nested_rhat", q.nested_rhat ? num(*q.nested_rhat) : json(nullptr)},
                          {"ess", num(q.ess)},
                          {"mcse", num(q.mcse)},
                          {"flags", q.flags}});
  }
  json doc = {{"chains", report.chains},
              {"iterations", report.iterations},
              {"groups", report.groups},
              {"rhat_threshold", report.rhat_threshold},
              {"quantities", quantities}};
  return doc.dump(2) + "\n";
}

}  // namespace chainlab
