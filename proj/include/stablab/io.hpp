#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "stablab/fem.hpp"
#include "stablab/levelset.hpp"
#include "stablab/stability.hpp"

namespace stablab {

// FNV-1a over the raw bytes; the MANIFEST hash.
std::uint64_t fnv1a64(const std::string& data);

// Deterministic shortest-roundtrip decimal (%.17g).
std::string format_double(double v);

void write_text_file(const std::string& path, const std::string& content);

// One run owns one artifact directory. Every write is recorded with its
// content hash; write_manifest() ends the run with a MANIFEST whose first
// line carries the (excluded-from-determinism) timestamp and whose body
// lists `<fnv1a-64 hex>  <name>` per file, sorted by name.
class ArtifactWriter {
 public:
  explicit ArtifactWriter(std::string dir);
  const std::string& dir() const { return dir_; }
  void write(const std::string& name, const std::string& content);
  void write_manifest() const;

 private:
  std::string dir_;
  std::vector<std::pair<std::string, std::uint64_t>> entries_;
};

// Plot-ready text tables: whitespace-separated columns under a '#' header
// naming each column (units bracketed); rows ordered by node index.
std::string plot_field(const Field& field);
std::string plot_levelset(const Field& u, const LevelSetData& data,
                          const Eigen::VectorXd& residual);

// Two lines: sorted key names, then the values.
std::string plot_stability(const StabilityReport& report);

// Five named columns in declaration order, one data row.
std::string plot_poincare(const PoincareBreakdown& breakdown);

// RFC-4180-free simple CSV: header line, then preformatted cells.
std::string csv_table(const std::vector<std::string>& columns,
                      const std::vector<std::vector<std::string>>& rows);

}  // namespace stablab
