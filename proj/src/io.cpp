#include "stablab/io.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "stablab/mesh.hpp"

namespace stablab {

std::uint64_t fnv1a64(const std::string& data) {
  std::uint64_t hash = 14695981039346656037ull;
  for (unsigned char c : data) {
    hash ^= c;
    hash *= 1099511628211ull;
  }
  return hash;
}

std::string format_double(double v) {
  // shortest representation that round-trips
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << content;
  if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

ArtifactWriter::ArtifactWriter(std::string dir) : dir_(std::move(dir)) {
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec) {
    throw std::runtime_error("cannot create output directory '" + dir_ +
                             "': " + ec.message());
  }
}

void ArtifactWriter::write(const std::string& name,
                           const std::string& content) {
  write_text_file(dir_ + "/" + name, content);
  entries_.emplace_back(name, fnv1a64(content));
}

void ArtifactWriter::write_manifest() const {
  auto sorted = entries_;
  std::sort(sorted.begin(), sorted.end());

  const std::time_t now = std::time(nullptr);
  char stamp[32];
  std::tm tm_utc;
  gmtime_r(&now, &tm_utc);
  std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);

  std::ostringstream out;
  out << "# MANIFEST written " << stamp << "\n";
  for (const auto& [name, hash] : sorted) {
    char hex[17];
    std::snprintf(hex, sizeof(hex), "%016llx",
                  static_cast<unsigned long long>(hash));
    out << hex << "  " << name << "\n";
  }
  write_text_file(dir_ + "/MANIFEST", out.str());
}

std::string plot_field(const Field& field) {
  std::ostringstream out;
  out << "# node[index] x[L] y[L] value[u]\n";
  for (int i = 0; i < field.mesh->node_count(); ++i) {
    const Eigen::Vector2d& p = field.mesh->nodes[i];
    out << i << " " << format_double(p.x()) << " " << format_double(p.y())
        << " " << format_double(field.values[i]) << "\n";
  }
  return out.str();
}

std::string plot_levelset(const Field& u, const LevelSetData& data,
                          const Eigen::VectorXd& residual) {
  std::ostringstream out;
  out << "# node[index] grad_norm[u/L] k1[1/L] tgrad[u/L^2] residual[u^2/L^4]"
      << "\n";
  for (int i = 0; i < u.mesh->node_count(); ++i) {
    out << i << " " << format_double(data.grad_norm[i]) << " "
        << format_double(data.curvature_k1[i]) << " "
        << format_double(data.tangential_grad_norm[i]) << " "
        << format_double(residual[i]) << "\n";
  }
  return out.str();
}

std::string plot_stability(const StabilityReport& report) {
  std::ostringstream out;
  out << "# classification eig_iterations eig_residual lambda_min tolerance\n"
      << to_string(report.classification) << " " << report.eig_iterations
      << " " << format_double(report.eig_residual) << " "
      << format_double(report.lambda_min) << " "
      << format_double(report.tolerance) << "\n";
  return out.str();
}

std::string plot_poincare(const PoincareBreakdown& breakdown) {
  std::ostringstream out;
  out << "# interior_lhs boundary_term rhs slack hessian_form_lhs\n"
      << format_double(breakdown.interior_lhs) << " "
      << format_double(breakdown.boundary_term) << " "
      << format_double(breakdown.rhs) << " " << format_double(breakdown.slack)
      << " " << format_double(breakdown.hessian_form_lhs) << "\n";
  return out.str();
}

std::string csv_table(const std::vector<std::string>& columns,
                      const std::vector<std::vector<std::string>>& rows) {
  std::ostringstream out;
  for (std::size_t c = 0; c < columns.size(); ++c) {
    out << (c ? "," : "") << columns[c];
  }
  out << "\n";
  for (const auto& row : rows) {
    if (row.size() != columns.size()) {
      throw std::invalid_argument("csv_table: row width does not match header");
    }
    for (std::size_t c = 0; c < row.size(); ++c) {
      out << (c ? "," : "") << row[c];
    }
    out << "\n";
  }
  return out.str();
}

}  // namespace stablab
