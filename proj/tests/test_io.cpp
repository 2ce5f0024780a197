#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "stablab/io.hpp"

using namespace stablab;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("stablab_io_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("fnv1a64 reference vectors") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ull);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cull);
  CHECK(fnv1a64("foobar") == 0x85944171f73967e8ull);
}

TEST_CASE("format_double: shortest round-trip representation") {
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(1.0) == "1");
  CHECK(format_double(-2.5) == "-2.5");
  CHECK(format_double(0.0) == "0");
  CHECK(format_double(1e300) == "1e+300");

  // round-trip property over a wide random range
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> mant(-1.0, 1.0);
  std::uniform_int_distribution<int> expo(-300, 300);
  for (int k = 0; k < 1000; ++k) {
    const double v = mant(rng) * std::pow(10.0, expo(rng));
    CHECK(std::stod(format_double(v)) == v);
  }
}

TEST_CASE("csv_table: header plus preformatted cells") {
  const std::string csv =
      csv_table({"seed", "lambda_min"}, {{"0", "2"}, {"1", "-1"}});
  CHECK(csv == "seed,lambda_min\n0,2\n1,-1\n");
  CHECK_THROWS_AS(csv_table({"a", "b"}, {{"only one"}}),
                  std::invalid_argument);
}

TEST_CASE("plot tables: headers and column order") {
  DomainSpec spec;
  spec.h = 0.3;
  const Mesh mesh = generate(spec);
  const Field u = make_field(mesh, 0.5);

  const std::string field_table = plot_field(u);
  std::istringstream in(field_table);
  std::string header;
  std::getline(in, header);
  CHECK(header == "# node[index] x[L] y[L] value[u]");
  int index, rows = 0;
  double x, y, value;
  while (in >> index >> x >> y >> value) {
    CHECK(index == rows);
    CHECK(value == 0.5);  // constant field: single-valued column
    ++rows;
  }
  CHECK(rows == mesh.node_count());

  PoincareBreakdown b;
  b.interior_lhs = 1.0;
  b.boundary_term = -2.0;
  b.rhs = 3.5;
  b.slack = 4.5;
  b.hessian_form_lhs = 0.25;
  CHECK(plot_poincare(b) ==
        "# interior_lhs boundary_term rhs slack hessian_form_lhs\n"
        "1 -2 3.5 4.5 0.25\n");

  StabilityReport rep;
  rep.lambda_min = -1.0;
  rep.classification = Classification::Unstable;
  rep.tolerance = 1e-6;
  rep.eig_residual = 1e-12;
  rep.eig_iterations = 7;
  const std::string stab = plot_stability(rep);
  CHECK(stab ==
        "# classification eig_iterations eig_residual lambda_min tolerance\n"
        "unstable 7 1e-12 -1 1e-06\n");
}

TEST_CASE("artifact writer: manifest lists hashed files sorted by name") {
  TempDir tmp;
  const std::string dir = (tmp.path / "run").string();
  {
    ArtifactWriter writer(dir);
    writer.write("zeta.csv", "z\n");
    writer.write("alpha.csv", "a\n");
    writer.write_manifest();
  }

  CHECK(slurp(fs::path(dir) / "zeta.csv") == "z\n");
  CHECK(slurp(fs::path(dir) / "alpha.csv") == "a\n");

  const std::string manifest = slurp(fs::path(dir) / "MANIFEST");
  std::istringstream in(manifest);
  std::string line0, line1, line2;
  std::getline(in, line0);
  std::getline(in, line1);
  std::getline(in, line2);
  CHECK(line0.rfind("# MANIFEST written ", 0) == 0);

  char expect1[64], expect2[64];
  std::snprintf(expect1, sizeof(expect1), "%016llx  alpha.csv",
                static_cast<unsigned long long>(fnv1a64("a\n")));
  std::snprintf(expect2, sizeof(expect2), "%016llx  zeta.csv",
                static_cast<unsigned long long>(fnv1a64("z\n")));
  CHECK(line1 == expect1);
  CHECK(line2 == expect2);

  std::string extra;
  CHECK(!std::getline(in, extra));
}

TEST_CASE("artifact writer: unwritable directory fails loudly") {
  std::string msg;
  try {
    ArtifactWriter writer("/proc/definitely/not/writable");
  } catch (const std::runtime_error& e) {
    msg = e.what();
  }
  CHECK(msg.find("cannot create output directory") != std::string::npos);
}
