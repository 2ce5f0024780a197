#include <doctest.h>

#include <string>
#include <vector>

#include "stablab/config.hpp"
#include "stablab/mesh.hpp"

using namespace stablab;

namespace {

std::string message_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("config: parse, comments, dotted keys, line numbers") {
  const Config cfg = parse_config_text(
      "# header comment\n"
      "scenario = identity-suite\n"
      "\n"
      "domain.kind = annulus   # trailing comment\n"
      "newton.max_iterations = 25\n"
      "flag_underscore-dash = ok\n",
      "test.cfg");

  CHECK(cfg.get_string("scenario") == "identity-suite");
  CHECK(cfg.get_string("domain.kind") == "annulus");
  CHECK(cfg.get_int_or("newton.max_iterations", 1) == 25);
  CHECK(cfg.get_string("flag_underscore-dash") == "ok");
  CHECK(cfg.has("scenario"));
  CHECK(!cfg.has("absent"));
  CHECK(cfg.find("scenario")->line == 2);
  CHECK(cfg.find("domain.kind")->line == 4);
}

TEST_CASE("config: malformed input names file, line and offending text") {
  CHECK(message_of([] { parse_config_text("just words\n", "bad.cfg"); }) ==
        "bad.cfg:1: expected `key = value`, got 'just words'");
  CHECK(message_of([] { parse_config_text("= 3\n", "bad.cfg"); }) ==
        "bad.cfg:1: empty key before '='");
  const std::string dup = message_of(
      [] { parse_config_text("a = 1\nb = 2\na = 3\n", "dup.cfg"); });
  CHECK(dup.find("dup.cfg:3") != std::string::npos);
  CHECK(dup.find("duplicate key 'a'") != std::string::npos);
  CHECK(dup.find("first at line 1") != std::string::npos);
  const std::string badkey =
      message_of([] { parse_config_text("we$rd = 1\n", "k.cfg"); });
  CHECK(badkey.find("bad character '$'") != std::string::npos);
}

TEST_CASE("config: typed getters reject badly typed values with location") {
  const Config cfg = parse_config_text(
      "count = 2.5\nratio = abc\nflag = maybe\nseed = -4\n", "typed.cfg");

  const std::string e1 =
      message_of([&] { (void)cfg.get_int_or("count", 0); });
  CHECK(e1.find("typed.cfg:1") != std::string::npos);
  CHECK(e1.find("'count'") != std::string::npos);
  CHECK(e1.find("expected an integer") != std::string::npos);

  const std::string e2 = message_of([&] { (void)cfg.get_double("ratio"); });
  CHECK(e2.find("typed.cfg:2") != std::string::npos);
  CHECK(e2.find("expected a number") != std::string::npos);
  CHECK(e2.find("got 'abc'") != std::string::npos);

  CHECK(message_of([&] { (void)cfg.get_bool_or("flag", false); })
            .find("expected a boolean") != std::string::npos);
  CHECK(message_of([&] { (void)cfg.get_uint64_or("seed", 0); })
            .find("expected an unsigned integer") != std::string::npos);

  const std::string missing = message_of([&] { (void)cfg.get_string("nope"); });
  CHECK(missing == "typed.cfg: missing required key 'nope'");
}

TEST_CASE("config: list getters split on commas and whitespace") {
  const Config cfg = parse_config_text(
      "alphas = -0.5, -0.25,0.25 0.5\n"
      "seeds = constant:0.9, ramp:0.8 , , blend:1,\n"
      "empty =\n",
      "lists.cfg");

  const std::vector<double> alphas = cfg.get_doubles_or("alphas", {});
  REQUIRE(alphas.size() == 4);
  CHECK(alphas[0] == -0.5);
  CHECK(alphas[1] == -0.25);
  CHECK(alphas[2] == 0.25);
  CHECK(alphas[3] == 0.5);

  const std::vector<std::string> seeds = cfg.get_list_or("seeds", {});
  REQUIRE(seeds.size() == 3);
  CHECK(seeds[0] == "constant:0.9");
  CHECK(seeds[1] == "ramp:0.8");
  CHECK(seeds[2] == "blend:1");

  // fallbacks pass through untouched
  CHECK(cfg.get_doubles_or("absent", {1.0, 2.0}) ==
        std::vector<double>{1.0, 2.0});
  CHECK(cfg.get_list_or("absent", {"x"}) == std::vector<std::string>{"x"});

  // an empty value is an error, not an empty list
  CHECK(message_of([&] { (void)cfg.get_doubles_or("empty", {}); })
            .find("expected a list of numbers") != std::string::npos);
}

TEST_CASE("config: require_all_used reports every untouched key with line") {
  const Config cfg = parse_config_text(
      "used = 1\ntypo.keey = 2\nstray = 3\n", "extra.cfg");
  (void)cfg.get_double("used");
  const std::string msg = message_of([&] { cfg.require_all_used(); });
  CHECK(msg.find("extra.cfg: unknown keys:") != std::string::npos);
  CHECK(msg.find("'typo.keey' (line 2)") != std::string::npos);
  CHECK(msg.find("'stray' (line 3)") != std::string::npos);
  CHECK(msg.find("'used'") == std::string::npos);

  // find() marks keys used; afterwards the same call passes
  (void)cfg.find("typo.keey");
  (void)cfg.find("stray");
  CHECK_NOTHROW(cfg.require_all_used());
}

TEST_CASE("config: domain block round-trips into a DomainSpec") {
  const Config cfg = parse_config_text(
      "domain.kind = annulus\n"
      "domain.h = 0.05\n"
      "domain.radius = 2\n"
      "domain.inner_radius = 0.75\n",
      "dom.cfg");
  const DomainSpec spec = domain_from_config(cfg);
  CHECK(spec.kind == DomainSpec::Kind::Annulus);
  CHECK(spec.h == 0.05);
  CHECK(spec.radius == 2.0);
  CHECK(spec.inner_radius == 0.75);

  // defaults fill everything else
  const DomainSpec bare =
      domain_from_config(parse_config_text("", "empty.cfg"));
  CHECK(bare.kind == DomainSpec::Kind::Disk);
  CHECK(bare.h == 0.1);

  const std::string bad = message_of([] {
    (void)domain_from_config(
        parse_config_text("domain.kind = triangle\n", "dom.cfg"));
  });
  CHECK(bad.find("unknown domain.kind 'triangle'") != std::string::npos);
  CHECK(bad.find("dom.cfg:1") != std::string::npos);

  const std::string nofile = message_of([] {
    (void)domain_from_config(
        parse_config_text("domain.kind = file\n", "dom.cfg"));
  });
  CHECK(nofile.find("requires domain.path") != std::string::npos);
}

TEST_CASE("config: parse_config_file errors on missing paths") {
  const std::string msg = message_of(
      [] { (void)parse_config_file("/nonexistent/path/x.cfg"); });
  CHECK(msg.find("cannot open config file") != std::string::npos);
}
