#include "levyruin/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "levyruin/error.hpp"

namespace levyruin {

namespace {

namespace pt = boost::property_tree;

[[noreturn]] void fail(const std::string& message) { throw Error(ErrorKind::Config, message); }

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& value) {
  const std::string v = trim(value);
  std::size_t used = 0;
  double x = 0.0;
  try {
    x = std::stod(v, &used);
  } catch (const std::exception&) {
    fail("value of '" + key + "' is not a number: '" + v + "'");
  }
  if (used != v.size() || !std::isfinite(x)) fail("value of '" + key + "' is not a finite number: '" + v + "'");
  return x;
}

std::uint64_t to_u64(const std::string& key, const std::string& value) {
  const std::string v = trim(value);
  if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos) {
    fail("value of '" + key + "' is not an unsigned integer: '" + v + "'");
  }
  try {
    return std::stoull(v);
  } catch (const std::exception&) {
    fail("value of '" + key + "' is out of range: '" + v + "'");
  }
}

bool to_bool(const std::string& key, const std::string& value) {
  const std::string v = trim(value);
  if (v == "true" || v == "on" || v == "yes" || v == "1") return true;
  if (v == "false" || v == "off" || v == "no" || v == "0") return false;
  fail("value of '" + key + "' is not a boolean: '" + v + "'");
}

std::vector<double> to_list(const std::string& key, const std::string& value) {
  std::vector<double> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(to_double(key, item));
  if (out.empty()) fail("list '" + key + "' is empty");
  return out;
}

// Drops everything after ';' or '#' so inline comments are allowed.
std::string strip_comments(const std::string& text) {
  std::stringstream in(text), out;
  std::string line;
  while (std::getline(in, line)) {
    const auto cut = line.find_first_of(";#");
    out << (cut == std::string::npos ? line : line.substr(0, cut)) << '\n';
  }
  return out.str();
}

class Section {
 public:
  Section(std::string name, const pt::ptree* tree) : name_(std::move(name)), tree_(tree) {}

  std::optional<std::string> take(const std::string& key) {
    seen_.insert(key);
    if (!tree_) return std::nullopt;
    const auto child = tree_->get_child_optional(pt::ptree::path_type(key, '\0'));
    if (!child) return std::nullopt;
    return trim(child->data());
  }
  void number(const std::string& key, double& target) {
    if (auto v = take(key)) target = to_double(qualified(key), *v);
  }
  void count(const std::string& key, std::size_t& target) {
    if (auto v = take(key)) target = static_cast<std::size_t>(to_u64(qualified(key), *v));
  }
  void flag(const std::string& key, bool& target) {
    if (auto v = take(key)) target = to_bool(qualified(key), *v);
  }
  void reject_unknown() const {
    if (!tree_) return;
    for (const auto& [key, child] : *tree_) {
      if (!child.empty()) continue;
      if (!seen_.count(key)) fail("unknown key '" + qualified(key) + "'");
    }
  }
  std::string qualified(const std::string& key) const { return name_.empty() ? key : name_ + "." + key; }

 private:
  std::string name_;
  const pt::ptree* tree_;
  std::set<std::string> seen_;
};

const std::set<std::string> kSections = {"params", "time", "laplace", "spectral", "mc", "stages", "tolerances"};

}  // namespace

std::vector<Interval> parse_domain(const std::string& text) {
  std::vector<Interval> out;
  std::size_t pos = 0;
  while (true) {
    const auto open = text.find('[', pos);
    const std::string between = trim(text.substr(pos, open == std::string::npos ? std::string::npos : open - pos));
    if (!between.empty() && between != "u" && between != "U") fail("unexpected text in domain: '" + between + "'");
    if (open == std::string::npos) break;
    const auto close = text.find(']', open);
    if (close == std::string::npos) fail("unterminated interval in domain");
    const std::string body = text.substr(open + 1, close - open - 1);
    const auto comma = body.find(',');
    if (comma == std::string::npos) fail("interval needs two endpoints: '[" + body + "]'");
    out.push_back({to_double("domain", body.substr(0, comma)), to_double("domain", body.substr(comma + 1))});
    pos = close + 1;
  }
  if (out.empty()) fail("domain has no intervals");
  try {
    Domain check(out);
  } catch (const Error& e) {
    fail(std::string("invalid domain: ") + e.what());
  }
  return out;
}

RunConfig parse_config(const std::string& text) {
  pt::ptree tree;
  try {
    std::stringstream ss(strip_comments(text));
    pt::read_ini(ss, tree);
  } catch (const pt::ini_parser_error& e) {
    fail(std::string("cannot parse configuration: ") + e.message() + " at line " + std::to_string(e.line()));
  }
  for (const auto& [name, child] : tree) {
    if (!child.empty() && !kSections.count(name)) fail("unknown section [" + name + "]");
  }
  auto section = [&](const std::string& name) {
    const auto child = tree.get_child_optional(name);
    return Section(name, child ? &*child : nullptr);
  };

  RunConfig c;
  Section top("", &tree);
  for (const auto& name : kSections) top.take(name);
  const auto family = top.take("family");
  if (!family || family->empty()) fail("missing required key 'family'");
  c.family = *family;
  top.number("A", c.A);
  top.number("gamma", c.gamma);
  const auto domain = top.take("domain");
  if (!domain) fail("missing required key 'domain'");
  c.domain = parse_domain(*domain);
  const auto x0 = top.take("x0");
  if (!x0) fail("missing required key 'x0'");
  c.x0 = to_double("x0", *x0);
  top.number("resolution", c.resolution);
  top.number("anchor", c.anchor);
  top.reject_unknown();

  if (const auto params = tree.get_child_optional("params")) {
    for (const auto& [key, child] : *params) c.params[key] = trim(child.data());
  }

  Section time = section("time");
  time.number("dt", c.time_step);
  time.number("horizon", c.time_horizon);
  time.reject_unknown();

  Section laplace = section("laplace");
  if (auto s = laplace.take("s")) c.laplace_s = to_list("laplace.s", *s);
  laplace.reject_unknown();

  Section spectral = section("spectral");
  std::size_t leading = static_cast<std::size_t>(c.leading_count), trials = static_cast<std::size_t>(c.sector_trials);
  spectral.count("leading", leading);
  spectral.count("sector_trials", trials);
  if (auto v = spectral.take("sector_seed")) c.sector_seed = to_u64("spectral.sector_seed", *v);
  spectral.number("symbol_step", c.symbol_step);
  spectral.number("symbol_radius", c.symbol_radius);
  spectral.reject_unknown();
  c.leading_count = static_cast<int>(leading);
  c.sector_trials = static_cast<int>(trials);

  Section mc = section("mc");
  mc.count("paths", c.mc.paths);
  mc.number("dt", c.mc.dt);
  mc.number("horizon", c.mc.horizon);
  if (auto v = mc.take("seed")) c.mc.seed = to_u64("mc.seed", *v);
  mc.number("cutoff", c.mc.cutoff);
  mc.count("bins", c.mc.bins);
  mc.flag("force_small_jumps", c.mc.force_small_jumps);
  mc.reject_unknown();

  Section stages = section("stages");
  stages.flag("classify", c.stages.classify);
  stages.flag("kernel", c.stages.kernel);
  stages.flag("assemble", c.stages.assemble);
  stages.flag("eigen", c.stages.eigen);
  stages.flag("survival", c.stages.survival);
  stages.flag("laplace", c.stages.laplace);
  stages.flag("mc", c.stages.mc);
  stages.flag("compare", c.stages.compare);
  stages.reject_unknown();

  Section tol = section("tolerances");
  tol.number("symbol_residual", c.tolerances.symbol_residual);
  tol.number("positivity", c.tolerances.positivity);
  tol.number("disk", c.tolerances.disk);
  tol.number("symmetry", c.tolerances.symmetry);
  tol.number("laplace", c.tolerances.laplace);
  tol.number("rate_relative", c.tolerances.rate_relative);
  tol.number("rate_sigmas", c.tolerances.rate_sigmas);
  tol.number("occupation_sigmas", c.tolerances.occupation_sigmas);
  tol.number("quasi_potential_residual", c.tolerances.quasi_potential_residual);
  tol.reject_unknown();

  if (!(c.resolution >= 16.0)) fail("resolution must be at least 16");
  if (!(c.anchor > 0.0)) fail("anchor must be positive");
  if (!(c.time_step > 0.0) || !(c.time_horizon > c.time_step)) fail("time.dt must be positive and below time.horizon");
  if (c.leading_count < 1 || c.leading_count > 20) fail("spectral.leading must be in 1..20");
  if (c.sector_trials < 1) fail("spectral.sector_trials must be positive");
  for (double s : c.laplace_s) {
    if (s < 0.0) fail("laplace.s values must be nonnegative");
  }
  if (c.stages.compare) c.stages.mc = true;
  if (c.stages.mc) {
    if (c.mc.paths < 1000) fail("mc.paths must be at least 1000");
    if (!(c.mc.dt > 0.0) || !(c.mc.horizon > c.mc.dt)) fail("mc.dt must be positive and below mc.horizon");
    if (c.mc.bins < 1) fail("mc.bins must be positive");
  }
  // Builds the triplet once so parameter errors surface as configuration errors.
  c.triplet();
  return c;
}

void require_seed(const RunConfig& c) {
  if (c.stages.mc && !c.mc.seed) fail("mc.seed is required when the Monte Carlo stage is enabled");
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open configuration file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

LevyTriplet RunConfig::triplet() const {
  std::set<std::string> used;
  auto get = [&](const std::string& key, std::optional<double> fallback = std::nullopt) {
    used.insert(key);
    const auto it = params.find(key);
    if (it == params.end()) {
      if (!fallback) fail("family '" + family + "' needs params." + key);
      return *fallback;
    }
    return to_double("params." + key, it->second);
  };
  auto text = [&](const std::string& key) {
    used.insert(key);
    const auto it = params.find(key);
    if (it == params.end()) fail("family '" + family + "' needs params." + key);
    return it->second;
  };

  std::optional<LevyMeasureSpec> spec;
  if (family == "brownian") {
    spec = BrownianFamily{};
  } else if (family == "poisson") {
    spec = PoissonFamily{get("rate", 1.0), get("jump", 1.0)};
  } else if (family == "compound_poisson") {
    const double rate = get("rate");
    const std::string law = text("law");
    if (law == "fixed") {
      spec = CompoundPoissonFamily{rate, FixedJump{get("size")}};
    } else if (law == "exponential") {
      spec = CompoundPoissonFamily{rate, ExponentialJump{get("jump_rate"), get("negative", 0.0) != 0.0}};
    } else if (law == "normal") {
      spec = CompoundPoissonFamily{rate, NormalJump{get("mean", 0.0), get("sd")}};
    } else {
      fail("unknown jump law '" + law + "' (expected fixed, exponential or normal)");
    }
  } else if (family == "stable") {
    spec = StableFamily{get("alpha"), get("scale", 1.0), get("skew", 0.0)};
  } else if (family == "cauchy") {
    spec = StableFamily{1.0, get("scale", 1.0), 0.0};
  } else if (family == "gamma") {
    spec = GammaFamily{get("shape"), get("rate")};
  } else if (family == "cgmy") {
    spec = CgmyFamily{get("C"), get("G"), get("M"), get("Y")};
  } else if (family == "atoms") {
    const auto positions = to_list("params.positions", text("positions"));
    const auto masses = to_list("params.masses", text("masses"));
    if (positions.size() != masses.size()) fail("params.positions and params.masses differ in length");
    AtomMeasure m;
    for (std::size_t k = 0; k < positions.size(); ++k) m.atoms.push_back({positions[k], masses[k]});
    spec = m;
  } else if (family == "density") {
    const std::string profile = text("profile");
    if (profile != "tempered_power") fail("unknown density profile '" + profile + "' (expected tempered_power)");
    // C e^{-lambda |x|} / |x|^{1 + alpha}, symmetric.
    const double C = get("C"), alpha = get("alpha"), lambda = get("lambda");
    if (!(C > 0.0) || !(alpha < 2.0) || !(lambda > 0.0)) fail("tempered_power needs C > 0, alpha < 2, lambda > 0");
    DensityMeasure d;
    d.density = [C, alpha, lambda](double x) {
      const double a = std::abs(x);
      return C * std::exp(-lambda * a) / std::pow(a, 1.0 + alpha);
    };
    d.near_zero_positive = NearZero{alpha};
    d.near_zero_negative = NearZero{alpha};
    spec = d;
  } else {
    fail("unknown family '" + family + "'");
  }
  for (const auto& [key, value] : params) {
    if (!used.count(key)) fail("parameter params." + key + " is not used by family '" + family + "'");
  }
  try {
    return LevyTriplet(A, gamma, *spec);
  } catch (const Error& e) {
    fail(std::string("invalid triplet: ") + e.what());
  }
}

std::string RunConfig::triplet_key() const {
  char buf[96];
  std::string key = "family=" + family;
  std::snprintf(buf, sizeof buf, ";A=%.17g;gamma=%.17g", A, gamma);
  key += buf;
  for (const auto& [k, v] : params) key += ";" + k + "=" + v;
  return key;
}

}  // namespace levyruin
