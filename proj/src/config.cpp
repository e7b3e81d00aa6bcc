#include "uzmm/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <fstream>
#include <sstream>

namespace uzmm {

namespace {

[[noreturn]] void fail(const std::string& what) { throw ValidationError(what); }

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

// Inline comments start at " ;" or " #".
std::string strip_comment(const std::string& value) {
  std::size_t cut = std::string::npos;
  for (const char* marker : {" ;", " #", "\t;", "\t#"}) cut = std::min(cut, value.find(marker));
  return trim(cut == std::string::npos ? value : value.substr(0, cut));
}

}  // namespace

std::string format_number(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

double parse_number(const std::string& text) {
  const std::string t = trim(text);
  double x = 0.0;
  const char* begin = t.data();
  if (!t.empty() && t.front() == '+') ++begin;
  const auto res = std::from_chars(begin, t.data() + t.size(), x);
  if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size())
    fail("not a number: '" + text + "'");
  return x;
}

ConfigDocument ConfigDocument::from_string(const std::string& text) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    fail(std::string("config parse error: ") + e.what());
  }
  ConfigDocument doc;
  for (const auto& [name, child] : tree) {
    if (child.empty()) fail("config key '" + name + "' appears outside any section");
    auto& section = doc.sections_[name];
    for (const auto& [key, value] : child) section[key] = strip_comment(value.data());
  }
  return doc;
}

ConfigDocument ConfigDocument::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open config file " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return from_string(text.str());
}

bool ConfigDocument::has_section(const std::string& s) const { return sections_.count(s) > 0; }

const ConfigDocument::Section& ConfigDocument::section(const std::string& name) const {
  const auto it = sections_.find(name);
  if (it == sections_.end()) fail("config is missing section [" + name + "]");
  return it->second;
}

std::optional<std::string> ConfigDocument::find(const std::string& s, const std::string& key) const {
  const auto it = sections_.find(s);
  if (it == sections_.end()) return std::nullopt;
  const auto kv = it->second.find(key);
  if (kv == it->second.end()) return std::nullopt;
  return kv->second;
}

std::string ConfigDocument::get_string(const std::string& s, const std::string& key) const {
  const auto& sec = section(s);
  const auto kv = sec.find(key);
  if (kv == sec.end()) fail("config section [" + s + "] is missing key '" + key + "'");
  return kv->second;
}

double ConfigDocument::get_double(const std::string& s, const std::string& key) const {
  const std::string text = get_string(s, key);
  try {
    return parse_number(text);
  } catch (const ValidationError&) {
    fail("config [" + s + "] " + key + ": expected a number, got '" + text + "'");
  }
}

double ConfigDocument::get_double(const std::string& s, const std::string& key,
                                  double fallback) const {
  return find(s, key) ? get_double(s, key) : fallback;
}

int ConfigDocument::get_int(const std::string& s, const std::string& key) const {
  const double x = get_double(s, key);
  if (x != static_cast<double>(static_cast<int>(x)))
    fail("config [" + s + "] " + key + ": expected an integer");
  return static_cast<int>(x);
}

int ConfigDocument::get_int(const std::string& s, const std::string& key, int fallback) const {
  return find(s, key) ? get_int(s, key) : fallback;
}

std::vector<double> ConfigDocument::get_list(const std::string& s, const std::string& key) const {
  std::vector<double> out;
  std::stringstream in(get_string(s, key));
  std::string item;
  while (std::getline(in, item, ',')) {
    if (trim(item).empty()) continue;
    try {
      out.push_back(parse_number(item));
    } catch (const ValidationError&) {
      fail("config [" + s + "] " + key + ": bad list item '" + item + "'");
    }
  }
  return out;
}

void ConfigDocument::set(const std::string& s, const std::string& key, const std::string& value) {
  sections_[s][key] = value;
}

std::string ConfigDocument::to_string() const {
  std::ostringstream os;
  bool first = true;
  for (const auto& [name, sec] : sections_) {
    if (!first) os << '\n';
    first = false;
    os << '[' << name << "]\n";
    for (const auto& [k, v] : sec) os << k << " = " << v << '\n';
  }
  return os.str();
}

// ---------------------------------------------------------------------------

ModelParams build_params(const ConfigDocument& c) {
  ModelParams p;
  p.horizon = c.get_double("market", "horizon");
  p.volatility = c.get_double("market", "volatility");
  p.tick = c.get_double("market", "tick");
  p.zone_ratio = c.get_double("market", "zone_ratio");
  p.risk_aversion = c.get_double("preferences", "risk_aversion");
  p.inventory_cap = c.get_double("preferences", "inventory_cap");
  const std::string steps = c.get_string("preferences", "volume_steps");
  if (steps != "continuous") p.volume_steps = c.get_int("preferences", "volume_steps");
  p.ask_cap = c.get_double("preferences", "ask_cap");
  p.bid_cap = c.get_double("preferences", "bid_cap");
  return validate(p);
}

namespace {

IntensityShape build_intensity(const ConfigDocument& c, const std::string& name) {
  const std::string type = c.get_string(name, "type");
  if (type == "affine") return AffineIntensity{c.get_double(name, "a"), c.get_double(name, "b")};
  if (type == "exponential" || type == "exponential_capped")
    return ExponentialIntensity{c.get_double(name, "a"), c.get_double(name, "b")};
  if (type == "table") {
    TableIntensity t;
    t.times = c.get_list(name, "times");
    t.ys = c.get_list(name, "ys");
    t.rates = c.get_list(name, "rates");
    return t;
  }
  fail("[" + name + "] type must be affine, exponential or table, got '" + type + "'");
}

ExecutionMeasure build_measure(const ConfigDocument& c, const std::string& name, double cap) {
  const std::string type = c.get_string(name, "type");
  if (type == "power_law") {
    const double spacing = c.get_double(name, "spacing", 1.0);
    const auto volumes = volume_range(cap, spacing);
    return power_law_measure(cap, volumes, c.get_double(name, "decay"));
  }
  if (type == "atoms") {
    const auto v = c.get_list(name, "volumes");
    const auto m = c.get_list(name, "masses");
    if (v.size() != m.size()) fail("[" + name + "] volumes and masses differ in length");
    std::vector<Atom> atoms;
    for (std::size_t i = 0; i < v.size(); ++i) atoms.push_back({v[i], m[i]});
    return ExecutionMeasure::from_atoms(std::move(atoms), cap);
  }
  if (type == "degenerate") return ExecutionMeasure::from_atoms({{0.0, 1.0}}, cap, true);
  fail("[" + name + "] type must be power_law, atoms or degenerate, got '" + type + "'");
}

PenaltyShape build_penalty(const ConfigDocument& c, const ModelParams& p) {
  const std::string type = c.get_string("penalty", "type");
  if (type == "quadratic") return QuadraticPenalty{c.get_double("penalty", "coefficient")};
  if (type == "table") {
    TablePenalty t;
    t.values = c.get_list("penalty", "values");
    if (static_cast<int>(t.values.size()) != p.inventory_levels())
      fail("[penalty] table needs one value per inventory grid point");
    for (int i = 0; i < p.inventory_levels(); ++i) t.inventories.push_back(p.inventory(i));
    return t;
  }
  fail("[penalty] type must be quadratic or table, got '" + type + "'");
}

}  // namespace

MarketModel build_model(const ConfigDocument& c) {
  const ModelParams p = build_params(c);
  for (const char* s : {"intensity.ask", "intensity.bid", "measure.ask", "measure.bid", "penalty"})
    (void)c.section(s);
  return MarketModel(p, build_intensity(c, "intensity.ask"), build_intensity(c, "intensity.bid"),
                     build_measure(c, "measure.ask", p.ask_cap),
                     build_measure(c, "measure.bid", p.bid_cap), build_penalty(c, p));
}

}  // namespace uzmm
