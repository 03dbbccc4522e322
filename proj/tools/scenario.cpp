#include "scenario.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace fradrc::cli {

namespace pt = boost::property_tree;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Locates section/key in the raw text so field errors can name a line.
class Locator {
 public:
  explicit Locator(const std::string& path) : path_(path) {
    std::ifstream in(path);
    std::string line, section;
    int no = 0;
    while (std::getline(in, line)) {
      ++no;
      const std::string t = trim(line);
      if (t.empty() || t[0] == ';' || t[0] == '#') continue;
      if (t.front() == '[' && t.back() == ']') {
        section = trim(t.substr(1, t.size() - 2));
        lines_[section] = no;
        continue;
      }
      const auto eq = t.find('=');
      if (eq != std::string::npos) lines_[section + "\x1f" + trim(t.substr(0, eq))] = no;
    }
  }

  [[noreturn]] void fail(const std::string& section, const std::string& key, const std::string& msg) const {
    std::ostringstream os;
    os << path_;
    auto it = lines_.find(key.empty() ? section : section + "\x1f" + key);
    if (it != lines_.end()) os << ':' << it->second;
    os << ": [" << section << ']';
    if (!key.empty()) os << ' ' << key;
    os << ": " << msg;
    throw ConfigError(os.str());
  }

 private:
  std::string path_;
  std::map<std::string, int> lines_;
};

class Section {
 public:
  Section(const Locator& loc, std::string name, const pt::ptree& tree)
      : loc_(loc), name_(std::move(name)), tree_(tree) {}

  bool has(const std::string& key) const {
    used_.insert(key);
    return tree_.find(key) != tree_.not_found();
  }

  std::string str(const std::string& key) const {
    if (!has(key)) loc_.fail(name_, "", "missing required key '" + key + "'");
    return trim(tree_.get<std::string>(key));
  }
  std::string str(const std::string& key, const std::string& def) const { return has(key) ? str(key) : def; }

  double num(const std::string& key) const {
    const std::string v = str(key);
    try {
      std::size_t pos = 0;
      const double d = std::stod(v, &pos);
      if (pos != v.size() || !std::isfinite(d)) throw std::invalid_argument(v);
      return d;
    } catch (const std::exception&) {
      loc_.fail(name_, key, "expected a number, got '" + v + "'");
    }
  }
  double num(const std::string& key, double def) const { return has(key) ? num(key) : def; }

  int integer(const std::string& key, int def) const {
    if (!has(key)) return def;
    const double d = num(key);
    if (d != std::floor(d)) loc_.fail(name_, key, "expected an integer");
    return static_cast<int>(d);
  }

  std::vector<double> list(const std::string& key) const {
    const std::string v = str(key);
    std::vector<double> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = trim(item);
      try {
        std::size_t pos = 0;
        out.push_back(std::stod(item, &pos));
        if (pos != item.size() || !std::isfinite(out.back())) throw std::invalid_argument(item);
      } catch (const std::exception&) {
        loc_.fail(name_, key, "expected a comma-separated list of numbers, got '" + v + "'");
      }
    }
    if (out.empty()) loc_.fail(name_, key, "empty list");
    return out;
  }

  Rational rational(const std::string& key) const {
    try {
      return parse_rational(str(key));
    } catch (const InvalidArgument& e) {
      loc_.fail(name_, key, e.what());
    }
  }

  // Every key in the section must have been read.
  void finish() const {
    for (const auto& [k, v] : tree_)
      if (!used_.count(k)) loc_.fail(name_, k, "unknown key");
  }

  [[noreturn]] void fail(const std::string& key, const std::string& msg) const { loc_.fail(name_, key, msg); }

 private:
  const Locator& loc_;
  std::string name_;
  const pt::ptree& tree_;
  mutable std::set<std::string> used_;
};

KdFormula parse_kd_formula(const Section& s) {
  const std::string f = s.str("kd_formula", "corrected");
  if (f == "corrected") return KdFormula::Corrected;
  if (f == "literal") return KdFormula::Literal;
  s.fail("kd_formula", "expected 'corrected' or 'literal'");
}

AdrcDesign parse_design(const Section& s, const std::string& name, const Scenario& sc) {
  AdrcDesign d;
  d.name = name;
  const int m = sc.plant.order();
  const double fs_default = sc.sim.present ? 1.0 / sc.sim.dt : 8000.0;
  const double fs = s.num("fs", fs_default);
  if (sc.sim.present && std::fabs(fs * sc.sim.dt - 1.0) > 1e-9)
    s.fail("fs", "must equal 1/dt of the [sim] section");
  const double omega0 = s.num("omega0");
  const double b0 = s.num("b0", sc.plant.b);
  Variant v;
  try {
    v = parse_variant(s.str("variant"));
  } catch (const InvalidArgument& e) {
    s.fail("variant", e.what());
  }
  try {
    switch (v) {
      case Variant::IFO: {
        const AdrcOrders o = derive_orders(m, s.rational("chi"), s.rational("nu"));
        d.eso = make_ifo_eso(o, omega0, b0, fs);
        if (s.has("kp")) {
          const double kp = s.num("kp");
          const auto kd = s.list("kd");
          if (!(kp > 0)) s.fail("kp", "kp must be > 0");
          if (static_cast<int>(kd.size()) != o.n - 1) s.fail("kd", "expected n - 1 = " + std::to_string(o.n - 1) + " gains");
          for (double k : kd)
            if (!(k > 0)) s.fail("kd", "kd gains must be > 0");
          d.trk = tracking_from_gains(o, kp, kd);
        } else if (s.has("omega_c")) {
          d.trk = tracking_gains(o, s.num("omega_c"), s.num("omega_g"), parse_kd_formula(s));
        }
        break;
      }
      case Variant::FO: {
        d.eso = make_fo_eso(m, s.rational("chi"), omega0, b0, fs);
        if (s.has("fo_split")) d.eso.fo_split = s.rational("fo_split");
        if (!s.has("kp")) break;
        d.trk.kp = s.num("kp");
        d.trk.kd = s.list("kd");
        if (d.trk.kd.size() != 1) s.fail("kd", "FO design takes one kd gain");
        if (!(d.trk.kp > 0) || !(d.trk.kd[0] > 0)) s.fail("kd", "kp and kd must be > 0");
        break;
      }
      case Variant::IO: {
        if (s.has("k_ip")) {
          if (m != 2) s.fail("k_ip", "PD gains k_ip/k_id need a second-order plant; use kp and kd");
          const double kip = s.num("k_ip"), kid = s.num("k_id");
          if (!(kip > 0) || !(kid > 0)) s.fail("k_id", "k_ip and k_id must be > 0");
          d = make_io_design(m, omega0, b0, fs, kip, kid);
          d.name = name;
        } else {
          d.eso = make_io_eso(m, omega0, b0, fs);
          if (!s.has("kp")) break;
          d.trk.kp = s.num("kp");
          d.trk.kd = s.list("kd");
          if (static_cast<int>(d.trk.kd.size()) != m - 1) s.fail("kd", "expected m - 1 gains");
          for (double k : d.trk.kd)
            if (!(k > 0)) s.fail("kd", "kd gains must be > 0");
          if (!(d.trk.kp > 0)) s.fail("kp", "kp must be > 0");
        }
        break;
      }
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    s.fail("", e.what());
  }
  if (s.has("L")) d.eso.L = s.list("L");
  d.eso.filter_order = s.integer("filter_order", d.eso.filter_order);
  d.eso.gl_memory = s.integer("gl_memory", d.eso.gl_memory);
  if (s.has("band_lo") || s.has("band_hi")) {
    d.eso.band.lo = s.num("band_lo");
    d.eso.band.hi = s.num("band_hi");
    if (!(d.eso.band.lo > 0) || !(d.eso.band.hi > d.eso.band.lo)) s.fail("band_hi", "need 0 < band_lo < band_hi");
  }
  const std::string bank = s.str("bank", "fitted");
  if (bank == "fitted")
    d.eso.bank = FilterBank::Fitted;
  else if (bank == "gl")
    d.eso.bank = FilterBank::GlOracle;
  else
    s.fail("bank", "expected 'fitted' or 'gl'");
  try {
    d.eso.validate();
  } catch (const Error& e) {
    s.fail("", e.what());
  }
  s.finish();
  return d;
}

}  // namespace

Rational parse_rational(const std::string& text) {
  const std::string s = trim(text);
  try {
    const auto slash = s.find('/');
    if (slash != std::string::npos) {
      std::size_t p1 = 0, p2 = 0;
      const std::string a = trim(s.substr(0, slash)), b = trim(s.substr(slash + 1));
      const long long n = std::stoll(a, &p1), q = std::stoll(b, &p2);
      if (p1 != a.size() || p2 != b.size() || q == 0) throw std::invalid_argument(s);
      return Rational(n, q);
    }
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size() || !std::isfinite(v)) throw std::invalid_argument(s);
    const Rational r = to_rational(v, 1000);
    if (std::fabs(r.to_double() - v) > 1e-12 * std::max(1.0, std::fabs(v)))
      throw std::invalid_argument(s);
    return r;
  } catch (const std::exception&) {
    throw InvalidArgument("expected a rational like 6/5 or 1.2, got '" + text + "'");
  }
}

bool has_tracking(const AdrcDesign& d) { return d.trk.kp > 0.0; }

double ideal_order(const AdrcDesign& d) {
  if (d.eso.variant == Variant::FO) return d.eso.m + d.eso.orders.chi.to_double() - 1.0;
  return d.eso.m;
}

Scenario load_scenario(const std::string& path) {
  pt::ptree tree;
  try {
    pt::read_ini(path, tree);
  } catch (const pt::ini_parser_error& e) {
    std::ostringstream os;
    os << path;
    if (e.line() > 0) os << ':' << e.line();
    os << ": " << e.message();
    throw ConfigError(os.str());
  }
  const Locator loc(path);
  Scenario sc;

  auto section = [&](const std::string& name) -> const pt::ptree* {
    auto it = tree.find(name);
    return it == tree.not_found() ? nullptr : &it->second;
  };

  if (auto* t = section("scenario")) {
    Section s(loc, "scenario", *t);
    sc.name = s.str("name", "");
    s.finish();
  }
  if (sc.name.empty()) {
    const auto slash = path.find_last_of('/');
    std::string base = slash == std::string::npos ? path : path.substr(slash + 1);
    sc.name = base.substr(0, base.find('.'));
  }

  const pt::ptree* plant = section("plant");
  if (!plant) loc.fail("plant", "", "missing [plant] section");
  {
    Section s(loc, "plant", *plant);
    sc.plant.a = s.list("a");
    sc.plant.b = s.num("b");
    try {
      sc.plant.validate();
    } catch (const Error& e) {
      s.fail("", e.what());
    }
    s.finish();
  }

  if (auto* t = section("sim")) {
    Section s(loc, "sim", *t);
    sc.sim.present = true;
    sc.sim.dt = s.num("dt");
    sc.sim.T = s.num("T");
    if (!(sc.sim.dt > 0)) s.fail("dt", "must be > 0");
    if (!(sc.sim.T > 0)) s.fail("T", "must be > 0");
    try {
      grid_steps(sc.sim.dt, sc.sim.T);
    } catch (const Error& e) {
      s.fail("T", e.what());
    }
    sc.sim.ref = s.num("ref", 1.0);
    if (sc.sim.ref == 0.0) s.fail("ref", "must be non-zero");
    if (s.has("disturbance_time")) {
      const double t_on = s.num("disturbance_time");
      if (!(t_on >= 0) || !(t_on < sc.sim.T)) s.fail("disturbance_time", "must lie in [0, T)");
      sc.sim.dist = DisturbanceProfile::step(t_on, s.num("disturbance_amplitude"));
    }
    sc.sim.band = s.num("band", 0.02);
    if (!(sc.sim.band > 0 && sc.sim.band < 1)) s.fail("band", "must lie in (0, 1)");
    s.finish();
  }

  if (auto* t = section("mse")) {
    Section s(loc, "mse", *t);
    sc.mse.present = true;
    try {
      sc.mse.grid = FreqGrid::make(s.num("lo", 0.1), s.num("hi", 1e4), s.integer("points_per_decade", 100));
    } catch (const Error& e) {
      s.fail("", e.what());
    }
    s.finish();
  }

  if (auto* t = section("freq")) {
    Section s(loc, "freq", *t);
    sc.freq.lo = s.num("lo", sc.freq.lo);
    sc.freq.hi = s.num("hi", sc.freq.hi);
    sc.freq.points_per_decade = s.integer("points_per_decade", sc.freq.points_per_decade);
    if (!(sc.freq.lo > 0) || !(sc.freq.hi > sc.freq.lo)) s.fail("hi", "need 0 < lo < hi");
    if (sc.freq.points_per_decade < 1) s.fail("points_per_decade", "must be >= 1");
    s.finish();
  }

  if (auto* t = section("sweep")) {
    Section s(loc, "sweep", *t);
    sc.sweep_k = s.list("K");
    for (double k : sc.sweep_k)
      if (!(k > 0)) s.fail("K", "multipliers must be > 0");
    s.finish();
  }

  static const std::set<std::string> known{"scenario", "plant", "sim", "mse", "freq", "sweep"};
  std::set<std::string> names;
  for (const auto& [name, sub] : tree) {
    if (known.count(name)) continue;
    if (name.rfind("design.", 0) != 0) loc.fail(name, "", "unknown section");
    const std::string dname = name.substr(7);
    if (dname.empty()) loc.fail(name, "", "design section needs a name, e.g. [design.ifo]");
    if (!names.insert(dname).second) loc.fail(name, "", "duplicate design name");
    sc.designs.push_back(parse_design(Section(loc, name, sub), dname, sc));
  }
  if (sc.designs.empty()) throw ConfigError(path + ": no [design.<name>] sections");
  return sc;
}

}  // namespace fradrc::cli
