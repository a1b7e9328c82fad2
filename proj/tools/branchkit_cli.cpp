// branchkit command-line front end. Talks to the library only through the C API.

#include <openssl/evp.h>

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "branchkit/branchkit.h"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitNumerical = 3;

struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

int exit_code(bk_status s) {
  switch (s) {
    case BK_OK: return kExitOk;
    case BK_ERR_CONVERGENCE:
    case BK_ERR_UNDERFLOW:
    case BK_ERR_INTERNAL: return kExitNumerical;
    default: return kExitInput;
  }
}

struct BkFailure : std::runtime_error {
  bk_status status;
  BkFailure(bk_status s, const std::string& what) : std::runtime_error(what), status(s) {}
};

void check(bk_status s, const char* what) {
  if (s != BK_OK)
    throw BkFailure(s, std::string(what) + ": " + bk_status_string(s) + ": " + bk_last_error());
}

struct LawDeleter {
  void operator()(bk_law* l) const { bk_law_free(l); }
};
using LawPtr = std::unique_ptr<bk_law, LawDeleter>;

struct CString {
  char* p = nullptr;
  ~CString() { bk_free_string(p); }
  std::string str() const { return p ? std::string(p) : std::string(); }
};

std::string fmt17(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

// Shortest text that round-trips.
std::string fmt_short(double x) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return ec == std::errc() ? std::string(buf, end) : fmt17(x);
}

double parse_number(const std::string& s) {
  const char* b = s.data();
  const char* e = b + s.size();
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(b, e, v);
  if (ec != std::errc() || ptr != e) throw InputError("not a number: '" + s + "'");
  return v;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  return out;
}

// "start:stop:count", "log:start:stop:count", a comma-separated list, or one number.
std::vector<double> parse_grid(const std::string& text) {
  if (text.empty()) throw InputError("empty grid");
  const bool log = text.rfind("log:", 0) == 0;
  const std::string body = log ? text.substr(4) : text;
  if (body.find(':') == std::string::npos) {
    if (log) throw InputError("log grid needs start:stop:count");
    std::vector<double> v;
    for (const auto& part : split(body, ',')) v.push_back(parse_number(part));
    return v;
  }
  const auto parts = split(body, ':');
  if (parts.size() != 3) throw InputError("grid '" + text + "' must be start:stop:count");
  const double a = parse_number(parts[0]), b = parse_number(parts[1]);
  const double nd = parse_number(parts[2]);
  if (nd < 1 || nd != std::floor(nd) || nd > 1e6) throw InputError("grid count must be a positive integer");
  const auto n = static_cast<std::size_t>(nd);
  if (log && (a <= 0 || b <= 0)) throw InputError("log grid bounds must be positive");
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double w = n == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(n - 1);
    v[i] = log ? std::exp(std::log(a) + w * (std::log(b) - std::log(a))) : a + w * (b - a);
  }
  if (n > 1) v.back() = b;
  return v;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read law file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string sha256_hex(const std::string& data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr);
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned i = 0; i < len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 15]);
  }
  return out;
}

std::string utc_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Collects outputs; writes them to --out DIR with a manifest, or to stdout.
class Output {
 public:
  Output(std::string command, std::vector<std::string> argv) : command_(std::move(command)), argv_(std::move(argv)) {
    manifest_["started"] = utc_now();
  }

  void set_dir(const std::string& dir) { dir_ = dir; }
  void set_law(const std::string& path, const std::string& text) {
    manifest_["law_file"] = path;
    try {
      manifest_["law"] = json::parse(text);
    } catch (const json::exception&) {
      manifest_["law"] = text;
    }
  }
  void param(const std::string& key, json value) { manifest_["parameters"][key] = std::move(value); }
  void seed(std::uint64_t s) { manifest_["seed"] = s; }

  void emit(const std::string& name, const std::string& content) {
    if (dir_.empty()) {
      std::cout << content;
      if (!content.empty() && content.back() != '\n') std::cout << '\n';
      return;
    }
    const fs::path p = fs::path(dir_) / name;
    std::ofstream out(p, std::ios::binary);
    out << content;
    if (!out) throw InputError("cannot write '" + p.string() + "'");
    files_.push_back({{"file", name}, {"sha256", sha256_hex(content)}, {"bytes", content.size()}});
  }

  void finish(int code) {
    if (dir_.empty()) return;
    manifest_["command"] = command_;
    manifest_["argv"] = argv_;
    manifest_["tool"] = "branchkit";
    manifest_["version"] = bk_version();
    manifest_["finished"] = utc_now();
    manifest_["exit_code"] = code;
    const char* threads = std::getenv("BRANCHKIT_THREADS");
    manifest_["environment"]["BRANCHKIT_THREADS"] = threads ? json(threads) : json(nullptr);
    manifest_["outputs"] = files_;
    std::ofstream out(fs::path(dir_) / "manifest.json");
    out << manifest_.dump(2) << '\n';
  }

 private:
  std::string command_;
  std::vector<std::string> argv_;
  std::string dir_;
  json manifest_;
  json files_ = json::array();
};

std::string json_field(const json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return "none";
  const json& v = j[key];
  if (v.is_number()) return fmt_short(v.get<double>());
  if (v.is_boolean()) return v.get<bool>() ? "yes" : "no";
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

std::string verdict_field(const json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return "none";
  const json& v = j[key];
  const std::string s = v["sum_verdict"], i = v["integral_verdict"];
  return s == i ? s : s + "/" + i;
}

struct Common {
  std::string law_path;
  std::string out_dir;
};

LawPtr load_law(const Common& c, Output& out) {
  const std::string text = read_file(c.law_path);
  out.set_law(c.law_path, text);
  bk_law* raw = nullptr;
  check(bk_law_from_json(text.c_str(), &raw), "law");
  return LawPtr(raw);
}

void prepare_dir(Output& out, const Common& c) {
  if (c.out_dir.empty()) return;
  std::error_code ec;
  fs::create_directories(c.out_dir, ec);
  if (ec) throw InputError("cannot create output directory '" + c.out_dir + "'");
  out.set_dir(c.out_dir);
}

int cmd_classify(const Common& c, bool as_json, Output& out) {
  LawPtr law = load_law(c, out);
  CString js;
  check(bk_classify(law.get(), &js.p), "classify");
  const json j = json::parse(js.str());
  if (as_json) {
    out.emit("classify.json", j.dump(2) + "\n");
    return kExitOk;
  }
  std::ostringstream line;
  line << "q=" << json_field(j, "q") << " r=" << json_field(j, "r") << " m=" << json_field(j, "mean")
       << " regime=" << json_field(j, "regime") << " gamma=" << json_field(j, "gamma")
       << " beta=" << json_field(j, "beta") << " regular=" << json_field(j, "regular")
       << " xlogx_q=" << verdict_field(j, "xlogx_at_q") << " xlogx_r=" << verdict_field(j, "xlogx_at_r")
       << " pi_q_at_q_finite=" << json_field(j, "pi_q_at_q_finite");
  if (j.contains("pi_rq_at_r_finite")) line << " pi_rq_at_r_finite=" << json_field(j, "pi_rq_at_r_finite");
  line << '\n';
  out.emit("classify.txt", line.str());
  return kExitOk;
}

struct EvolveArgs {
  std::string t = "1";
  std::string s = "0:0.9:4";
  std::optional<std::size_t> dist;
  double tol = 1e-12;
  std::string route = "ode";
};

int cmd_evolve(const Common& c, const EvolveArgs& a, Output& out) {
  const std::vector<double> ts = parse_grid(a.t);
  for (double t : ts)
    if (!(t >= 0) || !std::isfinite(t)) throw InputError("times must be finite and non-negative");
  if (!(a.tol > 0)) throw InputError("--tol must be positive");
  LawPtr law = load_law(c, out);
  out.param("t", ts);
  out.param("tol", a.tol);
  int code = kExitOk;
  std::ostringstream csv;

  if (a.dist) {
    const std::size_t n = *a.dist;
    out.param("dist", n);
    csv << "t,k,probability,error_estimate,status\n";
    std::vector<double> coeffs(n + 1);
    for (double t : ts) {
      double err = 0.0;
      const bk_status st = bk_distribution(law.get(), t, n, a.tol, coeffs.data(), &err);
      if (st != BK_OK) {
        if (exit_code(st) == kExitInput) check(st, "distribution");
        std::cerr << "t=" << fmt17(t) << ": " << bk_last_error() << '\n';
        code = kExitNumerical;
        for (std::size_t k = 0; k <= n; ++k)
          csv << fmt17(t) << ',' << k << ",nan,nan," << bk_status_string(st) << '\n';
        continue;
      }
      for (std::size_t k = 0; k <= n; ++k)
        csv << fmt17(t) << ',' << k << ',' << fmt17(coeffs[k]) << ',' << fmt17(err) << ",ok\n";
    }
    out.emit("distribution.csv", csv.str());
    return code;
  }

  const std::vector<double> ss = parse_grid(a.s);
  for (double s : ss)
    if (!(s >= 0 && s <= 1)) throw InputError("s values must lie in [0, 1]");
  bk_route route = BK_ROUTE_ODE, check_route = BK_ROUTE_INVERSE;
  if (a.route == "series") route = BK_ROUTE_SERIES;
  else if (a.route == "inverse") route = BK_ROUTE_INVERSE, check_route = BK_ROUTE_ODE;
  else if (a.route != "ode") throw InputError("unknown route '" + a.route + "'");
  out.param("s", ss);
  out.param("route", a.route);

  csv << "t,s,F,one_minus_F,error_estimate,cross_route_residual,status\n";
  for (double t : ts)
    for (double s : ss) {
      bk_value v{};
      const bk_status st = bk_evolve(law.get(), route, t, s, a.tol, &v);
      if (st != BK_OK) {
        if (exit_code(st) == kExitInput) check(st, "evolve");
        std::cerr << "t=" << fmt17(t) << " s=" << fmt17(s) << ": " << bk_last_error() << '\n';
        code = kExitNumerical;
        csv << fmt17(t) << ',' << fmt17(s) << ",nan,nan,nan,nan," << bk_status_string(st) << '\n';
        continue;
      }
      // Integral inversion is undefined at the fixed points; fall back to the series route there.
      bk_value w{};
      bk_status cs = bk_evolve(law.get(), check_route, t, s, a.tol, &w);
      if (cs != BK_OK && check_route != BK_ROUTE_SERIES)
        cs = bk_evolve(law.get(), BK_ROUTE_SERIES, t, s, std::max(a.tol, 1e-12), &w);
      const double resid = cs == BK_OK ? std::abs(v.value - w.value) : NAN;
      csv << fmt17(t) << ',' << fmt17(s) << ',' << fmt17(v.value) << ',' << fmt17(v.complement) << ','
          << fmt17(v.error_estimate) << ',' << fmt17(resid) << ",ok\n";
    }
  out.emit("evolve.csv", csv.str());
  return code;
}

struct LimitsArgs {
  std::size_t order = 64;
  std::string t, theta, rho, y;
};

int cmd_limits(const Common& c, const LimitsArgs& a, Output& out) {
  json opts;
  opts["order"] = a.order;
  if (!a.t.empty()) opts["t"] = parse_grid(a.t);
  if (!a.theta.empty()) opts["theta"] = parse_grid(a.theta);
  if (!a.rho.empty()) opts["rho"] = parse_grid(a.rho);
  if (!a.y.empty()) opts["y"] = parse_grid(a.y);
  LawPtr law = load_law(c, out);
  for (auto& [k, v] : opts.items()) out.param(k, v);
  CString js;
  check(bk_limits(law.get(), opts.dump().c_str(), &js.p), "limits");
  out.emit("limits.json", js.str() + "\n");
  return kExitOk;
}

struct SimArgs {
  double t = 1.0;
  std::uint64_t reps = 10000;
  std::uint64_t seed = 1;
  std::uint64_t cap = 10'000'000;
  unsigned threads = 0;
  bool extinction = false;
  double t_max = 40.0;
};

int cmd_simulate(const Common& c, const SimArgs& a, Output& out) {
  if (!(a.t >= 0) || !std::isfinite(a.t)) throw InputError("--t must be finite and non-negative");
  if (a.reps == 0) throw InputError("--reps must be positive");
  LawPtr law = load_law(c, out);
  bk_sim_config cfg;
  bk_sim_config_default(&cfg);
  cfg.horizon = a.t;
  cfg.replicates = a.reps;
  cfg.seed = a.seed;
  cfg.population_cap = a.cap;
  cfg.threads = a.threads;
  cfg.extinction_conditioned = a.extinction ? 1 : 0;
  cfg.t_max = a.t_max;
  out.seed(a.seed);
  out.param("t", a.t);
  out.param("reps", a.reps);
  out.param("cap", a.cap);
  out.param("extinction_conditioned", a.extinction);
  if (a.extinction) out.param("t_max", a.t_max);
  CString js;
  check(bk_simulate(law.get(), &cfg, &js.p), "simulate");
  out.emit("simstats.json", js.str() + "\n");
  return kExitOk;
}

struct VerifyArgs {
  std::string suite = "all";
  std::uint64_t seed = 1;
  std::uint64_t reps = 100000;
  double t = 1.0;
};

int cmd_verify(const Common& c, const VerifyArgs& a, Output& out) {
  LawPtr law = load_law(c, out);
  json opts = {{"seed", a.seed}, {"reps", a.reps}, {"t", a.t}};
  out.seed(a.seed);
  out.param("suite", a.suite);
  out.param("reps", a.reps);
  out.param("t", a.t);
  CString js;
  int passed = 0;
  check(bk_verify(law.get(), a.suite.c_str(), opts.dump().c_str(), &js.p, &passed), "verify");
  const json rep = json::parse(js.str());
  std::ostringstream text;
  for (const auto& ch : rep["checks"]) {
    const char* tag = ch["skipped"].get<bool>() ? "SKIP" : ch["passed"].get<bool>() ? "PASS" : "FAIL";
    text << tag << "  " << ch["name"].get<std::string>() << "  value=" << json_field(ch, "value")
         << " threshold=" << json_field(ch, "threshold");
    if (ch.contains("detail")) text << "  (" << ch["detail"].get<std::string>() << ")";
    text << '\n';
  }
  text << (passed ? "all checks passed\n" : "some checks failed\n");
  out.emit("verify.txt", text.str());
  if (!c.out_dir.empty()) out.emit("verify.json", rep.dump(2) + "\n");
  return passed ? kExitOk : kExitNumerical;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"branchkit: tail generating functions for Markov branching processes"};
  app.set_version_flag("--version", std::string(bk_version()));
  app.require_subcommand(1);

  Common common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--law", common.law_path, "Law spec JSON file")->required();
    sub->add_option("--out", common.out_dir, "Write outputs and manifest.json to this directory");
  };

  bool classify_json = false;
  auto* classify = app.add_subcommand("classify", "Fixed points, regime, gamma, beta and x log x flags");
  add_common(classify);
  classify->add_flag("--json", classify_json, "Print the full JSON report");

  EvolveArgs ev;
  auto* evolve = app.add_subcommand("evolve", "F_t(s) table, or P(Z_t = k) with --dist");
  add_common(evolve);
  evolve->add_option("--t", ev.t, "Time grid");
  evolve->add_option("--s", ev.s, "Argument grid in [0, 1]");
  evolve->add_option("--dist", ev.dist, "Emit P(Z_t = k) for k = 0..N instead");
  evolve->add_option("--tol", ev.tol, "Tolerance");
  evolve->add_option("--route", ev.route, "ode, series or inverse");

  LimitsArgs li;
  auto* limits = app.add_subcommand("limits", "Regime-appropriate limit laws as JSON");
  add_common(limits);
  limits->add_option("--order", li.order, "Series order of limit pgfs");
  limits->add_option("--t", li.t, "Time grid for finite-t comparison");
  limits->add_option("--theta", li.theta, "Laplace arguments (critical)");
  limits->add_option("--rho", li.rho, "Laplace arguments of W (supercritical)");
  limits->add_option("--y", li.y, "Grid for V(y) (critical, alpha = 0)");

  SimArgs si;
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo SimStats JSON");
  add_common(simulate);
  simulate->add_option("--t", si.t, "Horizon");
  simulate->add_option("--reps", si.reps, "Replicates");
  simulate->add_option("--seed", si.seed, "Seed");
  simulate->add_option("--cap", si.cap, "Population cap");
  simulate->add_option("--threads", si.threads, "Worker threads (0: all, capped by BRANCHKIT_THREADS)");
  simulate->add_flag("--extinction-conditioned", si.extinction, "Keep only paths that die out");
  simulate->add_option("--t-max", si.t_max, "Horizon for extinction-conditioned runs");

  VerifyArgs ve;
  auto* verify = app.add_subcommand("verify", "Run an invariant suite; exit 0 iff all pass");
  add_common(verify);
  verify->add_option("--suite", ve.suite, "semigroup, refined-equation, route-agreement, mc-agreement or all");
  verify->add_option("--seed", ve.seed, "Seed for the Monte Carlo suite");
  verify->add_option("--reps", ve.reps, "Replicates for the Monte Carlo suite");
  verify->add_option("--t", ve.t, "Horizon for the Monte Carlo suite");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitInput;
  }

  CLI::App* sub = app.get_subcommands().front();
  Output out(sub->get_name(), std::vector<std::string>(argv, argv + argc));
  int code = kExitOk;
  try {
    prepare_dir(out, common);
    if (sub == classify) code = cmd_classify(common, classify_json, out);
    else if (sub == evolve) code = cmd_evolve(common, ev, out);
    else if (sub == limits) code = cmd_limits(common, li, out);
    else if (sub == simulate) code = cmd_simulate(common, si, out);
    else code = cmd_verify(common, ve, out);
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    code = kExitInput;
  } catch (const BkFailure& e) {
    std::cerr << "error: " << e.what() << '\n';
    code = exit_code(e.status);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    code = kExitNumerical;
  }
  try {
    out.finish(code);
  } catch (const std::exception& e) {
    std::cerr << "error: manifest: " << e.what() << '\n';
  }
  return code;
}
