#include "branchkit/mc.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <random>
#include <thread>

#include <boost/math/distributions/chi_squared.hpp>

#include "branchkit/error.hpp"
#include "branchkit/evolve.hpp"
#include "json.hpp"

namespace branchkit {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

std::uint64_t splitmix64(std::uint64_t x) {
  x += kGolden;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

using Engine = std::mt19937_64;

Engine replicate_engine(std::uint64_t seed, std::uint64_t i) {
  return Engine(splitmix64(seed + (i + 1) * kGolden));
}

// Uniform on (0, 1].
double uniform(Engine& e) { return (static_cast<double>(e() >> 11) + 1.0) * 0x1p-53; }

// Walker's alias table (Vose's construction), or the exact geometric mixture
// of a linear-fractional law.
class OffspringSampler {
 public:
  explicit OffspringSampler(const OffspringLaw& law) {
    if (law.kind() == LawKind::LinearFractional) {
      lf_ = true;
      p0_ = law.spec().p0;
      log_fail_ = law.spec().p < 1.0 ? std::log1p(-law.spec().p) : 0.0;
      return;
    }
    std::vector<double> p = law.sampling_table();
    const std::size_t n = p.size();
    double sum = 0.0;
    for (double v : p) sum += v;
    prob_.assign(n, 0.0);
    alias_.assign(n, 0);
    std::vector<double> scaled(n);
    std::vector<std::uint32_t> small, large;
    for (std::size_t i = 0; i < n; ++i) {
      scaled[i] = p[i] / sum * static_cast<double>(n);
      (scaled[i] < 1.0 ? small : large).push_back(static_cast<std::uint32_t>(i));
    }
    while (!small.empty() && !large.empty()) {
      const std::uint32_t s = small.back(), l = large.back();
      small.pop_back();
      prob_[s] = scaled[s];
      alias_[s] = l;
      scaled[l] -= 1.0 - scaled[s];
      if (scaled[l] < 1.0) {
        large.pop_back();
        small.push_back(l);
      }
    }
    for (auto i : large) prob_[i] = 1.0;
    for (auto i : small) prob_[i] = 1.0;
  }

  std::uint64_t operator()(Engine& e) const {
    if (lf_) {
      if (uniform(e) <= p0_) return 0;
      if (log_fail_ == 0.0) return 1;
      return 1 + static_cast<std::uint64_t>(std::floor(std::log(uniform(e)) / log_fail_));
    }
    const std::size_t i = static_cast<std::size_t>(e() % prob_.size());
    return uniform(e) <= prob_[i] ? i : alias_[i];
  }

 private:
  bool lf_ = false;
  double p0_ = 0.0, log_fail_ = 0.0;
  std::vector<double> prob_;
  std::vector<std::uint32_t> alias_;
};

enum class Status : std::uint8_t { Done, Censored, Extinct, Survived, Unresolved };

struct Path {
  std::uint64_t k;
  double time;
  Status status = Status::Done;
};

// Advances the race until `until`, extinction, the cap or the survival level.
void advance(Path& path, double until, double lambda, const OffspringSampler& nu, Engine& e,
             std::uint64_t cap, std::uint64_t survive_at = 0) {
  while (path.k > 0) {
    if (survive_at && path.k >= survive_at) {
      path.status = Status::Survived;
      return;
    }
    const double dt = -std::log(uniform(e)) / (static_cast<double>(path.k) * lambda);
    if (path.time + dt > until) {
      path.time = until;
      return;
    }
    path.time += dt;
    path.k = path.k - 1 + nu(e);
    if (path.k >= cap) {
      path.status = Status::Censored;
      return;
    }
  }
}

template <class Body>
void parallel_for(std::uint64_t n, unsigned threads, Body&& body) {
  threads = static_cast<unsigned>(std::max<std::uint64_t>(1, std::min<std::uint64_t>(threads, n)));
  if (threads == 1) {
    for (std::uint64_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  const std::uint64_t block = (n + threads - 1) / threads;
  for (unsigned w = 0; w < threads; ++w) {
    const std::uint64_t lo = w * block, hi = std::min(n, lo + block);
    if (lo >= hi) break;
    pool.emplace_back([&, lo, hi] {
      for (std::uint64_t i = lo; i < hi; ++i) body(i);
    });
  }
  for (auto& t : pool) t.join();
}

void validate(const SimConfig& c) {
  if (c.replicates < 1) fail(ErrorCode::Domain, "at least one replicate is required");
  if (c.population_cap < 1) fail(ErrorCode::Domain, "population cap must be at least 1");
  if (!(c.horizon >= 0.0) || !std::isfinite(c.horizon)) fail(ErrorCode::Domain, "horizon must be finite and >= 0");
}

std::vector<double> normalise(const std::vector<std::uint64_t>& counts, std::uint64_t total) {
  std::vector<double> h(counts.size(), 0.0);
  if (total == 0) return h;
  for (std::size_t k = 0; k < counts.size(); ++k) h[k] = static_cast<double>(counts[k]) / static_cast<double>(total);
  return h;
}

void add_count(std::vector<std::uint64_t>& counts, std::uint64_t k) {
  if (k >= counts.size()) counts.resize(k + 1, 0);
  ++counts[k];
}

SimStats summarise(const OffspringLaw& law, const SimConfig& c, const std::vector<std::uint64_t>& z,
                   const std::vector<Status>& status) {
  SimStats s;
  s.seed = c.seed;
  s.replicates = c.replicates;
  s.horizon = c.horizon;
  s.population_cap = c.population_cap;
  s.population_mean = std::isfinite(law.mean()) ? population_mean(c.horizon, law) : std::nan("");
  std::vector<std::uint64_t> cond;
  std::uint64_t ok = 0, alive = 0, cond_total = 0;
  double sum = 0.0, sum2 = 0.0;
  for (std::uint64_t i = 0; i < c.replicates; ++i) {
    if (status[i] == Status::Censored) {
      ++s.censored;
      ++alive;
      continue;
    }
    ++ok;
    add_count(s.counts, z[i]);
    const double v = static_cast<double>(z[i]);
    sum += v;
    sum2 += v * v;
    if (z[i] > 0) {
      ++alive;
      ++cond_total;
      add_count(cond, z[i]);
    }
  }
  s.histogram = normalise(s.counts, ok);
  cond.resize(std::max<std::size_t>(cond.size(), 1), 0);
  s.conditional_histogram = normalise(cond, cond_total);
  s.survival_frequency = static_cast<double>(alive) / static_cast<double>(c.replicates);
  if (ok > 0) {
    s.mean = sum / static_cast<double>(ok);
    s.variance = ok > 1 ? (sum2 - sum * s.mean) / static_cast<double>(ok - 1) : 0.0;
  }
  if (c.record_w && ok > 0 && std::isfinite(s.population_mean)) {
    s.w_mean = s.mean / s.population_mean;
    s.w_std_error = std::sqrt(s.variance / static_cast<double>(ok)) / s.population_mean;
    for (std::uint64_t i = 0; i < c.replicates && s.w_samples.size() < c.w_samples_kept; ++i)
      if (status[i] != Status::Censored) s.w_samples.push_back(static_cast<double>(z[i]) / s.population_mean);
  }
  if (s.censored * 100 > c.replicates) {
    s.warning = true;
    s.warning_message = "population cap reached in more than 1% of replicates";
  }
  return s;
}

}  // namespace

unsigned worker_threads(unsigned requested) {
  unsigned n = requested ? requested : std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("BRANCHKIT_THREADS")) {
    const long cap = std::strtol(env, nullptr, 10);
    if (cap >= 1) n = std::min<unsigned>(n, static_cast<unsigned>(cap));
  }
  return n;
}

SimStats simulate(const OffspringLaw& law, const SimConfig& c) {
  validate(c);
  const OffspringSampler nu(law);
  std::vector<std::uint64_t> z(c.replicates);
  std::vector<Status> status(c.replicates);
  parallel_for(c.replicates, worker_threads(c.threads), [&](std::uint64_t i) {
    Engine e = replicate_engine(c.seed, i);
    Path p{1, 0.0};
    advance(p, c.horizon, law.lambda(), nu, e, c.population_cap);
    z[i] = p.k;
    status[i] = p.status;
  });
  return summarise(law, c, z, status);
}

SimStats simulate_two_stage(const OffspringLaw& law, const SimConfig& c) {
  validate(c);
  const OffspringSampler nu(law);
  std::vector<std::uint64_t> z(c.replicates);
  std::vector<Status> status(c.replicates);
  parallel_for(c.replicates, worker_threads(c.threads), [&](std::uint64_t i) {
    Engine e = replicate_engine(c.seed, i);
    Path p{1, 0.0};
    advance(p, 0.5 * c.horizon, law.lambda(), nu, e, c.population_cap);
    if (p.status == Status::Done) {
      Path restart{p.k, 0.0};
      advance(restart, c.horizon - 0.5 * c.horizon, law.lambda(), nu, e, c.population_cap);
      p = restart;
    }
    z[i] = p.k;
    status[i] = p.status;
  });
  return summarise(law, c, z, status);
}

SimStats extinction_conditioned_sample(const OffspringLaw& law, const SimConfig& c) {
  validate(c);
  const FixedPoints fp = fixed_points(law);
  if (!(fp.q > 0.0 && fp.q < 1.0))
    fail(ErrorCode::Domain, "extinction conditioning needs a supercritical law with 0 < q < 1");
  if (!(c.t_max >= c.horizon)) fail(ErrorCode::Domain, "t_max must be at least the horizon");
  // Beyond this size the chance of later extinction, q^k, is below 1e-12.
  const auto survive_at = static_cast<std::uint64_t>(std::ceil(std::log(1e-12) / std::log(fp.q)));
  const OffspringSampler nu(law);
  std::vector<std::uint64_t> z(c.replicates);
  std::vector<Status> status(c.replicates);
  parallel_for(c.replicates, worker_threads(c.threads), [&](std::uint64_t i) {
    Engine e = replicate_engine(c.seed, i);
    Path p{1, 0.0};
    advance(p, c.horizon, law.lambda(), nu, e, c.population_cap);
    z[i] = p.k;
    if (p.status == Status::Done) advance(p, c.t_max, law.lambda(), nu, e, c.population_cap, survive_at);
    if (p.status == Status::Done) p.status = p.k == 0 ? Status::Extinct : Status::Unresolved;
    if (p.status == Status::Censored) p.status = Status::Survived;
    status[i] = p.status;
  });
  std::vector<Status> plain(c.replicates, Status::Done);
  SimStats s = summarise(law, c, z, plain);
  s.t_max = c.t_max;
  std::vector<std::uint64_t> cond;
  for (std::uint64_t i = 0; i < c.replicates; ++i) {
    switch (status[i]) {
      case Status::Extinct:
        ++s.extinct;
        add_count(cond, z[i]);
        break;
      case Status::Survived: ++s.survived; break;
      default: ++s.unresolved; break;
    }
  }
  s.extinction_conditioned_histogram = normalise(cond, s.extinct);
  s.extinction_frequency = static_cast<double>(s.extinct) / static_cast<double>(c.replicates);
  if (s.unresolved * 20 > c.replicates) {
    s.warning = true;
    s.warning_message = "more than 5% of paths unresolved at t_max";
  }
  return s;
}

std::string to_json(const SimStats& s) {
  nlohmann::json j;
  j["seed"] = s.seed;
  j["replicates"] = s.replicates;
  j["horizon"] = s.horizon;
  j["population_cap"] = s.population_cap;
  j["censored"] = s.censored;
  j["histogram"] = s.histogram;
  j["counts"] = s.counts;
  j["survival_frequency"] = s.survival_frequency;
  j["mean"] = s.mean;
  j["variance"] = s.variance;
  j["population_mean"] = s.population_mean;
  j["w_mean"] = s.w_mean;
  j["w_std_error"] = s.w_std_error;
  j["w_samples"] = s.w_samples;
  j["conditional_histogram"] = s.conditional_histogram;
  if (s.t_max > 0.0) {
    j["t_max"] = s.t_max;
    j["extinct"] = s.extinct;
    j["survived"] = s.survived;
    j["unresolved"] = s.unresolved;
    j["extinction_frequency"] = s.extinction_frequency;
    j["extinction_conditioned_histogram"] = s.extinction_conditioned_histogram;
  }
  j["warning"] = s.warning;
  if (s.warning) j["warning_message"] = s.warning_message;
  return j.dump(2);
}

namespace {

double chi2_p(double stat, int dof) {
  if (dof < 1) return 1.0;
  boost::math::chi_squared_distribution<double> d(dof);
  return boost::math::cdf(boost::math::complement(d, stat));
}

}  // namespace

ChiSquare chi_square_gof(const std::vector<std::uint64_t>& counts, const std::vector<double>& probs,
                         double min_expected) {
  double n = 0.0;
  for (auto v : counts) n += static_cast<double>(v);
  std::vector<std::pair<double, double>> bins;  // (observed, expected)
  double obs = 0.0, expct = 0.0, mass = 0.0;
  const std::size_t len = probs.size();
  for (std::size_t k = 0; k < len; ++k) {
    obs += k < counts.size() ? static_cast<double>(counts[k]) : 0.0;
    expct += n * probs[k];
    mass += probs[k];
    if (expct >= min_expected) {
      bins.emplace_back(obs, expct);
      obs = expct = 0.0;
    }
  }
  for (std::size_t k = len; k < counts.size(); ++k) obs += static_cast<double>(counts[k]);
  expct += n * std::max(0.0, 1.0 - mass);
  if (obs > 0.0 || expct > 0.0) {
    if (expct < min_expected && !bins.empty()) {
      bins.back().first += obs;
      bins.back().second += expct;
    } else {
      bins.emplace_back(obs, expct);
    }
  }
  ChiSquare r;
  for (auto [o, e] : bins)
    if (e > 0.0) r.statistic += (o - e) * (o - e) / e;
  r.dof = static_cast<int>(bins.size()) - 1;
  r.p_value = chi2_p(r.statistic, r.dof);
  return r;
}

ChiSquare chi_square_two_sample(const std::vector<std::uint64_t>& a,
                                const std::vector<std::uint64_t>& b, double min_count) {
  double A = 0.0, B = 0.0;
  for (auto v : a) A += static_cast<double>(v);
  for (auto v : b) B += static_cast<double>(v);
  if (A == 0.0 || B == 0.0) fail(ErrorCode::DegenerateInput, "empty sample");
  const double ka = std::sqrt(B / A), kb = std::sqrt(A / B);
  std::vector<std::pair<double, double>> bins;
  double x = 0.0, y = 0.0;
  for (std::size_t k = 0; k < std::max(a.size(), b.size()); ++k) {
    x += k < a.size() ? static_cast<double>(a[k]) : 0.0;
    y += k < b.size() ? static_cast<double>(b[k]) : 0.0;
    if (x + y >= min_count) {
      bins.emplace_back(x, y);
      x = y = 0.0;
    }
  }
  if (x + y > 0.0) {
    if (bins.empty()) {
      bins.emplace_back(x, y);
    } else {
      bins.back().first += x;
      bins.back().second += y;
    }
  }
  ChiSquare r;
  for (auto [u, v] : bins) r.statistic += (u * ka - v * kb) * (u * ka - v * kb) / (u + v);
  r.dof = static_cast<int>(bins.size()) - 1;
  r.p_value = chi2_p(r.statistic, r.dof);
  return r;
}

}  // namespace branchkit
