// Acceptance runner: one PASS/FAIL line per criterion, exit 2 if any fails.

#include <algorithm>
#include <atomic>
#include <bit>
#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <iostream>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "pfdim/pfdim.hpp"

using namespace pfdim;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

struct Config {
  unsigned workers = 8;
  std::uint64_t seed = 20240601;
};

class Failures {
 public:
  void add(const std::string& what) {
    std::lock_guard<std::mutex> lock(mutex_);
    if (count_++ < 5) first_.push_back(what);
  }
  std::size_t count() const { return count_; }
  std::string summary() const {
    std::string s = std::to_string(count_) + " failures";
    for (const auto& f : first_) s += "; " + f;
    return s;
  }

 private:
  mutable std::mutex mutex_;
  std::size_t count_ = 0;
  std::vector<std::string> first_;
};

// Runs body(i) for i in [0, n) on the given number of threads.
void parallel_for(std::size_t n, unsigned workers, const std::function<void(std::size_t)>& body) {
  std::atomic<std::size_t> next{0};
  auto run = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < n;) body(i);
  };
  std::vector<std::thread> threads;
  for (unsigned w = 1; w < std::max(1u, workers); ++w) threads.emplace_back(run);
  run();
  for (auto& t : threads) t.join();
}

std::string join_atoms(const std::vector<StandardAtom>& atoms) {
  std::string s;
  for (const auto& a : atoms) s += (s.empty() ? "" : " & ") + render_atom(a);
  return s;
}

// ---------------------------------------------------------------- abelian

struct GridPoint {
  unsigned p, n, m;
};

std::vector<GridPoint> abelian_grid() {
  std::vector<GridPoint> grid;
  for (unsigned p : {2u, 3u}) {
    for (unsigned n : {1u, 2u, 3u}) {
      for (unsigned m : {1u, 2u}) grid.push_back({p, n, m});
    }
  }
  return grid;
}

// k*x + c*y up to overall sign, kinds {t = 0, p | t, p^2 | t}, each possibly negated.
std::vector<StandardAtom> atom_pool(unsigned p) {
  std::vector<StandardAtom> pool;
  for (long long k = -4; k <= 4; ++k) {
    for (long long c = -4; c <= 4; ++c) {
      if (k < 0 || (k == 0 && c <= 0)) continue;
      const LinearTerm t{{k}, {c}};
      for (bool neg : {false, true}) {
        pool.push_back(StandardAtom::eq(t, neg));
        pool.push_back(StandardAtom::div(p, 1, t, neg));
        pool.push_back(StandardAtom::div(p, 2, t, neg));
      }
    }
  }
  return pool;
}

using Bits = std::vector<std::uint64_t>;

// Truth table of an atom over x in G for a fixed parameter, evaluated coordinatewise.
Bits atom_bits(const StandardAtom& a, const Homocyclic& g, const GroupElement& y) {
  const std::uint64_t order = g.order().convert_to<std::uint64_t>();
  const long long mod = static_cast<long long>(g.modulus());
  Bits bits((order + 63) / 64, 0);
  for (std::uint64_t id = 0; id < order; ++id) {
    const auto x = g.element(id);
    bool zero = true, divisible = true;
    for (unsigned j = 0; j < g.m(); ++j) {
      long long t = (a.term.x[0] * static_cast<long long>(x[j]) + a.term.y[0] * static_cast<long long>(y[j])) % mod;
      if (t < 0) t += mod;
      zero = zero && t == 0;
      if (a.kind == AtomKind::Div) divisible = divisible && t % static_cast<long long>(g.p_pow(a.ell)) == 0;
    }
    const bool holds = (a.kind == AtomKind::Eq ? zero : divisible) != a.negated;
    if (holds) bits[id / 64] |= std::uint64_t{1} << (id % 64);
  }
  return bits;
}

std::uint64_t popcount_and(const Bits* a, const Bits* b, const Bits* c) {
  std::uint64_t total = 0;
  for (std::size_t w = 0; w < a->size(); ++w) {
    std::uint64_t v = (*a)[w];
    if (b) v &= (*b)[w];
    if (c) v &= (*c)[w];
    total += static_cast<std::uint64_t>(std::popcount(v));
  }
  return total;
}

Outcome criterion1(const Config& cfg) {
  const auto start = std::chrono::steady_clock::now();
  Failures failures;
  std::uint64_t checked = 0, engine_checked = 0;
  std::mt19937_64 rng(cfg.seed ^ 0xa1);
  for (const auto& gp : abelian_grid()) {
    const Homocyclic g(gp.p, gp.n, gp.m);
    const auto order = g.order().convert_to<std::uint64_t>();
    const auto pool = atom_pool(gp.p);
    const std::size_t a = pool.size();
    // y = 0 for every conjunction, plus one of three random parameters.
    std::vector<GroupElement> ys{GroupElement(gp.m, 0)};
    for (int i = 0; i < 3; ++i) ys.push_back(g.element(rng() % order));
    std::vector<std::vector<Bits>> bits(ys.size());
    for (std::size_t yi = 0; yi < ys.size(); ++yi) {
      for (const auto& atom : pool) bits[yi].push_back(atom_bits(atom, g, ys[yi]));
    }
    std::atomic<std::uint64_t> local{0};
    parallel_for(a, cfg.workers, [&](std::size_t i) {
      std::vector<StandardAtom> conj;
      std::vector<GroupElement> params(1);
      std::uint64_t n_checked = 0;
      auto check = [&](std::size_t j, std::size_t l, std::size_t size) {
        conj.resize(size);
        conj[0] = pool[i];
        if (size > 1) conj[1] = pool[j];
        if (size > 2) conj[2] = pool[l];
        const std::size_t code = (i * a + j) * a + l;
        for (std::size_t yi : {std::size_t{0}, 1 + code % 3}) {
          params[0] = ys[yi];
          const auto want = popcount_and(&bits[yi][i], size > 1 ? &bits[yi][j] : nullptr, size > 2 ? &bits[yi][l] : nullptr);
          const auto got = exact_count(conj, params, g).value;
          if (got != want) {
            failures.add("G(" + std::to_string(gp.p) + "," + std::to_string(gp.n) + "," + std::to_string(gp.m) + ") " +
                         join_atoms(conj) + ": " + to_string(got) + " vs " + std::to_string(want));
          }
          ++n_checked;
        }
      };
      check(0, 0, 1);
      for (std::size_t j = i + 1; j < a; ++j) {
        check(j, 0, 2);
        for (std::size_t l = j + 1; l < a; ++l) check(j, l, 3);
      }
      local += n_checked;
    });
    checked += local;
    // The general engine and the library brute force on a random sample.
    const auto structure = make_homocyclic(gp.p, gp.n, gp.m);
    for (int t = 0; t < 150; ++t) {
      std::vector<StandardAtom> conj;
      const std::size_t size = 1 + rng() % 3;
      for (std::size_t i = 0; i < size; ++i) conj.push_back(pool[rng() % a]);
      const GroupElement y = g.element(rng() % order);
      const auto want = brute_force_count(conj, 1, {y}, g).value;
      Assignment asg;
      asg.set("y1", "G", homocyclic_id(y, g));
      EngineOptions opt;
      opt.workers = 1;
      const auto engine = count(atoms_to_formula(conj, g), structure, asg, {"x1:G"}, opt).value;
      const auto exact = exact_count(conj, {y}, g).value;
      if (engine != want || exact != want) failures.add("sample " + join_atoms(conj) + " disagrees with brute force");
      ++engine_checked;
    }
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::ostringstream d;
  d << checked << " conjunction/parameter cases, " << engine_checked << " engine samples, " << failures.count() << " mismatches, "
    << secs << " s";
  if (failures.count()) d << "; " << failures.summary();
  if (secs >= 120) d << "; runtime over 120 s";
  return {failures.count() == 0 && secs < 120, d.str()};
}

Outcome criterion2(const Config& cfg) {
  std::mt19937_64 rng(cfg.seed ^ 0xb2);
  Failures failures;
  std::size_t cases = 0;
  const auto grid = abelian_grid();
  for (int t = 0; t < 600; ++t) {
    const unsigned prime = t % 2 ? 3 : 2;
    const auto pool = atom_pool(prime);
    std::vector<StandardAtom> atoms;
    const std::size_t size = 1 + rng() % 3;
    for (std::size_t i = 0; i < size; ++i) atoms.push_back(pool[rng() % pool.size()]);
    const auto res = symbolic_count(atoms, 1, 1);
    for (const auto& gp : grid) {
      const Homocyclic g(gp.p, gp.n, gp.m);
      const GroupElement y = g.element(rng() % g.order().convert_to<std::uint64_t>());
      const auto fire = res.firing(g, {y});
      ++cases;
      if (fire.size() != 1) {
        failures.add(join_atoms(atoms) + ": " + std::to_string(fire.size()) + " guards fire");
        continue;
      }
      const auto value = evaluate_poly(res.entries[fire[0]].poly, g.p(), g.m(), g.n()).value;
      const auto want = brute_force_count(atoms, 1, {y}, g).value;
      if (value != want) failures.add(join_atoms(atoms) + ": polynomial " + to_string(value) + " vs " + to_string(want));
    }
  }
  std::ostringstream d;
  d << cases << " seeded cases, " << failures.count() << " failures";
  if (failures.count()) d << "; " << failures.summary();
  return {failures.count() == 0 && cases >= 500, d.str()};
}

// ---------------------------------------------------------------- vector spaces

std::vector<FieldVector> decode_tuple(std::uint64_t code, std::size_t len, unsigned q, unsigned dim, std::uint64_t vs) {
  std::vector<FieldVector> out;
  for (std::size_t i = 0; i < len; ++i) {
    out.push_back(vector_from_id(code % vs, q, dim));
    code /= vs;
  }
  return out;
}

Outcome criterion3(const Config& cfg) {
  std::mt19937_64 rng(cfg.seed ^ 0xc3);
  Failures failures;
  std::size_t complement = 0, theta = 0, cosets = 0;
  auto poly_ok = [](const VFPolynomial& poly, const BigInt& value, std::uint64_t vs, unsigned q) {
    return poly.evaluate(BigInt(vs), BigInt(q)) == Rational(value);
  };
  for (unsigned q : {2u, 3u}) {
    const FiniteField f(q);
    for (unsigned dim : {2u, 3u, 4u}) {
      const auto vs = pow(BigInt(q), dim).convert_to<std::uint64_t>();
      const std::string where = " (q=" + std::to_string(q) + ", dim=" + std::to_string(dim) + ")";
      // Complement of a span of up to two generators, every generator tuple.
      for (std::size_t s = 0; s <= 2; ++s) {
        const std::uint64_t tuples = static_cast<std::uint64_t>(std::pow(vs, s));
        for (std::uint64_t code = 0; code < tuples; ++code) {
          const CosetCountSpec spec{{}, {{FieldVector(dim, 0), decode_tuple(code, s, q, dim, vs)}}};
          const auto c = count_coset_difference(f, dim, spec);
          ++complement;
          if (c.count.value != brute_force_coset_difference(f, dim, spec).value || !poly_ok(c.poly, c.count.value, vs, q)) {
            failures.add("complement-of-span" + where);
          }
        }
      }
      // Theta shapes with m + m' <= 2, every parameter tuple; both disjuncts checked separately.
      for (std::size_t m = 0; m <= 2; ++m) {
        for (std::size_t mp = 0; m + mp <= 2; ++mp) {
          if (m + mp == 0) continue;
          VectorTermSpec spec;
          for (std::size_t i = 0; i < m + mp; ++i) {
            std::vector<unsigned> c(m + mp, 0);
            c[i] = 1;
            (i < m ? spec.w : spec.w_prime).push_back(c);
          }
          const std::uint64_t tuples = static_cast<std::uint64_t>(std::pow(vs, m + mp));
          for (std::uint64_t code = 0; code < tuples; ++code) {
            const auto params = decode_tuple(code, m + mp, q, dim, vs);
            const auto t = count_theta_case(f, dim, spec, params);
            BigInt first = 0, second = 0;
            for (std::uint64_t u = 0; u < vs; ++u) {
              const FieldVector uv = vector_from_id(u, q, dim);
              std::vector<FieldVector> args;
              for (std::size_t i = 0; i < m; ++i) args.push_back(vec_add(f, uv, params[i]));
              for (std::size_t i = m; i < m + mp; ++i) args.push_back(params[i]);
              if (span_rank(f, args) != args.size()) continue;
              std::vector<FieldVector> with_u = params;
              const std::size_t base = span_rank(f, params);
              with_u.push_back(uv);
              (span_rank(f, with_u) == base ? second : first) += 1;
            }
            ++theta;
            // With m = 0 the set is V or empty and is not split into disjuncts.
            const bool split_ok = m == 0 || (t.first.value == first && t.second.value == second &&
                                             poly_ok(t.first_poly, first, vs, q) && poly_ok(t.second_poly, second, vs, q));
            const bool ok = split_ok && t.total.value == first + second && poly_ok(t.poly, first + second, vs, q);
            if (!ok) failures.add("theta m=" + std::to_string(m) + " m'=" + std::to_string(mp) + where);
          }
        }
      }
      // Coset differences with l <= 2 included and k <= 2 excluded cosets, seeded.
      for (std::size_t l = 0; l <= 2; ++l) {
        for (std::size_t k = 0; k <= 2; ++k) {
          for (int trial = 0; trial < 60; ++trial) {
            auto coset = [&] {
              AffineCoset c{vector_from_id(rng() % vs, q, dim), {}};
              const std::size_t s = rng() % (dim + 1);
              for (std::size_t i = 0; i < s; ++i) c.span.push_back(vector_from_id(rng() % vs, q, dim));
              return c;
            };
            CosetCountSpec spec;
            for (std::size_t i = 0; i < l; ++i) spec.include.push_back(coset());
            for (std::size_t i = 0; i < k; ++i) spec.exclude.push_back(coset());
            const auto c = count_coset_difference(f, dim, spec);
            ++cosets;
            if (c.count.value != brute_force_coset_difference(f, dim, spec).value || !poly_ok(c.poly, c.count.value, vs, q)) {
              failures.add("coset difference l=" + std::to_string(l) + " k=" + std::to_string(k) + where);
            }
          }
        }
      }
    }
  }
  std::ostringstream d;
  d << complement << " complement-of-span, " << theta << " theta, " << cosets << " coset-difference cases, " << failures.count()
    << " mismatches";
  if (failures.count()) d << "; " << failures.summary();
  return {failures.count() == 0, d.str()};
}

// ---------------------------------------------------------------- dimension

Outcome criterion4(const Config& cfg) {
  std::vector<std::string> bad;
  EngineOptions opt;
  opt.workers = cfg.workers;
  auto parse_in = [](const FamilyHandle& fam, const std::string& text) {
    return parse_formula_or_throw(text, fam.blocks(2).signature());
  };
  {
    FamilyHandle fam("stablenonattainability");
    const auto f = parse_in(fam, "E(x,y)");
    for (int t = 1; t <= 2; ++t) {
      const auto a = count_family(f, fam, {8, 16, 32, 64}, {{"y", "class-rank-" + std::to_string(t)}}, {"x"}, opt);
      const auto b = count_family(f, fam, {8, 16, 32, 64}, {{"y", "class-rank-" + std::to_string(t + 1)}}, {"x"}, opt);
      const auto v = delta_compare(a, b);
      if (v.classification != DeltaClass::Greater) bad.push_back("(a) t=" + std::to_string(t) + " gave " + to_string(v.classification));
    }
  }
  {
    FamilyHandle fam("convsupersimple");
    std::vector<ChainStep> steps;
    for (int i = 1; i <= 4; ++i) steps.push_back({parse_in(fam, "P" + std::to_string(i) + "(x)"), {}});
    const auto r = chain_detect(steps, fam, {8, 16, 32, 64}, {"x"}, {}, opt);
    if (r.length != 4 || !r.monotone) bad.push_back("(b) chain length " + std::to_string(r.length));
  }
  {
    FamilyHandle fam("findelta");
    SpectrumOptions sopt;
    sopt.parameters = {"y"};
    const auto r = fmv_spectrum(parse_in(fam, "E(x,y)"), fam, {4, 6, 8}, sopt, {}, opt);
    if (r.cluster_counts != std::vector<std::size_t>{4, 6, 8} || !r.unbounded) bad.push_back("(c) cluster counts differ");
  }
  {
    FamilyHandle fam("rank2classes");
    const auto d = parse_in(fam, "x = x");
    const auto x = parse_in(fam, "E(x,y)");
    for (const auto& [index, ratio] : mu_D_sequence(fam, d, x, {2, 3, 4, 8, 16, 100}, {"x"}, {{"y", "big-class"}}, opt)) {
      if (ratio != Rational(1, 2)) bad.push_back("(d) index " + std::to_string(index) + " gave " + to_string(ratio));
    }
  }
  std::string detail = "(a) greater for t=1,2; (b) length 4; (c) clusters 4,6,8 unbounded; (d) mu = 1/2";
  if (!bad.empty()) {
    detail.clear();
    for (const auto& b : bad) detail += (detail.empty() ? "" : "; ") + b;
  }
  return {bad.empty(), detail};
}

// ---------------------------------------------------------------- measure

FiniteMeasureSpace random_space(std::mt19937_64& rng, std::size_t atoms) {
  std::vector<long long> raw;
  long long total = 0;
  for (std::size_t a = 0; a < atoms; ++a) {
    raw.push_back(1 + static_cast<long long>(rng() % 30));
    total += raw.back();
  }
  std::vector<Rational> weights;
  for (auto r : raw) weights.push_back(Rational(r, total));
  return FiniteMeasureSpace(weights);
}

// An event of measure at least eps: random atoms until eps is reached, then extras.
Event random_event(std::mt19937_64& rng, const FiniteMeasureSpace& s, const Rational& eps) {
  std::vector<std::size_t> order(s.atoms());
  for (std::size_t a = 0; a < order.size(); ++a) order[a] = a;
  std::shuffle(order.begin(), order.end(), rng);
  Event e(s.atoms());
  std::size_t i = 0;
  while (s.measure(e) < eps) e.insert(order[i++]);
  for (; i < order.size(); ++i) {
    if (rng() % 4 == 0) e.insert(order[i]);
  }
  return e;
}

Outcome criterion5(const Config& cfg) {
  std::mt19937_64 rng(cfg.seed ^ 0xd5);
  Failures failures;
  const std::vector<Rational> eps_values{Rational(1, 2), Rational(1, 3), Rational(1, 4), Rational(1, 5)};
  std::size_t kcap = 0, pairwise = 0;
  KIntersectionOptions kopt;
  kopt.workers = cfg.workers;
  for (int t = 0; t < 1000; ++t) {
    const auto space = random_space(rng, 1 + rng() % 20);
    const unsigned k = 1 + static_cast<unsigned>(t % 4);
    const Rational eps = eps_values[rng() % eps_values.size()];
    const std::size_t n = *minimal_certified_events(k, eps) + rng() % 4;
    std::vector<Event> events;
    for (std::size_t i = 0; i < n; ++i) events.push_back(random_event(rng, space, eps));
    try {
      kopt.force_recursive = t % 3 == 0;
      const auto r = find_k_intersection(space, events, k, eps, kopt);
      const Rational bound = pow(eps, static_cast<unsigned>(std::pow(3, k - 1)));
      const bool ok = r.status == KIntersectionStatus::Found && r.indices.size() == k && r.bound == bound &&
                      mu(space, detail::intersect(space, events, r.indices)) == r.measure && r.measure >= bound;
      if (!ok) failures.add("k=" + std::to_string(k) + " eps=" + to_string(eps) + " N=" + std::to_string(n));
    } catch (const Error& e) {
      failures.add(std::string("k-intersection threw: ") + e.what());
    }
    ++kcap;
    for (const Rational& pe : {Rational(1, 2), Rational(1, 3), Rational(1, 4)}) {
      std::vector<Event> ev;
      for (std::size_t i = 0; i < pairwise_threshold(pe); ++i) ev.push_back(random_event(rng, space, pe));
      try {
        const auto r = pairwise_threshold_check(space, ev, pe);
        const auto tie = truncated_inclusion_exclusion(space, ev);
        const bool dagger = tie.holds && tie.union_measure >= tie.singles - tie.pairs;
        if (!r.ok || !r.dagger.holds || !dagger) failures.add("pairwise eps=" + to_string(pe));
      } catch (const Error& e) {
        failures.add(std::string("pairwise threw: ") + e.what());
      }
      ++pairwise;
    }
  }
  std::ostringstream d;
  d << kcap << " k-intersection and " << pairwise << " pairwise cases, " << failures.count() << " failures";
  if (failures.count()) d << "; " << failures.summary();
  return {failures.count() == 0, d.str()};
}

// ---------------------------------------------------------------- engine laws

Outcome criterion6(const Config& cfg) {
  std::mt19937_64 rng(cfg.seed ^ 0xe6);
  Failures failures;
  const std::vector<unsigned> worker_counts{1, 2, 8};
  RandomFormulaOptions both, only_x, only_y;
  both.max_depth = 3;
  only_x.max_depth = only_y.max_depth = 2;
  only_x.max_quantifiers = only_y.max_quantifiers = 0;
  only_x.variables = {{"x", "S"}};
  only_y.variables = {{"y", "S"}};
  const std::vector<std::string> xy{"x:S", "y:S"};
  for (int t = 0; t < 500; ++t) {
    const auto m = random_structure(rng);
    const BigInt size = m.sort_size(*m.signature().find_sort("S"));
    const auto phi = random_formula(rng, both);
    const auto psi = random_formula(rng, both);
    const auto a = random_formula(rng, only_x);
    const auto b = random_formula(rng, only_y);
    auto n = [&](const Formula& f, const Assignment& fixed, const std::vector<std::string>& vars, unsigned workers = 1) {
      EngineOptions opt;
      opt.workers = workers;
      return count(f, m, fixed, vars, opt).value;
    };
    const std::string tag = "case " + std::to_string(t) + " (|S|=" + to_string(size) + ")";
    try {
      const BigInt np = n(phi, {}, xy);
      for (unsigned w : worker_counts) {
        if (w != 1 && n(phi, {}, xy, w) != np) failures.add(tag + ": count differs at " + std::to_string(w) + " workers");
      }
      const BigInt nq = n(psi, {}, xy);
      const BigInt nor = n(Formula::disj(phi, psi), {}, xy, worker_counts[t % 3]);
      const BigInt nand = n(Formula::conj(phi, psi), {}, xy, worker_counts[(t + 1) % 3]);
      if (nor != np + nq - nand) failures.add(tag + ": inclusion-exclusion");
      if (n(Formula::negate(phi), {}, xy) != size * size - np) failures.add(tag + ": complement");
      if (n(Formula::conj(a, b), {}, xy) != n(a, {}, {"x:S"}) * n(b, {}, {"y:S"})) failures.add(tag + ": product");
      BigInt fiber_sum = 0;
      for (ElementId e = 0; e < size; ++e) {
        Assignment fixed;
        fixed.set("x", "S", e);
        fiber_sum += n(phi, fixed, {"y:S"});
      }
      if (fiber_sum != np) failures.add(tag + ": Fubini");
    } catch (const Error& e) {
      failures.add(tag + ": " + e.what());
    }
  }
  std::ostringstream d;
  d << "500 formula/structure pairs, workers {1,2,8}, " << failures.count() << " failures";
  if (failures.count()) d << "; " << failures.summary();
  return {failures.count() == 0, d.str()};
}

// ---------------------------------------------------------------- word maps

std::vector<std::uint32_t> brute_triple(const std::vector<std::uint32_t>& x, const FiniteGroup& g) {
  std::vector<char> hit(g.order(), 0);
  for (auto a : x) {
    for (auto b : x) {
      for (auto c : x) hit[g.mul(g.mul(a, b), c)] = 1;
    }
  }
  std::vector<std::uint32_t> gap;
  for (std::uint32_t e = 0; e < g.order(); ++e) {
    if (!hit[e]) gap.push_back(e);
  }
  return gap;
}

Outcome criterion7(const Config& cfg) {
  std::vector<std::string> bad;
  const auto a5 = named_group("A5");
  const auto square = parse_word("x^2");
  EngineOptions one;
  one.workers = 1;
  const auto squares = word_image(square, a5, one);
  if (squares.size() != 45) bad.push_back("|x^2(A5)| = " + std::to_string(squares.size()));
  const auto want_gap = brute_triple(squares, a5);
  for (unsigned workers : {1u, 2u, cfg.workers}) {
    EngineOptions opt;
    opt.workers = workers;
    for (std::uint64_t s = 0; s < 5; ++s) {
      std::mt19937_64 rng(cfg.seed + s);
      auto x1 = word_image(square, a5, opt), x2 = x1, x3 = x1;
      if (x1 != squares) bad.push_back("image differs at " + std::to_string(workers) + " workers");
      std::shuffle(x1.begin(), x1.end(), rng);
      std::shuffle(x2.begin(), x2.end(), rng);
      std::shuffle(x3.begin(), x3.end(), rng);
      const auto r = triple_product_covers(x1, x2, x3, a5);
      if (r.covers != want_gap.empty() || r.gap != want_gap) bad.push_back("triple product verdict differs from brute force");
    }
  }
  const auto s3 = named_group("S3");
  const auto commutators = word_image(parse_word("[x,y]"), s3);
  std::vector<std::uint32_t> order3;
  for (std::uint32_t a = 0; a < s3.order(); ++a) {
    if (s3.mul(s3.mul(a, a), a) == s3.identity()) order3.push_back(a);
  }
  if (commutators != order3 || commutators.size() != 3) bad.push_back("[x,y](S3) is not the order-3 subgroup");
  std::string detail = "|x^2(A5)| = 45, triple product " + std::string(want_gap.empty() ? "covers" : "leaves a gap") +
                       " (matches brute force), [x,y](S3) = A3";
  if (!bad.empty()) {
    detail.clear();
    for (const auto& b : bad) detail += (detail.empty() ? "" : "; ") + b;
  }
  return {bad.empty(), detail};
}

// ---------------------------------------------------------------- parser

Outcome criterion8(const Config& cfg) {
  std::mt19937_64 rng(cfg.seed ^ 0xf8);
  const Signature sig = random_test_signature();
  std::size_t crashes = 0, parsed = 0, diagnosed = 0;
  const std::string alphabet = "PEQfgcdxyz0123456789()!&|-><=,:.AEexistsforall \t\n~^#@";
  for (int t = 0; t < 100000; ++t) {
    std::string text;
    if (t % 3 == 2) {
      // A few byte edits of a well-formed formula.
      text = render_formula(random_formula(rng));
      const int edits = 1 + static_cast<int>(rng() % 3);
      for (int e = 0; e < edits && !text.empty(); ++e) {
        const std::size_t at = rng() % text.size();
        switch (rng() % 3) {
          case 0: text.erase(at, 1); break;
          case 1: text.insert(text.begin() + static_cast<std::ptrdiff_t>(at), alphabet[rng() % alphabet.size()]); break;
          default: text[at] = static_cast<char>(rng() % 256);
        }
      }
    } else {
      text.assign(rng() % 48, '\0');
      const bool raw = t % 3 == 0;
      for (auto& ch : text) ch = raw ? static_cast<char>(rng() % 256) : alphabet[rng() % alphabet.size()];
    }
    try {
      const auto r = parse_formula(text, sig);
      if (r.formula) {
        ++parsed;
      } else if (r.diagnostic) {
        ++diagnosed;
      } else {
        ++crashes;
      }
    } catch (...) {
      ++crashes;
    }
  }
  std::size_t roundtrip_failures = 0;
  ParseOptions popt;
  popt.free_sorts = {{"x", "S"}, {"y", "S"}};
  for (int t = 0; t < 1000; ++t) {
    const auto f = random_formula(rng);
    try {
      const auto text = render_formula(f);
      const auto back = parse_formula_or_throw(text, sig, popt);
      if (!(back == f) || render_formula(back) != text) ++roundtrip_failures;
    } catch (const Error&) {
      ++roundtrip_failures;
    }
  }
  std::ostringstream d;
  d << "100000 fuzz inputs (" << diagnosed << " diagnostics, " << parsed << " parsed, " << crashes << " crashes); 1000 roundtrips, "
    << roundtrip_failures << " failures";
  return {crashes == 0 && roundtrip_failures == 0, d.str()};
}

}  // namespace

int main(int argc, char** argv) {
  Config cfg;
  std::vector<int> only;
  CLI::App app{"pfdim acceptance checks"};
  app.add_option("--workers", cfg.workers, "Worker threads")->check(CLI::Range(1u, 256u));
  app.add_option("--seed", cfg.seed, "Base seed");
  app.add_option("--only", only, "Run only these criteria")->check(CLI::Range(1, 8));
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::function<Outcome(const Config&)>> criteria{criterion1, criterion2, criterion3, criterion4,
                                                                     criterion5, criterion6, criterion7, criterion8};
  bool all = true;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (!only.empty() && std::find(only.begin(), only.end(), static_cast<int>(i + 1)) == only.end()) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i](cfg);
    } catch (const std::exception& e) {
      o = {false, std::string("unexpected exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::cout << "criterion " << i + 1 << ": " << (o.pass ? "PASS" : "FAIL") << " (" << o.detail << ") [" << std::fixed
              << std::setprecision(1) << secs << " s]" << std::defaultfloat << std::endl;
    all = all && o.pass;
  }
  return all ? 0 : 2;
}
