#ifndef PFDIM_MEASURE_HPP
#define PFDIM_MEASURE_HPP

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "pfdim/bigint.hpp"
#include "pfdim/block_structure.hpp"
#include "pfdim/engine.hpp"
#include "pfdim/error.hpp"
#include "pfdim/families.hpp"

namespace pfdim {

// An event is a set of atom ids stored as a bitset.
class Event {
 public:
  Event() = default;
  explicit Event(std::size_t atoms) : words_((atoms + 63) / 64, 0), atoms_(atoms) {}

  static Event from_ids(std::size_t atoms, const std::vector<std::size_t>& ids) {
    Event e(atoms);
    for (auto id : ids) {
      if (id >= atoms) fail(ErrorKind::OutOfRange, "atom " + std::to_string(id) + " outside 0.." + std::to_string(atoms - 1));
      e.insert(id);
    }
    return e;
  }

  void insert(std::size_t a) { words_[a / 64] |= std::uint64_t{1} << (a % 64); }
  bool contains(std::size_t a) const { return (words_[a / 64] >> (a % 64)) & 1; }
  std::size_t atoms() const { return atoms_; }

  Event& operator&=(const Event& o) {
    for (std::size_t i = 0; i < words_.size(); ++i) words_[i] &= o.words_[i];
    return *this;
  }
  Event& operator|=(const Event& o) {
    for (std::size_t i = 0; i < words_.size(); ++i) words_[i] |= o.words_[i];
    return *this;
  }
  friend Event operator&(Event a, const Event& b) { return a &= b; }
  friend Event operator|(Event a, const Event& b) { return a |= b; }
  friend bool operator==(const Event&, const Event&) = default;

  std::vector<std::size_t> ids() const {
    std::vector<std::size_t> out;
    for (std::size_t a = 0; a < atoms_; ++a) {
      if (contains(a)) out.push_back(a);
    }
    return out;
  }

  static Event full(std::size_t atoms) {
    Event e(atoms);
    for (std::size_t a = 0; a < atoms; ++a) e.insert(a);
    return e;
  }

 private:
  std::vector<std::uint64_t> words_;
  std::size_t atoms_ = 0;
};

// Finitely many atoms with nonnegative rational weights summing to exactly 1.
// Weights are also kept as integers over a common denominator so sums stay
// integral in the search loops.
class FiniteMeasureSpace {
 public:
  explicit FiniteMeasureSpace(std::vector<Rational> weights) : weights_(std::move(weights)) {
    if (weights_.empty()) fail(ErrorKind::InvariantViolation, "measure space needs at least one atom");
    Rational total = 0;
    denominator_ = 1;
    for (const auto& w : weights_) {
      if (w < 0) fail(ErrorKind::InvariantViolation, "negative weight " + to_string(w));
      total += w;
      const BigInt d = boost::multiprecision::denominator(w);
      denominator_ = denominator_ / boost::multiprecision::gcd(denominator_, d) * d;
    }
    if (total != 1) fail(ErrorKind::InvariantViolation, "weights sum to " + to_string(total) + ", not 1");
    for (const auto& w : weights_) {
      scaled_.push_back(boost::multiprecision::numerator(w) * (denominator_ / boost::multiprecision::denominator(w)));
    }
  }

  static FiniteMeasureSpace uniform(std::size_t atoms) {
    return FiniteMeasureSpace(std::vector<Rational>(atoms, Rational(1, static_cast<long long>(atoms))));
  }

  std::size_t atoms() const { return weights_.size(); }
  const std::vector<Rational>& weights() const { return weights_; }
  const BigInt& denominator() const { return denominator_; }
  const BigInt& scaled_weight(std::size_t a) const { return scaled_[a]; }

  // Measure times the common denominator.
  BigInt scaled_measure(const Event& e) const {
    check(e);
    BigInt s = 0;
    for (std::size_t a = 0; a < atoms(); ++a) {
      if (e.contains(a)) s += scaled_[a];
    }
    return s;
  }

  Rational measure(const Event& e) const { return Rational(scaled_measure(e), denominator_); }

  Event event(const std::vector<std::size_t>& ids) const { return Event::from_ids(atoms(), ids); }

  void check(const Event& e) const {
    if (e.atoms() != atoms()) fail(ErrorKind::OutOfRange, "event built for a space with " + std::to_string(e.atoms()) + " atoms");
  }

 private:
  std::vector<Rational> weights_;
  std::vector<BigInt> scaled_;
  BigInt denominator_;
};

inline Rational mu(const FiniteMeasureSpace& space, const Event& e) { return space.measure(e); }

inline Rational mu(const FiniteMeasureSpace& space, const std::vector<std::size_t>& ids) { return space.measure(space.event(ids)); }

struct MeasureInput {
  FiniteMeasureSpace space;
  std::vector<Event> events;
};

// { "weights": ["p/q", ...], "events": [[atomIds], ...] }
inline MeasureInput measure_from_json(const nlohmann::json& doc) {
  if (!doc.is_object() || !doc.contains("weights") || !doc["weights"].is_array()) {
    fail(ErrorKind::Schema, "measure space needs a 'weights' array");
  }
  std::vector<Rational> weights;
  for (const auto& w : doc["weights"]) {
    if (w.is_string()) {
      weights.push_back(parse_rational(w.get<std::string>()));
    } else if (w.is_number_integer()) {
      weights.push_back(Rational(w.get<long long>()));
    } else {
      fail(ErrorKind::Schema, "weights must be \"p/q\" strings");
    }
  }
  FiniteMeasureSpace space(std::move(weights));
  std::vector<Event> events;
  if (doc.contains("events")) {
    if (!doc["events"].is_array()) fail(ErrorKind::Schema, "'events' must be an array");
    for (const auto& ev : doc["events"]) {
      if (!ev.is_array()) fail(ErrorKind::Schema, "each event must be an array of atom ids");
      std::vector<std::size_t> ids;
      for (const auto& id : ev) {
        if (!id.is_number_unsigned() && !(id.is_number_integer() && id.get<long long>() >= 0)) {
          fail(ErrorKind::Schema, "atom ids must be nonnegative integers");
        }
        ids.push_back(id.get<std::size_t>());
      }
      events.push_back(space.event(ids));
    }
  }
  return {std::move(space), std::move(events)};
}

inline nlohmann::json measure_to_json(const FiniteMeasureSpace& space, const std::vector<Event>& events) {
  nlohmann::json w = nlohmann::json::array();
  for (const auto& x : space.weights()) w.push_back(to_string(x));
  nlohmann::json ev = nlohmann::json::array();
  for (const auto& e : events) ev.push_back(e.ids());
  return {{"weights", w}, {"events", ev}};
}

// |X and D| / |D| at each index; the finite stand-in for the limit measure.
inline std::vector<std::pair<long long, Rational>> mu_D_sequence(const FamilyHandle& family, const Formula& d, const Formula& x,
                                                                 const std::vector<long long>& indices,
                                                                 const std::vector<std::string>& counted,
                                                                 const SelectorSpec& selectors = {},
                                                                 const EngineOptions& options = {}) {
  const auto ds = count_family(d, family, indices, selectors, counted, options);
  const auto xs = count_family(Formula::conj(x, d), family, indices, selectors, counted, options);
  std::vector<std::pair<long long, Rational>> out;
  for (std::size_t i = 0; i < ds.entries.size(); ++i) {
    const auto& [index, dc] = ds.entries[i];
    if (dc.is_zero()) fail(ErrorKind::InvalidArgument, "D is empty at index " + std::to_string(index));
    out.emplace_back(index, Rational(xs.entries[i].second.value, dc.value));
  }
  return out;
}

inline BigInt binomial(const BigInt& n, unsigned k) {
  if (n < k) return 0;
  BigInt r = 1;
  for (unsigned i = 0; i < k; ++i) r = r * (n - i) / (i + 1);
  return r;
}

// eps^(3^(k-1)), exact.
inline Rational k_intersection_bound(const Rational& eps, unsigned k) {
  if (k == 0) fail(ErrorKind::InvalidArgument, "k must be positive");
  if (k > 12) fail(ErrorKind::OutOfRange, "k above 12 makes the exponent 3^(k-1) impractically large");
  unsigned e = 1;
  for (unsigned i = 1; i < k; ++i) e *= 3;
  return pow(eps, e);
}

// C(x, k) at integers, linear in between: a convex increasing extension.
inline Rational convex_binomial(const Rational& x, unsigned k) {
  const BigInt a = boost::multiprecision::numerator(x) / boost::multiprecision::denominator(x);
  const Rational t = x - Rational(a);
  return Rational(binomial(a, k)) + t * Rational(k == 0 ? BigInt(0) : binomial(a, k - 1));
}

// True when averaging over all k-subsets of n events of measure >= eps
// already certifies eps^(3^(k-1)): the mean of mu(A_i1 & .. & A_ik) is at
// least g(n eps) / C(n, k) by convexity of g.
inline bool averaging_certifies(std::size_t n, unsigned k, const Rational& eps) {
  if (n < k) return false;
  const Rational avg = convex_binomial(eps * Rational(static_cast<long long>(n)), k) / Rational(binomial(BigInt(n), k));
  return avg >= k_intersection_bound(eps, k);
}

inline std::optional<std::size_t> minimal_certified_events(unsigned k, const Rational& eps, std::size_t limit = 1u << 20) {
  for (std::size_t n = k; n <= limit; ++n) {
    if (averaging_certifies(n, k, eps)) return n;
  }
  return std::nullopt;
}

struct KIntersectionOptions {
  std::size_t exhaustive_max_events = 24;
  unsigned exhaustive_max_k = 5;
  // Cap on the tuples kept per level of the recursive search.
  std::size_t recursive_tuple_cap = 256;
  std::uint64_t budget = default_budget();
  unsigned workers = default_workers();
  // Skip the exhaustive path even when it applies.
  bool force_recursive = false;
};

enum class KIntersectionStatus { Found, Exhausted };

struct KIntersectionResult {
  KIntersectionStatus status = KIntersectionStatus::Exhausted;
  // Zero-based event indices, increasing.
  std::vector<std::size_t> indices;
  Rational measure = 0;
  Rational bound = 0;
  Rational eps = 0;
  std::string strategy;
  std::uint64_t visited = 0;
};

namespace detail {

inline void check_events(const FiniteMeasureSpace& space, const std::vector<Event>& events, const Rational& eps) {
  if (eps <= 0 || eps > Rational(1, 2)) fail(ErrorKind::HypothesisViolation, "eps = " + to_string(eps) + " must lie in (0, 1/2]");
  for (std::size_t i = 0; i < events.size(); ++i) {
    space.check(events[i]);
    const Rational m = space.measure(events[i]);
    if (m < eps) {
      fail(ErrorKind::HypothesisViolation,
           "event " + std::to_string(i) + " has measure " + to_string(m) + " < eps = " + to_string(eps));
    }
  }
}

inline Event intersect(const FiniteMeasureSpace& space, const std::vector<Event>& events, const std::vector<std::size_t>& idx) {
  Event e = Event::full(space.atoms());
  for (auto i : idx) e &= events[i];
  return e;
}

// Smallest scaled measure meeting the bound: mu >= bound iff scaled >= this.
inline BigInt scaled_threshold(const FiniteMeasureSpace& space, const Rational& bound) {
  const Rational t = bound * Rational(space.denominator());
  const BigInt num = boost::multiprecision::numerator(t);
  const BigInt den = boost::multiprecision::denominator(t);
  return (num + den - 1) / den;
}

// Best k-subset by exhaustive search, parallel over the leading index. Ties
// go to the lexicographically smallest subset so the result is reproducible.
inline std::optional<std::pair<std::vector<std::size_t>, BigInt>> exhaustive_best(const FiniteMeasureSpace& space,
                                                                                   const std::vector<Event>& events, unsigned k,
                                                                                   const KIntersectionOptions& opt,
                                                                                   std::uint64_t& visited) {
  const std::size_t n = events.size();
  std::atomic<std::size_t> next{0};
  std::atomic<std::uint64_t> total{0};
  std::atomic<bool> over{false};
  std::mutex mutex;
  std::exception_ptr error;
  std::vector<std::optional<std::pair<std::vector<std::size_t>, BigInt>>> best(n);
  auto work = [&] {
    try {
      for (;;) {
        const std::size_t lead = next.fetch_add(1);
        if (lead >= n || over.load()) break;
        std::vector<std::size_t> pick = {lead};
        std::vector<Event> stack = {events[lead]};
        std::optional<std::pair<std::vector<std::size_t>, BigInt>> local;
        std::uint64_t count = 0;
        std::function<void(std::size_t)> rec = [&](std::size_t from) {
          if (pick.size() == k) {
            ++count;
            BigInt m = space.scaled_measure(stack.back());
            if (!local || m > local->second) local = std::make_pair(pick, std::move(m));
            return;
          }
          for (std::size_t i = from; i + (k - pick.size()) <= n; ++i) {
            pick.push_back(i);
            stack.push_back(stack.back() & events[i]);
            rec(i + 1);
            stack.pop_back();
            pick.pop_back();
          }
        };
        rec(lead + 1);
        best[lead] = std::move(local);
        if (total.fetch_add(count) + count > opt.budget) over.store(true);
      }
    } catch (...) {
      std::lock_guard<std::mutex> lock(mutex);
      if (!error) error = std::current_exception();
      next.store(n);
    }
  };
  const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(std::max(1u, opt.workers), std::max<std::size_t>(1, n)));
  std::vector<std::thread> threads;
  for (unsigned w = 0; w < workers; ++w) threads.emplace_back(work);
  for (auto& t : threads) t.join();
  if (error) std::rethrow_exception(error);
  visited = total.load();
  if (over.load()) return std::nullopt;
  std::optional<std::pair<std::vector<std::size_t>, BigInt>> out;
  for (auto& b : best) {
    if (b && (!out || b->second > out->second)) out = std::move(b);
  }
  return out;
}

// The induction: level-j tuples all have measure >= eps^(3^(j-1)); two
// distinct ones meeting in measure >= (that)^3 give a level-(j+1) tuple.
inline std::optional<std::vector<std::size_t>> recursive_search(const FiniteMeasureSpace& space, const std::vector<Event>& events,
                                                                unsigned k, const Rational& eps, const KIntersectionOptions& opt,
                                                                std::uint64_t& visited) {
  std::vector<std::vector<std::size_t>> level;
  std::vector<Event> sets;
  for (std::size_t i = 0; i < events.size() && level.size() < opt.recursive_tuple_cap; ++i) {
    level.push_back({i});
    sets.push_back(events[i]);
  }
  for (unsigned j = 1; j < k; ++j) {
    const BigInt threshold = scaled_threshold(space, k_intersection_bound(eps, j + 1));
    std::set<std::vector<std::size_t>> seen;
    std::vector<std::vector<std::size_t>> next_level;
    std::vector<Event> next_sets;
    for (std::size_t a = 0; a < level.size() && next_level.size() < opt.recursive_tuple_cap; ++a) {
      for (std::size_t b = a + 1; b < level.size() && next_level.size() < opt.recursive_tuple_cap; ++b) {
        if (++visited > opt.budget) return std::nullopt;
        Event meet = sets[a] & sets[b];
        if (space.scaled_measure(meet) < threshold) continue;
        // Extend tuple a by one index of tuple b; its intersection contains meet.
        std::vector<std::size_t> tuple = level[a];
        for (auto i : level[b]) {
          if (std::find(tuple.begin(), tuple.end(), i) == tuple.end()) {
            tuple.push_back(i);
            break;
          }
        }
        std::sort(tuple.begin(), tuple.end());
        if (tuple.size() != j + 1 || !seen.insert(tuple).second) continue;
        next_sets.push_back(intersect(space, events, tuple));
        next_level.push_back(std::move(tuple));
      }
    }
    if (next_level.empty()) return std::nullopt;
    level = std::move(next_level);
    sets = std::move(next_sets);
  }
  return level.front();
}

// Method of conditional expectations: the mean over completions never drops
// below the overall mean, which the averaging bound controls.
inline std::vector<std::size_t> conditional_expectation_search(const FiniteMeasureSpace& space, const std::vector<Event>& events,
                                                               unsigned k) {
  const std::size_t n = events.size();
  std::vector<bool> chosen(n, false);
  std::vector<std::size_t> pick;
  Event inside = Event::full(space.atoms());
  for (unsigned step = 0; step < k; ++step) {
    const unsigned rest = k - step - 1;
    const BigInt pool = BigInt(n - pick.size() - 1);
    std::optional<std::pair<std::size_t, Rational>> best;
    for (std::size_t i = 0; i < n; ++i) {
      if (chosen[i]) continue;
      const Event with = inside & events[i];
      BigInt total = 0;
      for (std::size_t a = 0; a < space.atoms(); ++a) {
        if (!with.contains(a)) continue;
        std::size_t f = 0;
        for (std::size_t c = 0; c < n; ++c) {
          if (c != i && !chosen[c] && events[c].contains(a)) ++f;
        }
        total += space.scaled_weight(a) * binomial(BigInt(f), rest);
      }
      const Rational value(total, binomial(pool, rest));
      if (!best || value > best->second) best = std::make_pair(i, value);
    }
    chosen[best->first] = true;
    pick.push_back(best->first);
    inside &= events[best->first];
  }
  std::sort(pick.begin(), pick.end());
  return pick;
}

}  // namespace detail

// A k-subset of the events whose intersection has measure >= eps^(3^(k-1)).
// eps defaults to the least event measure.
inline KIntersectionResult find_k_intersection(const FiniteMeasureSpace& space, const std::vector<Event>& events, unsigned k,
                                               std::optional<Rational> eps_in = std::nullopt,
                                               const KIntersectionOptions& opt = {}) {
  if (k == 0) fail(ErrorKind::InvalidArgument, "k must be positive");
  if (events.size() < k) fail(ErrorKind::TooFewEvents, "need at least k = " + std::to_string(k) + " events");
  Rational eps = 1;
  if (eps_in) {
    eps = *eps_in;
  } else {
    for (const auto& e : events) eps = std::min(eps, space.measure(e));
  }
  detail::check_events(space, events, eps);
  if (!averaging_certifies(events.size(), k, eps)) {
    const auto need = minimal_certified_events(k, eps);
    fail(ErrorKind::TooFewEvents, std::to_string(events.size()) + " events do not certify the bound for k = " + std::to_string(k) +
                                      (need ? "; the smallest certified count is " + std::to_string(*need) : ""));
  }
  KIntersectionResult r;
  r.eps = eps;
  r.bound = k_intersection_bound(eps, k);
  const BigInt threshold = detail::scaled_threshold(space, r.bound);
  auto accept = [&](std::vector<std::size_t> idx, const std::string& strategy) {
    const BigInt m = space.scaled_measure(detail::intersect(space, events, idx));
    if (m < threshold) return false;
    r.status = KIntersectionStatus::Found;
    r.indices = std::move(idx);
    r.measure = Rational(m, space.denominator());
    r.strategy = strategy;
    return true;
  };

  if (!opt.force_recursive && events.size() <= opt.exhaustive_max_events && k <= opt.exhaustive_max_k) {
    std::uint64_t visited = 0;
    auto best = detail::exhaustive_best(space, events, k, opt, visited);
    r.visited += visited;
    if (!best) {
      r.strategy = "exhaustive";
      return r;
    }
    if (accept(best->first, "exhaustive")) return r;
    fail(ErrorKind::InvariantViolation, "no k-subset meets the bound although the averaging hypothesis holds");
  }
  std::uint64_t visited = 0;
  auto rec = detail::recursive_search(space, events, k, eps, opt, visited);
  r.visited += visited;
  if (rec && accept(*rec, "recursive")) return r;
  if (accept(detail::conditional_expectation_search(space, events, k), "conditional-expectation")) return r;
  fail(ErrorKind::InvariantViolation, "conditional expectation fell below the averaging bound");
}

inline nlohmann::json to_json(const KIntersectionResult& r) {
  nlohmann::json out = {{"status", r.status == KIntersectionStatus::Found ? "found" : "exhausted"},
                        {"bound", to_string(r.bound)},
                        {"eps", to_string(r.eps)},
                        {"strategy", r.strategy},
                        {"visited", r.visited}};
  if (r.status == KIntersectionStatus::Found) {
    out["indices"] = r.indices;
    out["measure"] = to_string(r.measure);
  }
  return out;
}

// floor(1/eps^2 + 1/2).
inline std::size_t pairwise_threshold(const Rational& eps) {
  if (eps <= 0) fail(ErrorKind::HypothesisViolation, "eps must be positive");
  const Rational x = 1 / (eps * eps) + Rational(1, 2);
  const BigInt f = boost::multiprecision::numerator(x) / boost::multiprecision::denominator(x);
  return f.convert_to<std::size_t>();
}

struct TruncatedInclusionExclusion {
  Rational singles = 0;
  Rational pairs = 0;
  Rational union_measure = 0;
  // 1 >= mu(union) >= singles - pairs.
  bool holds = false;
};

inline TruncatedInclusionExclusion truncated_inclusion_exclusion(const FiniteMeasureSpace& space, const std::vector<Event>& events) {
  TruncatedInclusionExclusion t;
  Event all(space.atoms());
  for (std::size_t i = 0; i < events.size(); ++i) {
    t.singles += space.measure(events[i]);
    all |= events[i];
    for (std::size_t j = i + 1; j < events.size(); ++j) t.pairs += space.measure(events[i] & events[j]);
  }
  t.union_measure = space.measure(all);
  t.holds = t.union_measure <= 1 && t.union_measure >= t.singles - t.pairs;
  return t;
}

struct PairwiseResult {
  bool ok = false;
  std::size_t required = 0;
  std::pair<std::size_t, std::size_t> pair{0, 0};
  Rational measure = 0;
  Rational bound = 0;
  TruncatedInclusionExclusion dagger;
};

// Among the events some pair meets in measure >= eps^3 once there are at least
// floor(1/eps^2 + 1/2) of them. A negative answer is a counterexample.
inline PairwiseResult pairwise_threshold_check(const FiniteMeasureSpace& space, const std::vector<Event>& events, const Rational& eps) {
  PairwiseResult r;
  if (eps <= 0 || eps > Rational(1, 2)) fail(ErrorKind::HypothesisViolation, "eps = " + to_string(eps) + " must lie in (0, 1/2]");
  r.required = pairwise_threshold(eps);
  r.bound = eps * eps * eps;
  if (events.size() < r.required) {
    fail(ErrorKind::TooFewEvents, std::to_string(events.size()) + " events, need N(eps) = " + std::to_string(r.required));
  }
  for (std::size_t i = 0; i < events.size(); ++i) {
    space.check(events[i]);
    if (space.measure(events[i]) < eps) {
      fail(ErrorKind::HypothesisViolation, "event " + std::to_string(i) + " has measure below eps = " + to_string(eps));
    }
  }
  std::optional<BigInt> best;
  for (std::size_t i = 0; i < events.size(); ++i) {
    for (std::size_t j = i + 1; j < events.size(); ++j) {
      BigInt m = space.scaled_measure(events[i] & events[j]);
      if (!best || m > *best) {
        best = m;
        r.pair = {i, j};
      }
    }
  }
  r.measure = best ? Rational(*best, space.denominator()) : Rational(0);
  r.ok = best && r.measure >= r.bound;
  r.dagger = truncated_inclusion_exclusion(space, events);
  return r;
}

inline nlohmann::json to_json(const PairwiseResult& r) {
  return {{"ok", r.ok},
          {"required_events", r.required},
          {"pair", {r.pair.first, r.pair.second}},
          {"measure", to_string(r.measure)},
          {"bound", to_string(r.bound)},
          {"inclusion_exclusion",
           {{"singles", to_string(r.dagger.singles)},
            {"pairs", to_string(r.dagger.pairs)},
            {"union", to_string(r.dagger.union_measure)},
            {"holds", r.dagger.holds}}}};
}

}  // namespace pfdim

#endif  // PFDIM_MEASURE_HPP
