#include "isodimer/sampler.hpp"

#include <algorithm>
#include <string>
#include <thread>

#include "isodimer/errors.hpp"

namespace isodimer {
namespace {

class Enumerator {
 public:
  Enumerator(const DoubleGraph& gd, std::size_t limit)
      : gd_(gd),
        limit_(limit),
        white_used_(gd.whites.size(), 0),
        black_used_(gd.blacks.size(), 0) {}

  std::vector<WeightedMatching> run() {
    if (static_cast<int>(gd_.whites.size()) == gd_.active_black_count()) recurse(1.0);
    return std::move(out_);
  }

 private:
  void recurse(double weight) {
    int best = -1;
    int best_free = 1 << 30;
    for (int w = 0; w < static_cast<int>(gd_.whites.size()); ++w) {
      if (white_used_[w]) continue;
      int free = 0;
      for (int e : gd_.white_edges(w)) free += !black_used_[gd_.edges[e].black];
      if (free < best_free) {
        best = w;
        best_free = free;
      }
    }
    if (best < 0) {
      if (out_.size() >= limit_) {
        throw Error(ErrorKind::kTooLarge,
                    "more than " + std::to_string(limit_) + " perfect matchings");
      }
      Matching m = current_;
      std::sort(m.begin(), m.end());
      out_.push_back({std::move(m), weight});
      return;
    }
    if (best_free == 0) return;
    white_used_[best] = 1;
    for (int e : gd_.white_edges(best)) {
      int b = gd_.edges[e].black;
      if (black_used_[b]) continue;
      black_used_[b] = 1;
      current_.push_back(e);
      recurse(weight * gd_.edges[e].nu);
      current_.pop_back();
      black_used_[b] = 0;
    }
    white_used_[best] = 0;
  }

  const DoubleGraph& gd_;
  std::size_t limit_;
  std::vector<char> white_used_;
  std::vector<char> black_used_;
  Matching current_;
  std::vector<WeightedMatching> out_;
};

}  // namespace

std::vector<WeightedMatching> enumerate_matchings(const DoubleGraph& gd, std::size_t limit) {
  return Enumerator(gd, limit).run();
}

bool validate_matching(const DoubleGraph& gd, const Matching& m) {
  std::vector<int> white_cover(gd.whites.size(), 0);
  std::vector<int> black_cover(gd.blacks.size(), 0);
  for (int e : m) {
    if (e < 0 || e >= static_cast<int>(gd.edges.size())) return false;
    ++white_cover[gd.edges[e].white];
    ++black_cover[gd.edges[e].black];
  }
  for (int c : white_cover) {
    if (c != 1) return false;
  }
  for (int b = 0; b < static_cast<int>(gd.blacks.size()); ++b) {
    if (black_cover[b] != (b == gd.removed ? 0 : 1)) return false;
  }
  return true;
}

std::uint64_t sample_seed(std::uint64_t master, std::uint64_t index) {
  // splitmix64 finalizer over a mix of both words.
  std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

Matching sample_matching(const KasteleynSystem& sys, std::uint64_t seed) {
  const DoubleGraph& gd = sys.graph();
  const int n = sys.size();
  if (static_cast<int>(sys.dbar().cols()) != n) {
    throw Error(ErrorKind::kGraphNotMatchable, "white and black counts differ");
  }
  Eigen::MatrixXcd a = sys.inverse();
  std::vector<char> black_used(gd.blacks.size(), 0);
  std::mt19937_64 rng(seed);
  Matching m;
  m.reserve(n);
  std::vector<int> cand;
  std::vector<double> prob;

  for (int w = 0; w < n; ++w) {
    cand.clear();
    prob.clear();
    double total = 0.0;
    for (int e : gd.white_edges(w)) {
      int b = gd.edges[e].black;
      if (black_used[b]) continue;
      double p = (sys.dbar()(w, gd.black_column(b)) * a(gd.black_column(b), w)).real();
      if (p < -1e-8 || p > 1.0 + 1e-8) {
        throw Error(ErrorKind::kNumericalBreakdown,
                    "conditional probability " + std::to_string(p) + " at white " +
                        std::to_string(w));
      }
      p = std::clamp(p, 0.0, 1.0);
      cand.push_back(e);
      prob.push_back(p);
      total += p;
    }
    if (cand.empty() || !(std::abs(total - 1.0) <= 1e-6)) {
      throw Error(ErrorKind::kNumericalBreakdown,
                  "conditional probabilities at white " + std::to_string(w) + " sum to " +
                      std::to_string(total));
    }
    const double u = uniform01(rng) * total;
    std::size_t pick = cand.size() - 1;
    double cum = 0.0;
    for (std::size_t k = 0; k < cand.size(); ++k) {
      cum += prob[k];
      if (u < cum && prob[k] > 0.0) {
        pick = k;
        break;
      }
    }
    while (prob[pick] == 0.0) --pick;
    const int e = cand[pick];
    const int b = gd.edges[e].black;
    const int cb = gd.black_column(b);
    black_used[b] = 1;
    m.push_back(e);

    // Condition on (w, b): Schur update of the inverse on the remaining whites.
    const int rest = n - w - 1;
    if (rest > 0) {
      Eigen::RowVectorXcd row = a.row(cb).tail(rest) / a(cb, w);
      Eigen::VectorXcd col = a.col(w);
      a.rightCols(rest).noalias() -= col * row;
    }
  }
  std::sort(m.begin(), m.end());
  return m;
}

std::vector<Matching> sample_matchings(const KasteleynSystem& sys, std::uint64_t master_seed,
                                       std::size_t count, int threads, std::size_t first_index) {
  std::vector<Matching> out(count);
  const std::size_t workers =
      std::max<std::size_t>(1, std::min<std::size_t>(static_cast<std::size_t>(std::max(threads, 1)), count));
  auto work = [&](std::size_t t) {
    for (std::size_t k = t; k < count; k += workers) {
      out[k] = sample_matching(sys, sample_seed(master_seed, first_index + k));
    }
  };
  if (workers == 1) {
    work(0);
    return out;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  for (std::size_t t = 0; t < workers; ++t) {
    pool.emplace_back([&, t] {
      try {
        work(t);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& err : errors) {
    if (err) std::rethrow_exception(err);
  }
  return out;
}

}  // namespace isodimer
