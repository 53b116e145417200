// Writes a synthetic school frame: 1029 schools, 56 of them in a
// cluster-randomized trial (34 treated, 22 control), binary ELA and math
// pass outcomes and a 0-100 ELA score. Non-sampled schools carry their
// business-as-usual outcomes.
//
//   pibgen_synth [seed] > data/indiana_synthetic.csv

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <numeric>
#include <vector>

namespace {

struct SplitMix {
  std::uint64_t state;

  std::uint64_t next() {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }
  // (0, 1)
  double uniform() { return (static_cast<double>(next() >> 11) + 0.5) / 9007199254740992.0; }
  double normal() {
    const double u1 = uniform(), u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }
  bool bernoulli(double p) { return uniform() < p; }
};

double expit(double x) { return 1.0 / (1.0 + std::exp(-x)); }

struct School {
  double pretest, enrollment, frl_pct;
  int title1;
  int z = 0, w = 0;
  double score = 0.0;
  int ela = 0, math = 0;
};

}  // namespace

int main(int argc, char** argv) {
  SplitMix rng{argc > 1 ? std::strtoull(argv[1], nullptr, 10) : 2016};
  const int n_units = 1029, n_sample = 56, n_treated = 34;

  std::vector<School> schools(n_units);
  for (auto& s : schools) {
    s.frl_pct = std::clamp(45.0 + 20.0 * rng.normal(), 2.0, 98.0);
    s.title1 = rng.bernoulli(expit((s.frl_pct - 45.0) / 10.0)) ? 1 : 0;
    s.pretest = std::clamp(72.0 - 0.25 * (s.frl_pct - 45.0) + 7.0 * rng.normal(), 30.0, 99.0);
    s.enrollment = std::round(std::exp(6.0 + 0.5 * rng.normal()));
  }

  // Trial schools skew toward Title I, higher-poverty, larger schools.
  // Weighted draw without replacement via exponential keys.
  std::vector<double> key(n_units);
  for (int i = 0; i < n_units; ++i) {
    const auto& s = schools[static_cast<std::size_t>(i)];
    const double eta = -3.2 + 0.8 * s.title1 + 0.025 * (s.frl_pct - 45.0) +
                       0.6 * std::log(s.enrollment / 400.0) - 0.03 * (s.pretest - 72.0);
    key[static_cast<std::size_t>(i)] = -std::log(rng.uniform()) / expit(eta);
  }
  std::vector<int> order(n_units);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return key[static_cast<std::size_t>(a)] < key[static_cast<std::size_t>(b)];
  });
  std::vector<int> sampled(order.begin(), order.begin() + n_sample);
  std::sort(sampled.begin(), sampled.end());
  // randomize treatment within the sample (Fisher-Yates on a copy)
  std::vector<int> shuffled = sampled;
  for (std::size_t i = shuffled.size() - 1; i > 0; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.next() % (i + 1));
    std::swap(shuffled[i], shuffled[j]);
  }
  for (int k = 0; k < n_sample; ++k) {
    auto& s = schools[static_cast<std::size_t>(shuffled[static_cast<std::size_t>(k)])];
    s.z = 1;
    s.w = k < n_treated ? 1 : 0;
  }

  for (auto& s : schools) {
    const double base = 0.09 * (s.pretest - 72.0) - 0.2 * s.title1;
    // Effects are larger in high-poverty schools, so the sample SATE
    // overstates the PATE.
    const double lift = s.w ? 0.6 + 0.02 * (s.frl_pct - 45.0) : 0.0;
    s.ela = rng.bernoulli(expit(0.4 + base + lift)) ? 1 : 0;
    s.math = rng.bernoulli(expit(0.2 + base + 0.8 * lift)) ? 1 : 0;
    s.score = std::clamp(50.0 + 2.0 * (s.pretest - 72.0) + 12.0 * lift + 10.0 * rng.normal(), 0.0, 100.0);
  }

  std::printf("id,in_sample,treatment,pretest,title1,enrollment,frl_pct,ela_pass,math_pass,ela_pct\n");
  for (int i = 0; i < n_units; ++i) {
    const auto& s = schools[static_cast<std::size_t>(i)];
    std::printf("S%04d,%d,", i + 1, s.z);
    if (s.z) std::printf("%d", s.w);
    std::printf(",%.1f,%d,%.0f,%.1f,%d,%d,%.1f\n", s.pretest, s.title1, s.enrollment, s.frl_pct, s.ela,
                s.math, s.score);
  }
  return 0;
}
