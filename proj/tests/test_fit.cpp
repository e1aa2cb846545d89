#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "twinbeam/fit.hpp"
#include "twinbeam/io.hpp"

using namespace twinbeam;

namespace {

const Grid1D kGrid = make_grid(2048, 2048.0);

DatasetMeta experiment_meta() {
  DatasetMeta m;
  m.angle = 5e-3;
  m.length = 25157.0;
  m.k = two_pi;
  m.seed_sigma = 100.0;
  return m;
}

MediumParams experiment_medium(double im_a1 = 0.0) {
  const DatasetMeta meta = experiment_meta();
  MediumParams m;
  m.a1 = cplx(meta.k * meta.angle * meta.angle, im_a1);
  m.a2 = cplx(0.0, 0.0);
  m.b = 0.0;
  m.length = meta.length;
  m.k = meta.k;
  return m;
}

SeedSpec experiment_seed() { return SeedSpec{100.0, 0.0, 5e-3, 1.0}; }

double measured_net_gain(double b, const MediumParams& medium_template,
                         const SeedSpec& seed) {
  MediumParams m = medium_template;
  m.b = b;
  const Field1D f = synthesize_seed(seed, kGrid, m.k);
  return net_gain(propagate_to(f, m.length, m), f);
}

std::vector<double> test_gains() {
  return {1.5, 2.0, 2.8, 4.0, 5.6, 7.9, 11.2, 15.8, 22.3, 30.0};
}

} // namespace

TEST_CASE("b_from_gain basics", "[fit]") {
  SECTION("unit gain in a lossless medium means no coupling") {
    REQUIRE(b_from_gain(1.0, experiment_medium(), experiment_seed(), kGrid) == 0.0);
  }
  SECTION("target below the attainable floor") {
    REQUIRE_THROWS_AS(b_from_gain(0.5, experiment_medium(), experiment_seed(), kGrid),
                      parameter_error);
    // with loss the floor sits at e^{-2 Im(a1) L} < 1
    const MediumParams lossy = experiment_medium(2.3e-5);
    const double floor = std::exp(-2.0 * 2.3e-5 * lossy.length);
    REQUIRE_THROWS_AS(b_from_gain(0.5 * floor, lossy, experiment_seed(), kGrid),
                      parameter_error);
    REQUIRE(b_from_gain(floor, lossy, experiment_seed(), kGrid) == 0.0);
  }
  SECTION("target beyond the b L = 20 cap") {
    REQUIRE_THROWS_AS(b_from_gain(1e18, experiment_medium(), experiment_seed(), kGrid),
                      parameter_error);
  }
}

TEST_CASE("b_from_gain approaches the plane-wave inverse for a wide seed", "[fit]") {
  // sigma large enough that the seed is a near-plane wave: the solution of
  // net_gain(b) = cosh^2(2) then sits at b L = 2 up to the finite-width
  // correction (~1e-6 relative here).
  const Grid1D wide = make_grid(8192, 8192.0);
  MediumParams m;
  m.length = 1e4;
  m.k = two_pi;
  const SeedSpec seed{600.0, 0.0, 0.0, 1.0};
  const double target = std::cosh(2.0) * std::cosh(2.0);
  const double b = b_from_gain(target, m, seed, wide);
  REQUIRE_THAT(b * m.length, Catch::Matchers::WithinRel(2.0, 5e-5));
}

TEST_CASE("b_from_gain inverts the measured gain", "[fit][property]") {
  // round trip through the full propagation pipeline, 20 random couplings
  std::mt19937_64 rng(2024);
  const MediumParams tmpl = experiment_medium(0.0);
  const SeedSpec seed = experiment_seed();
  for (int i = 0; i < 20; ++i) {
    const double b_true = 1e-5 + 8e-5 * detail::uniform01(rng);
    const double gain = measured_net_gain(b_true, tmpl, seed);
    const double b_rec = b_from_gain(gain, tmpl, seed, kGrid);
    REQUIRE_THAT(b_rec, Catch::Matchers::WithinRel(b_true, 1e-5));
  }
}

TEST_CASE("b_from_gain with a general medium template", "[fit]") {
  // symmetric direct couplings (not the fitting geometry) take the generic
  // bisection path; the round trip must still hold
  MediumParams m;
  m.a1 = m.a2 = cplx(2.8e-5, 0.0);
  m.length = 5e4;
  m.k = two_pi;
  const SeedSpec seed{100.0, 0.0, 3e-3, 1.0};
  const double gain = measured_net_gain(4e-5, m, seed);
  REQUIRE_THAT(b_from_gain(gain, m, seed, kGrid),
               Catch::Matchers::WithinRel(4e-5, 1e-5));
}

TEST_CASE("model exit positions", "[fit]") {
  const DatasetMeta meta = experiment_meta();
  SECTION("low-gain limit: free exit for the probe, entry for the conjugate") {
    const auto [pos1, pos2] = model_exit_positions(1.05, 0.0, meta, kGrid);
    const double free_exit = meta.angle * meta.length;
    REQUIRE(std::abs(pos1 - free_exit) < 0.1 * meta.seed_sigma);
    REQUIRE(std::abs(pos2) < 0.1 * meta.seed_sigma);
  }
  SECTION("probe walks toward the conjugate as the gain rises") {
    double prev = 1e9;
    for (double g : {2.0, 5.0, 10.0, 20.0, 30.0}) {
      const auto [pos1, pos2] = model_exit_positions(g, 0.0, meta, kGrid);
      REQUIRE(pos1 < prev);
      REQUIRE(pos1 > pos2);
      prev = pos1;
    }
  }
  SECTION("probe loss closes the gap at equal net gain") {
    const auto [l1, l2] = model_exit_positions(10.0, 0.0, meta, kGrid);
    const auto [a1, a2] = model_exit_positions(10.0, 2.3e-5, meta, kGrid);
    REQUIRE(std::abs(a1 - a2) < std::abs(l1 - l2));
  }
}

TEST_CASE("synthesize_dataset", "[fit]") {
  SynthesisParams params;
  params.meta = experiment_meta();
  params.gains = test_gains();
  params.im_a1 = 1.7e-5;
  params.offset1 = 12.0;
  params.offset2 = -7.0;

  SECTION("zero noise lands exactly on the model curve") {
    const HitchDataset ds = synthesize_dataset(params, kGrid, 42);
    for (std::size_t i = 0; i < ds.rows.size(); ++i) {
      const auto [m1, m2] =
          model_exit_positions(ds.rows[i].net_gain, params.im_a1, params.meta, kGrid);
      REQUIRE(ds.rows[i].pos1 == m1 + params.offset1);
      REQUIRE(ds.rows[i].pos2 == m2 + params.offset2);
      REQUIRE(ds.rows[i].sigma1 > 0.0);
    }
  }
  SECTION("fixed seed reproduces the exact same file") {
    SynthesisParams noisy = params;
    noisy.noise_fraction = 0.01;
    const std::string a = dataset_csv(synthesize_dataset(noisy, kGrid, 42));
    const std::string b = dataset_csv(synthesize_dataset(noisy, kGrid, 42));
    const std::string c = dataset_csv(synthesize_dataset(noisy, kGrid, 43));
    REQUIRE(a == b);
    REQUIRE(a != c);
  }
  SECTION("chi-square of the true parameters scales with the noise squared") {
    // record unit sigmas so chi2 directly measures the injected noise
    SynthesisParams low = params;
    low.noise_fraction = 1e-3;
    low.recorded_sigma = 1.0;
    SynthesisParams high = low;
    high.noise_fraction = 2e-3;
    FitOptions opt;
    opt.fit_im_a1 = false;
    opt.fixed_im_a1 = params.im_a1;
    const double chi_low = fit_hitching(synthesize_dataset(low, kGrid, 7), kGrid, opt).chi2;
    const double chi_high =
        fit_hitching(synthesize_dataset(high, kGrid, 7), kGrid, opt).chi2;
    REQUIRE(chi_high / chi_low > 2.5);
    REQUIRE(chi_high / chi_low < 6.0);
  }
}

TEST_CASE("fit recovers exact parameters from noiseless data", "[fit]") {
  SynthesisParams params;
  params.meta = experiment_meta();
  params.gains = test_gains();
  params.im_a1 = 1.7e-5;
  params.offset1 = 12.0;
  params.offset2 = -7.0;
  const HitchDataset ds = synthesize_dataset(params, kGrid, 42);

  const FitResult fit = fit_hitching(ds, kGrid);
  REQUIRE(fit.converged);
  REQUIRE(fit.im_a1_fitted);
  REQUIRE_FALSE(fit.at_bound);
  REQUIRE_THAT(fit.im_a1, Catch::Matchers::WithinAbs(1.7e-5, 5e-8));
  REQUIRE_THAT(fit.offset1, Catch::Matchers::WithinAbs(12.0, 0.05));
  REQUIRE_THAT(fit.offset2, Catch::Matchers::WithinAbs(-7.0, 0.05));
  REQUIRE(fit.evaluations <= 500);
  REQUIRE(fit.dof == 2 * ds.rows.size() - 3);
}

TEST_CASE("fixed-loss fit is a direct formula", "[fit]") {
  SynthesisParams params;
  params.meta = experiment_meta();
  params.gains = test_gains();
  params.offset1 = 3.25;
  params.offset2 = -1.5;
  const HitchDataset ds = synthesize_dataset(params, kGrid, 1);

  FitOptions opt;
  opt.fit_im_a1 = false;
  const FitResult fit = fit_hitching(ds, kGrid, opt);
  REQUIRE(fit.converged);
  REQUIRE_FALSE(fit.im_a1_fitted);
  REQUIRE(fit.im_a1 == 0.0);
  REQUIRE_THAT(fit.offset1, Catch::Matchers::WithinAbs(3.25, 1e-9));
  REQUIRE_THAT(fit.offset2, Catch::Matchers::WithinAbs(-1.5, 1e-9));
  REQUIRE(fit.chi2 < 1e-15);
  REQUIRE(fit.dof == 2 * ds.rows.size() - 2);
}

TEST_CASE("fitting lossless data pins the loss at its lower bound", "[fit]") {
  SynthesisParams params;
  params.meta = experiment_meta();
  params.gains = test_gains();
  params.offset1 = 2.0;
  params.offset2 = -2.0;
  const HitchDataset ds = synthesize_dataset(params, kGrid, 3);
  const FitResult fit = fit_hitching(ds, kGrid);
  REQUIRE(fit.at_bound);
  REQUIRE(fit.im_a1 <= 1e-7);
}

TEST_CASE("offset gauge invariance", "[fit][property]") {
  SynthesisParams params;
  params.meta = experiment_meta();
  params.gains = test_gains();
  params.im_a1 = 1.3e-5;
  params.noise_fraction = 0.01;
  const HitchDataset base = synthesize_dataset(params, kGrid, 99);
  HitchDataset shifted = base;
  const double c = 5.5;
  for (auto& r : shifted.rows) r.pos1 += c;

  // with the loss held fixed the offsets are closed-form: the shift moves
  // offset1 by exactly c and nothing else
  FitOptions fixed;
  fixed.fit_im_a1 = false;
  fixed.fixed_im_a1 = params.im_a1;
  const FitResult g0 = fit_hitching(base, kGrid, fixed);
  const FitResult g1 = fit_hitching(shifted, kGrid, fixed);
  REQUIRE_THAT(g1.offset1, Catch::Matchers::WithinAbs(g0.offset1 + c, 1e-9));
  REQUIRE(g1.offset2 == g0.offset2);
  REQUIRE_THAT(g1.chi2, Catch::Matchers::WithinRel(g0.chi2, 1e-9));

  // the full fit agrees up to solver tolerance
  const FitResult f0 = fit_hitching(base, kGrid);
  const FitResult f1 = fit_hitching(shifted, kGrid);
  REQUIRE_THAT(f1.im_a1, Catch::Matchers::WithinAbs(f0.im_a1, 2e-8));
  REQUIRE_THAT(f1.offset1 - c, Catch::Matchers::WithinAbs(f0.offset1, 0.05));
}

TEST_CASE("reweighting invariance", "[fit][property]") {
  SynthesisParams params;
  params.meta = experiment_meta();
  params.gains = test_gains();
  params.im_a1 = 1.3e-5;
  params.noise_fraction = 0.01;
  const HitchDataset base = synthesize_dataset(params, kGrid, 77);
  HitchDataset rescaled = base;
  for (auto& r : rescaled.rows) {
    // a power of two scales every chi^2 term exactly, so the whole search
    // path and the fitted parameters are bit-identical
    r.sigma1 *= 2.0;
    r.sigma2 *= 2.0;
  }
  const FitResult f0 = fit_hitching(base, kGrid);
  const FitResult f1 = fit_hitching(rescaled, kGrid);
  REQUIRE(f1.im_a1 == f0.im_a1);
  REQUIRE(f1.offset1 == f0.offset1);
  REQUIRE(f1.offset2 == f0.offset2);
  REQUIRE(f1.chi2 * 4.0 == f0.chi2);
}

TEST_CASE("fit determinism", "[fit]") {
  SynthesisParams params;
  params.meta = experiment_meta();
  params.gains = test_gains();
  params.im_a1 = 1.7e-5;
  params.noise_fraction = 0.01;
  const HitchDataset ds = synthesize_dataset(params, kGrid, 5);
  const FitResult a = fit_hitching(ds, kGrid);
  const FitResult b = fit_hitching(ds, kGrid);
  REQUIRE(a.im_a1 == b.im_a1);
  REQUIRE(a.offset1 == b.offset1);
  REQUIRE(a.offset2 == b.offset2);
  REQUIRE(a.chi2 == b.chi2);
  REQUIRE(a.evaluations == b.evaluations);
}

TEST_CASE("fit input validation", "[fit]") {
  SynthesisParams params;
  params.meta = experiment_meta();
  params.gains = {2.0, 5.0, 10.0};
  const HitchDataset small = synthesize_dataset(params, kGrid, 1);
  REQUIRE_THROWS_AS(fit_hitching(small, kGrid), data_error); // 3 rows, 3 params

  HitchDataset bad = small;
  bad.rows[0].sigma1 = 0.0;
  FitOptions fixed;
  fixed.fit_im_a1 = false;
  REQUIRE_THROWS_AS(fit_hitching(bad, kGrid, fixed), data_error);
}
