// Acceptance suite: one pass/fail line per criterion, pinned tolerances.
// Exit code is the number of failed criteria.

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "twinbeam/commands.hpp"
#include "twinbeam/config.hpp"
#include "twinbeam/fit.hpp"
#include "twinbeam/io.hpp"
#include "twinbeam/scan.hpp"
#include "twinbeam/transfer.hpp"

using namespace twinbeam;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(int num, const std::string& name, bool pass, const std::string& detail) {
  std::printf("%s  criterion %2d  %-28s %s\n", pass ? "PASS" : "FAIL", num,
              name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

MediumParams fig1_medium() {
  MediumParams m;
  m.a1 = m.a2 = cplx(2.8e-5, 0.0);
  m.b = 1.0e-4;
  m.length = 5e4;
  m.k = two_pi;
  return m;
}

const SeedSpec kFig1Seed{100.0, 0.0, 3e-3, 1.0};

struct RandomCase {
  MediumParams medium;
  double kx;
};

RandomCase random_case(std::mt19937_64& rng, bool lossless) {
  const auto u = [&] { return detail::uniform01(rng); };
  MediumParams m;
  m.length = 1e4 + 9e4 * u();
  m.k = two_pi;
  m.b = 6.0 * u() / m.length;
  const double scale = 6.0 / m.length;
  m.a1 = cplx(scale * (2.0 * u() - 1.0), lossless ? 0.0 : 0.5 * scale * u());
  m.a2 = cplx(scale * (2.0 * u() - 1.0), lossless ? 0.0 : 0.5 * scale * u());
  const double kx_max = std::sqrt(2.0 * m.k * 6.0 / m.length);
  return {m, kx_max * (2.0 * u() - 1.0)};
}

double column_error(const MediumParams& m, double kx, std::size_t steps) {
  const TransferMatrix tm = transfer_matrix(kx, m.length, m);
  double worst = 0.0;
  const std::array<std::array<cplx, 2>, 2> inputs{{{1.0, 0.0}, {0.0, 1.0}}};
  const std::array<std::array<cplx, 2>, 2> want{
      {{tm.m11, tm.m21}, {tm.m12, tm.m22}}};
  for (int c = 0; c < 2; ++c) {
    const auto got = oracle_propagate(kx, m.length, m, inputs[c], steps);
    const double scale =
        std::max({std::abs(want[c][0]), std::abs(want[c][1]), 1e-300});
    worst = std::max(worst, std::abs(got[0] - want[c][0]) / scale);
    worst = std::max(worst, std::abs(got[1] - want[c][1]) / scale);
  }
  return worst;
}

std::string fmt(double v) { return format_double(v); }

// Net beam gain of the fig1 configuration, recorded after first
// computation and pinned as a regression fixture.
constexpr double kFig1NetGainFixture = 4720.251434331865;

} // namespace

// 1. closed form vs independent RK4 integration, plus order-4 scaling
static void criterion1() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(20250321);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const auto [m, kx] = random_case(rng, i % 2 == 0);
    worst = std::max(worst, column_error(m, kx, 2048));
  }
  bool scaling_ok = true;
  double ratio_lo = 1e9, ratio_hi = 0.0;
  for (int i = 0; i < 10; ++i) {
    const auto [m, kx] = random_case(rng, i % 2 == 0);
    const double e64 = column_error(m, kx, 64);
    const double e128 = column_error(m, kx, 128);
    const double ratio = e64 / e128;
    ratio_lo = std::min(ratio_lo, ratio);
    ratio_hi = std::max(ratio_hi, ratio);
    if (ratio < 8.0 || ratio > 32.0) scaling_ok = false;
  }
  const double dt = seconds_since(t0);
  report(1, "oracle equivalence",
         worst < 1e-8 && scaling_ok && dt < 10.0,
         "max rel err " + fmt(worst) + ", halving ratios [" + fmt(ratio_lo) + ", " +
             fmt(ratio_hi) + "], " + fmt(dt) + " s");
}

// 2. lossless invariants: determinant, g1 - g2 = 1, beam Manley-Rowe
static void criterion2() {
  std::mt19937_64 rng(77);
  double det_worst = 0.0, gain_worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const auto [m, kx] = random_case(rng, true);
    const double z = m.length * detail::uniform01(rng);
    const TransferMatrix tm = transfer_matrix(kx, z, m);
    const cplx want = std::exp(cplx(0.0, 2.0) * mismatch_terms(kx, m).delta_a * z);
    // relative to the products the determinant cancels, >= 1
    const double scale =
        std::max(1.0, std::abs(tm.m11 * tm.m22) + std::abs(tm.m12 * tm.m21));
    det_worst = std::max(det_worst, std::abs(tm.det() - want) / scale);
    const PlaneWaveGain g = plane_wave_gain(kx, m);
    gain_worst = std::max(gain_worst, std::abs(g.g1 - g.g2 - 1.0));
  }

  const Grid1D grid = make_grid(4096, 4096.0);
  const auto records = trajectory(kFig1Seed, grid, fig1_medium(), 51);
  const double p0 = records.front().power1;
  double mr_worst = 0.0;
  for (const auto& r : records)
    mr_worst = std::max(mr_worst, std::abs(r.power1 - r.power2 - p0) / p0);

  report(2, "lossless invariants",
         det_worst < 1e-12 && gain_worst < 1e-9 && mr_worst < 1e-8,
         "det err " + fmt(det_worst) + ", g1-g2-1 err " + fmt(gain_worst) +
             ", Manley-Rowe err " + fmt(mr_worst));
}

// 3. free-space center of mass follows x0 + theta z
static void criterion3() {
  const Grid1D grid = make_grid(4096, 4096.0);
  MediumParams m;
  m.length = 5e4;
  m.k = two_pi;
  const auto records = trajectory(kFig1Seed, grid, m, 26);
  double worst = 0.0;
  for (const auto& r : records)
    worst = std::max(worst, std::abs(r.com1 - r.free_line));
  report(3, "free-space reference", worst < grid.dx() / 10.0,
         "max |com - line| = " + fmt(worst) + " lambda");
}

// 4. phase matching forward and inverse
static void criterion4() {
  const double theta = phase_matched_angle(fig1_medium());
  const bool fig1_ok = std::abs(theta - 3e-3) / 3e-3 < 0.01 &&
                       std::abs(theta - 2.9854106607209233e-3) < 1e-12;
  MediumParams five;
  five.a1 = cplx(two_pi * 5e-3 * 5e-3, 0.0);
  five.length = 25157.0;
  five.k = two_pi;
  const double back = phase_matched_angle(five);
  const bool inverse_ok = std::abs(back - 5e-3) < 1e-12 * 5e-3;
  report(4, "phase matching", fig1_ok && inverse_ok,
         "theta(fig1) = " + fmt(theta) + " rad, inverse(5 mrad) = " + fmt(back));
}

// 5. hitching phenomenology on the fig1 configuration
static void criterion5() {
  const auto t0 = std::chrono::steady_clock::now();
  const Grid1D grid = make_grid(4096, 4096.0);
  const MediumParams m = fig1_medium();
  const Field1D seed = synthesize_seed(kFig1Seed, grid, m.k);

  // (i) idler born at the seed position
  const TwinBeamState early = propagate_to(seed, m.length / 1000.0, m);
  const double com2_early = diagnostics(early.spec2, m.k).com;
  const bool born_ok = std::abs(com2_early - 0.0) < 0.05 * kFig1Seed.sigma;

  // (ii)-(iv) from the full trajectory
  const auto records = trajectory(kFig1Seed, grid, m, 201);
  const double sep_end = records.back().separation;
  const double sep_08 = records[160].separation; // z = 0.8 L exactly
  const bool plateau_ok = (sep_end - sep_08) < 0.05 * sep_end;

  const HitchingOnset onset = hitching_onset(records);
  const bool onset_ok = onset.gain_star >= 1.5 && onset.gain_star <= 5.0;

  const double com1 = records.back().com1;
  const double com2 = records.back().com2;
  const double free_exit = kFig1Seed.x0 + kFig1Seed.tilt * m.length;
  const bool between_ok = com2 < com1 && com1 < free_exit;

  const double dt = seconds_since(t0);
  report(5, "hitching phenomenology",
         born_ok && plateau_ok && onset_ok && between_ok && dt < 30.0,
         "com2(L/1000) = " + fmt(com2_early) + ", plateau margin = " +
             fmt((sep_end - sep_08) / sep_end) + ", gain* = " + fmt(onset.gain_star) +
             ", exit " + fmt(com2) + " < " + fmt(com1) + " < " + fmt(free_exit) +
             ", " + fmt(dt) + " s");
}

// 6. momentum conservation and wave-vector constancy
static void criterion6() {
  const Grid1D grid = make_grid(4096, 4096.0);
  const auto records = trajectory(kFig1Seed, grid, fig1_medium(), 51);
  const double bin = grid.dkx();
  double sum_worst = 0.0;
  double k1_lo = 1e9, k1_hi = -1e9, k2_lo = 1e9, k2_hi = -1e9;
  for (const auto& r : records) {
    k1_lo = std::min(k1_lo, r.mean_kx1);
    k1_hi = std::max(k1_hi, r.mean_kx1);
    if (r.power2 > 0.0) {
      sum_worst = std::max(sum_worst, std::abs(r.mean_kx1 + r.mean_kx2));
      k2_lo = std::min(k2_lo, r.mean_kx2);
      k2_hi = std::max(k2_hi, r.mean_kx2);
    }
  }
  const bool ok = sum_worst < bin && (k1_hi - k1_lo) < bin && (k2_hi - k2_lo) < bin;
  report(6, "momentum conservation", ok,
         "|<kx1> + <kx2>| max = " + fmt(sum_worst / bin) + " bins, drifts " +
             fmt((k1_hi - k1_lo) / bin) + " / " + fmt((k2_hi - k2_lo) / bin) + " bins");
}

// 7. gain trend of the exit curve (5 mrad lossless sweep)
static void criterion7() {
  const RunConfig config = preset_config("experiment");
  const Grid1D grid = config.make_grid();
  const auto points =
      exit_curve(config.seed_spec(), grid, config.medium_params(), config.scan.b_values);

  bool monotone_ok = true;
  double com1_lo = 1e300, com1_hi = -1e300, com2_lo = 1e300, com2_hi = -1e300;
  for (std::size_t i = 0; i < points.size(); ++i) {
    com1_lo = std::min(com1_lo, points[i].exit_com1);
    com1_hi = std::max(com1_hi, points[i].exit_com1);
    com2_lo = std::min(com2_lo, points[i].exit_com2);
    com2_hi = std::max(com2_hi, points[i].exit_com2);
    if (i > 0 && points[i - 1].net_gain > 2.0 &&
        points[i].hitch_distance > points[i - 1].hitch_distance)
      monotone_ok = false;
  }
  const bool span_ok = points.front().net_gain <= 1.5 && points.back().net_gain >= 30.0;
  const double exc1 = com1_hi - com1_lo;
  const double exc2 = com2_hi - com2_lo;
  const bool constancy_ok = exc2 < 0.1 * exc1;
  report(7, "gain trend", span_ok && monotone_ok && constancy_ok,
         "gains [" + fmt(points.front().net_gain) + ", " + fmt(points.back().net_gain) +
             "], conjugate excursion " + fmt(exc2) + " vs probe " + fmt(exc1));
}

// 8. absorption bias at matched net gain
static void criterion8() {
  const DatasetMeta meta; // 5 mrad, L = 25157, sigma = 100
  const Grid1D grid = make_grid(4096, 4096.0);
  const double target = 10.0;
  std::vector<double> seps, com1s, com2s;
  for (const double im : {0.0, 1.3e-5, 1.7e-5, 2.3e-5}) {
    const auto [c1, c2] = model_exit_positions(target, im, meta, grid);
    seps.push_back(std::abs(c1 - c2));
    com1s.push_back(c1);
    com2s.push_back(c2);
  }
  bool ordered = true, shifted = true;
  for (std::size_t i = 1; i < seps.size(); ++i) {
    ordered = ordered && seps[i] < seps[i - 1];
    shifted = shifted && com1s[i] < com1s[0] && com2s[i] < com2s[0];
  }
  report(8, "absorption bias", ordered && shifted,
         "separations " + fmt(seps[0]) + " > " + fmt(seps[1]) + " > " + fmt(seps[2]) +
             " > " + fmt(seps[3]) + " lambda");
}

// 9. inverse-problem recovery: exact on noiseless data, Monte Carlo at 1% noise
static void criterion9() {
  const auto t0 = std::chrono::steady_clock::now();
  const Grid1D grid = make_grid(2048, 2048.0);
  SynthesisParams params;
  params.meta = DatasetMeta{};
  params.gains = {1.5, 1.9, 2.4, 3.0, 3.8, 4.8, 6.1, 7.7, 9.7, 12.3,
                  15.5, 19.6, 24.7, 30.0, 2.1, 3.4, 5.4, 8.6, 13.7, 21.8};
  params.im_a1 = 1.7e-5;
  params.offset1 = 12.0;
  params.offset2 = -7.0;

  const HitchDataset clean = synthesize_dataset(params, grid, 42);
  const FitResult exact = fit_hitching(clean, grid);
  const bool exact_ok = exact.converged &&
                        std::abs(exact.im_a1 - params.im_a1) < 1e-8 &&
                        std::abs(exact.offset1 - params.offset1) < 1e-6 &&
                        std::abs(exact.offset2 - params.offset2) < 1e-6;

  SynthesisParams noisy = params;
  noisy.noise_fraction = 0.01;
  int hits = 0;
  const int reps = 50;
  for (int r = 0; r < reps; ++r) {
    const HitchDataset ds = synthesize_dataset(noisy, grid, 1000 + r);
    const FitResult fit = fit_hitching(ds, grid);
    const bool good = std::abs(fit.im_a1 - params.im_a1) <= 0.15 * params.im_a1 &&
                      std::abs(fit.offset1 - params.offset1) <= 0.5 &&
                      std::abs(fit.offset2 - params.offset2) <= 0.5;
    if (good) ++hits;
  }
  const double dt = seconds_since(t0);
  report(9, "inverse-problem recovery",
         exact_ok && hits >= 45 && dt < 300.0,
         "noiseless: im err " + fmt(exact.im_a1 - params.im_a1) + ", off err (" +
             fmt(exact.offset1 - params.offset1) + ", " +
             fmt(exact.offset2 - params.offset2) + "); Monte Carlo " +
             std::to_string(hits) + "/50, " + fmt(dt) + " s");
}

// 10. determinism and formats
static void criterion10() {
  const fs::path root = fs::temp_directory_path() / "twinbeam_acceptance";
  fs::remove_all(root);
  fs::create_directories(root);
  std::ostringstream sink;
  bool all_ok = true;
  std::string note;

  for (const std::string preset : {"fig1", "free", "fig2-loss", "experiment"}) {
    RunConfig c = preset_config(preset);
    c.scan.nz = 9;
    const fs::path dir = root / preset;
    c.output.directory = dir.string();
    cmd_propagate(c, true, sink);
    std::vector<std::pair<std::string, std::string>> first;
    for (const char* name : {"diagnostics.csv", "summary.json", "mode1.pgm",
                             "mode2.pgm", "mode1_norm.pgm", "mode2_norm.pgm"})
      first.emplace_back(name, read_file(dir / name));
    cmd_propagate(c, true, sink);
    for (const auto& [name, bytes] : first) {
      if (read_file(dir / name) != bytes) {
        all_ok = false;
        note += preset + "/" + name + " differs; ";
      }
    }
  }

  {
    RunConfig c = preset_config("experiment");
    c.scan.b_values = {0.0, 3e-5, 6e-5, 9e-5};
    const fs::path dir = root / "sweep";
    c.output.directory = dir.string();
    cmd_sweep(c, {}, sink);
    const std::string first = read_file(dir / "exit_curve.csv");
    cmd_sweep(c, {}, sink);
    if (read_file(dir / "exit_curve.csv") != first) {
      all_ok = false;
      note += "exit_curve.csv differs; ";
    }
  }

  {
    // dataset CSV: ingestion followed by re-serialization is the identity
    SynthesisParams params;
    params.meta = DatasetMeta{};
    params.gains = {2.0, 4.0, 8.0, 16.0, 27.0};
    params.im_a1 = 1.3e-5;
    params.noise_fraction = 0.01;
    const Grid1D grid = make_grid(2048, 2048.0);
    const std::string once = dataset_csv(synthesize_dataset(params, grid, 42));
    const std::string twice = dataset_csv(parse_dataset_csv(once));
    if (once != twice) {
      all_ok = false;
      note += "dataset round trip differs; ";
    }

    // fit outputs are reproducible byte for byte
    const fs::path data = root / "data.csv";
    write_file_atomic(data, once);
    RunConfig c;
    c.grid.n = 2048;
    c.grid.width = 2048.0;
    const fs::path dir = root / "fit";
    c.output.directory = dir.string();
    cmd_fit(c, data, sink);
    const std::string report = read_file(dir / "fit_result.json");
    const std::string resid = read_file(dir / "residuals.csv");
    cmd_fit(c, data, sink);
    if (read_file(dir / "fit_result.json") != report ||
        read_file(dir / "residuals.csv") != resid) {
      all_ok = false;
      note += "fit outputs differ; ";
    }
  }

  report(10, "determinism and formats", all_ok,
         all_ok ? "all preset outputs byte-identical" : note);
}

// 11. recorded non-reproduction: the fig1 net gain regression fixture
static void criterion11() {
  const Grid1D grid = make_grid(4096, 4096.0);
  const MediumParams m = fig1_medium();
  const Field1D seed = synthesize_seed(kFig1Seed, grid, m.k);
  const double gain = net_gain(propagate_to(seed, m.length, m), seed);
  const bool ok = std::abs(gain - kFig1NetGainFixture) <= 1e-9 * kFig1NetGainFixture;
  report(11, "net-gain regression fixture", ok,
         "computed " + fmt(gain) + ", fixture " + fmt(kFig1NetGainFixture));
}

int main() {
  criterion1();
  criterion2();
  criterion3();
  criterion4();
  criterion5();
  criterion6();
  criterion7();
  criterion8();
  criterion9();
  criterion10();
  criterion11();
  if (failures == 0)
    std::printf("acceptance: all 11 criteria passed\n");
  else
    std::printf("acceptance: %d criterion(s) FAILED\n", failures);
  return failures;
}
