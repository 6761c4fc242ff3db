#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <vector>

#include "madlut/matrix.hpp"
#include "madlut/pq.hpp"
#include "madlut/quantsim.hpp"

namespace madlut::accel {

/// One accelerator unit: 4 staggered encoders feeding n_dec decoders, each
/// holding c_dec codebooks of LUT; a w_dec-wide mux retires finished outputs.
/// `units` combined units tile larger problems.
struct AccelConfig {
  int n_enc = 4;  // fixed by the architecture
  int n_dec = 64;
  int c_dec = 16;
  int w_dec = 8;
  int k = 16;
  int cw = 9;
  double clock_hz = 624e6;
  int units = 1;

  int fill_cycles() const {  // log2(k) levels to traverse a tree
    int l = 0, v = k;
    while (v > 1) {
      v >>= 1;
      ++l;
    }
    return l;
  }
  void validate() const;
};

/// Per-event energies from post-layout characterization; overhead_factor
/// absorbs control/clock/mux power not itemized per event.
struct EnergyModel {
  double e_lookup_pj = 0.26;
  double e_encoder_pj = 0.33;
  double e_accum_pj = 0.030;
  double overhead_factor = 1.0;

  double active_cycle_pj(const AccelConfig& cfg) const {
    return (cfg.n_enc * e_encoder_pj +
            cfg.n_dec * (e_lookup_pj + e_accum_pj)) *
           overhead_factor;
  }
};

struct UnitStats {
  std::uint64_t cycles = 0;
  std::uint64_t active_cycles = 0;  // cycles with a decode in flight
  std::uint64_t lookups = 0;
  std::uint64_t encodings = 0;
  double energy_pj = 0.0;
  std::size_t tiles = 0;
};

struct SimReport {
  std::uint64_t cycles = 0;  // makespan across units
  std::uint64_t lookups = 0;
  std::uint64_t ops = 0;  // one lookup = cw MACs = cw * 2 Ops
  double throughput_tops = 0.0;
  double energy_pj = 0.0;
  double efficiency_tops_per_w = 0.0;  // equals ops / energy_pj
  double utilization = 0.0;
  bool saturated = false;
  std::vector<UnitStats> per_unit;
};

/// One unit-sized slice of the problem: rows [n0, n1), codebooks [c0, c1),
/// output columns [m0, m1).
struct Tile {
  std::size_t n0 = 0, n1 = 0;
  std::size_t c0 = 0, c1 = 0;
  std::size_t m0 = 0, m1 = 0;
  int unit = 0;
  bool needs_adder = false;  // partial sums merged across the D direction
};

struct TilePlan {
  std::vector<Tile> tiles;
  int adder_stages = 0;  // D-direction tile count minus one
  std::uint64_t estimated_cycles = 0;
};

/// Deterministic decomposition into unit-sized tiles: output columns in
/// chunks of n_dec, codebooks in chunks of c_dec (flagged as needing the
/// inter-unit adder), rows split across otherwise idle units. Jobs are
/// assigned round-robin.
TilePlan tile_plan(const AccelConfig& cfg, std::size_t n, std::size_t d_codebooks,
                   std::size_t m);

struct SimResult {
  SimReport report;
  std::optional<MatrixI32> output;  // functional mode only
};

/// Cycle-accurate simulation of an n x (d_codebooks codebooks) x m problem.
/// With codes and qlut supplied the datapath is driven functionally and the
/// INT24 output matches quantsim::decode_quantized bit for bit. `trace`
/// receives one line per cycle: cycle, per-encoder tree level, decoder
/// valid-result mask, outputs retired that cycle.
SimResult simulate_matmul(const AccelConfig& cfg, const EnergyModel& em,
                          std::size_t n, std::size_t d_codebooks, std::size_t m,
                          const pq::EncodingMatrix* codes = nullptr,
                          const quantsim::QuantLUT* qlut = nullptr,
                          std::ostream* trace = nullptr);

/// Closed-form steady-state efficiency in TOp/s/W:
/// n_dec * cw * 2 / ((n_enc * e_enc + n_dec * (e_lookup + e_accum)) *
/// overhead_factor). Numerically identical to Ops per pJ.
double peak_efficiency(const AccelConfig& cfg, const EnergyModel& em);

/// Steady-state throughput of all units at full utilization, in TOp/s.
double peak_throughput_tops(const AccelConfig& cfg);

}  // namespace madlut::accel
