#include "madlut/accel.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace madlut::accel {

void AccelConfig::validate() const {
  if (n_enc != 4)
    throw ValidationError("accel: the architecture fixes n_enc at 4");
  if (n_dec < 1 || c_dec < 1 || w_dec < 1 || cw < 1 || units < 1)
    throw ValidationError("accel: n_dec, c_dec, w_dec, cw, units must be >= 1");
  if (k < 2 || (k & (k - 1)) != 0)
    throw ValidationError("accel: k must be a power of two >= 2");
  if (clock_hz <= 0.0) throw ValidationError("accel: clock must be > 0");
  const int drain_bound = (n_dec + c_dec - 1) / c_dec;
  if (w_dec < drain_bound)
    throw ValidationError(
        "accel: mux cannot drain n_dec results within c_dec cycles; need "
        "w_dec >= ceil(n_dec / c_dec)");
}

double peak_efficiency(const AccelConfig& cfg, const EnergyModel& em) {
  cfg.validate();
  const double ops_per_cycle = static_cast<double>(cfg.n_dec) * cfg.cw * 2.0;
  return ops_per_cycle / em.active_cycle_pj(cfg);  // Ops/pJ == TOp/s/W
}

double peak_throughput_tops(const AccelConfig& cfg) {
  cfg.validate();
  return static_cast<double>(cfg.units) * cfg.n_dec * cfg.cw * 2.0 *
         cfg.clock_hz / 1e12;
}

namespace {

std::uint64_t ceil_div(std::uint64_t a, std::uint64_t b) {
  return (a + b - 1) / b;
}

// Closed-form single-tile cycle count: pipeline fill, one decode per cycle,
// a stall whenever the mux drain outlasts the accumulation window, and the
// final drain.
std::uint64_t tile_cycles(const AccelConfig& cfg, std::uint64_t rows,
                          std::uint64_t ct, std::uint64_t m_active) {
  const std::uint64_t fill = static_cast<std::uint64_t>(cfg.fill_cycles());
  const std::uint64_t drain =
      ceil_div(m_active, static_cast<std::uint64_t>(cfg.w_dec));
  const std::uint64_t stall = drain > ct ? drain - ct : 0;
  return fill + rows * ct + (rows - 1) * stall + drain;
}

}  // namespace

TilePlan tile_plan(const AccelConfig& cfg, std::size_t n, std::size_t d_codebooks,
                   std::size_t m) {
  cfg.validate();
  if (n < 1 || d_codebooks < 1 || m < 1)
    throw ValidationError("tile_plan: problem dims must be >= 1");

  const std::size_t tiles_m = ceil_div(m, cfg.n_dec);
  const std::size_t tiles_c = ceil_div(d_codebooks, cfg.c_dec);
  const std::size_t base_jobs = tiles_m * tiles_c;
  std::size_t n_split = std::max<std::size_t>(1, cfg.units / base_jobs);
  n_split = std::min(n_split, n);

  TilePlan plan;
  plan.adder_stages = static_cast<int>(tiles_c) - 1;
  std::size_t job = 0;
  for (std::size_t ni = 0; ni < n_split; ++ni) {
    const std::size_t n0 = ni * n / n_split;
    const std::size_t n1 = (ni + 1) * n / n_split;
    for (std::size_t ci = 0; ci < tiles_c; ++ci) {
      for (std::size_t mi = 0; mi < tiles_m; ++mi) {
        Tile t;
        t.n0 = n0;
        t.n1 = n1;
        t.c0 = ci * cfg.c_dec;
        t.c1 = std::min(d_codebooks, t.c0 + cfg.c_dec);
        t.m0 = mi * cfg.n_dec;
        t.m1 = std::min(m, t.m0 + cfg.n_dec);
        t.unit = static_cast<int>(job % cfg.units);
        t.needs_adder = ci > 0;
        plan.tiles.push_back(t);
        ++job;
      }
    }
  }

  // per-unit serial estimate; consecutive tiles overlap the next fill with
  // the previous drain
  const std::uint64_t fill = static_cast<std::uint64_t>(cfg.fill_cycles());
  std::uint64_t makespan = 0;
  for (int u = 0; u < cfg.units; ++u) {
    std::uint64_t total = 0;
    std::uint64_t prev_drain = 0;
    bool first = true;
    for (const Tile& t : plan.tiles) {
      if (t.unit != u) continue;
      total += tile_cycles(cfg, t.n1 - t.n0, t.c1 - t.c0, t.m1 - t.m0);
      if (!first) total -= std::min(fill, prev_drain);
      prev_drain = ceil_div(t.m1 - t.m0, static_cast<std::uint64_t>(cfg.w_dec));
      first = false;
    }
    makespan = std::max(makespan, total);
  }
  plan.estimated_cycles = makespan;
  return plan;
}

namespace {

struct EncoderState {
  bool busy = false;
  std::size_t seq = 0;
  int level = 0;
};

struct OutReg {
  bool active = false;
  std::size_t row = 0;
  std::size_t m0 = 0;
  std::size_t m_active = 0;
  std::size_t next = 0;  // next decoder index the mux retires
  std::vector<std::int32_t> vals;
};

void trace_mask(std::ostream& os, const OutReg& oreg, int n_dec) {
  // hex mask of decoders holding a not-yet-retired result, decoder 0 = LSB
  const int digits = (n_dec + 3) / 4;
  for (int d = digits - 1; d >= 0; --d) {
    unsigned nib = 0;
    for (int b = 0; b < 4; ++b) {
      const std::size_t bit = static_cast<std::size_t>(d) * 4 + b;
      if (oreg.active && bit >= oreg.next && bit < oreg.m_active)
        nib |= 1u << b;
    }
    os << "0123456789abcdef"[nib];
  }
}

UnitStats simulate_unit(const AccelConfig& cfg, const EnergyModel& em, int unit,
                        const std::vector<Tile>& tiles,
                        const pq::EncodingMatrix* codes,
                        const quantsim::QuantLUT* qlut, MatrixI32* out,
                        bool& saturated, std::ostream* trace) {
  UnitStats stats;
  stats.tiles = tiles.size();
  if (tiles.empty()) return stats;

  std::size_t total_tasks = 0;
  for (const Tile& t : tiles) total_tasks += (t.n1 - t.n0) * (t.c1 - t.c0);

  const int fill = cfg.fill_cycles();
  const double cycle_pj = em.active_cycle_pj(cfg);

  std::array<EncoderState, 4> encs{};
  std::vector<quantsim::Acc24> accs(static_cast<std::size_t>(cfg.n_dec));
  OutReg oreg;
  std::size_t next_start = 0;  // next task to enter an encoder
  std::size_t next_push = 0;   // next task allowed into the decode stage
  bool pending = false;
  std::size_t consumed = 0;
  std::size_t dec_tile = 0, dec_row = 0, dec_cl = 0;
  std::uint64_t cycle = 0;

  auto merge_out = [&](std::size_t r, std::size_t m, std::int32_t v) {
    std::int64_t s = static_cast<std::int64_t>(out->at(r, m)) + v;
    if (s > quantsim::kAcc24Max) {
      s = quantsim::kAcc24Max;
      saturated = true;
    } else if (s < quantsim::kAcc24Min) {
      s = quantsim::kAcc24Min;
      saturated = true;
    }
    out->at(r, m) = static_cast<std::int32_t>(s);
  };

  while (consumed < total_tasks || oreg.active) {
    ++cycle;
    // mux stage: retire up to w_dec results in decoder order
    std::vector<std::pair<std::size_t, std::size_t>> retired;
    for (int i = 0; i < cfg.w_dec && oreg.active; ++i) {
      if (out) merge_out(oreg.row, oreg.m0 + oreg.next, oreg.vals[oreg.next]);
      retired.emplace_back(oreg.row, oreg.m0 + oreg.next);
      if (++oreg.next == oreg.m_active) oreg.active = false;
    }

    // decode stage: one lookup+accumulate across the decoder array per
    // cycle; a finished row may only latch once the previous one drained
    bool stalled = false;
    if (pending) {
      const Tile& t = tiles[dec_tile];
      const std::size_t ct = t.c1 - t.c0;
      const bool last_cb = dec_cl + 1 == ct;
      if (last_cb && oreg.active) {
        stalled = true;
      } else {
        pending = false;
        ++consumed;
        const std::size_t m_active = t.m1 - t.m0;
        ++stats.active_cycles;
        ++stats.encodings;
        stats.lookups += m_active;
        stats.energy_pj += cycle_pj;
        const std::size_t grow = t.n0 + dec_row;
        const std::size_t gc = t.c0 + dec_cl;
        if (codes) {
          const std::uint32_t code = codes->at(grow, gc);
          const std::int8_t* qrow =
              &qlut->q_values[(gc * qlut->k_count + code) * qlut->m_count +
                              t.m0];
          for (std::size_t d = 0; d < m_active; ++d) accs[d].add(qrow[d]);
        }
        if (last_cb) {
          oreg.active = true;
          oreg.row = grow;
          oreg.m0 = t.m0;
          oreg.m_active = m_active;
          oreg.next = 0;
          oreg.vals.resize(m_active);
          for (std::size_t d = 0; d < m_active; ++d) {
            oreg.vals[d] = accs[d].value();
            if (accs[d].saturated()) saturated = true;
            accs[d].reset();
          }
          dec_cl = 0;
          if (++dec_row == t.n1 - t.n0) {
            dec_row = 0;
            ++dec_tile;
          }
        } else {
          ++dec_cl;
        }
      }
    }

    // encoder stage: frozen while the decode stage stalls. One tree level
    // per cycle; starts are staggered one per cycle; completed encodings
    // enter the decode stage in task order.
    if (!stalled) {
      for (auto& e : encs)
        if (e.busy && e.level < fill) ++e.level;
      if (next_start < total_tasks) {
        for (auto& e : encs) {
          if (!e.busy) {
            e.busy = true;
            e.seq = next_start++;
            e.level = 1;
            break;
          }
        }
      }
      if (!pending) {
        for (auto& e : encs) {
          if (e.busy && e.level >= fill && e.seq == next_push) {
            pending = true;
            ++next_push;
            e.busy = false;
            break;
          }
        }
      }
    }

    if (trace) {
      *trace << unit << ',' << cycle;
      for (const auto& e : encs) {
        *trace << ',';
        if (e.busy)
          *trace << e.level;
        else
          *trace << '-';
      }
      *trace << ',';
      trace_mask(*trace, oreg, cfg.n_dec);
      *trace << ',';
      for (std::size_t i = 0; i < retired.size(); ++i) {
        if (i) *trace << ' ';
        *trace << retired[i].first << ':' << retired[i].second;
      }
      *trace << '\n';
    }
  }
  stats.cycles = cycle;
  return stats;
}

}  // namespace

SimResult simulate_matmul(const AccelConfig& cfg, const EnergyModel& em,
                          std::size_t n, std::size_t d_codebooks, std::size_t m,
                          const pq::EncodingMatrix* codes,
                          const quantsim::QuantLUT* qlut, std::ostream* trace) {
  cfg.validate();
  const bool functional = codes != nullptr || qlut != nullptr;
  if (functional) {
    if (!codes || !qlut)
      throw ValidationError("simulate_matmul: functional mode needs codes and qlut");
    if (codes->n_rows != n || codes->c_count != d_codebooks)
      throw ValidationError("simulate_matmul: codes shape mismatch");
    if (qlut->c_count != d_codebooks || qlut->m_count != m)
      throw ValidationError("simulate_matmul: qlut shape mismatch");
    if (qlut->k_count != static_cast<std::size_t>(cfg.k))
      throw ValidationError("simulate_matmul: qlut k != configured k");
    if (d_codebooks > (std::size_t{1} << 15))
      throw ValidationError("simulate_matmul: c_count > 2^15 overflows INT24");
  }

  const TilePlan plan = tile_plan(cfg, n, d_codebooks, m);

  SimResult res;
  if (functional) res.output = MatrixI32(n, m, 0);
  if (trace) *trace << "# unit,cycle,enc0,enc1,enc2,enc3,valid_mask,retired\n";

  bool saturated = false;
  res.report.per_unit.resize(static_cast<std::size_t>(cfg.units));
  for (int u = 0; u < cfg.units; ++u) {
    std::vector<Tile> mine;
    for (const Tile& t : plan.tiles)
      if (t.unit == u) mine.push_back(t);
    res.report.per_unit[static_cast<std::size_t>(u)] = simulate_unit(
        cfg, em, u, mine, functional ? codes : nullptr,
        functional ? qlut : nullptr,
        res.output ? &*res.output : nullptr, saturated, trace);
  }

  SimReport& rep = res.report;
  std::uint64_t active_total = 0;
  for (const UnitStats& us : rep.per_unit) {
    rep.cycles = std::max(rep.cycles, us.cycles);
    rep.lookups += us.lookups;
    rep.energy_pj += us.energy_pj;
    active_total += us.active_cycles;
  }
  rep.ops = rep.lookups * static_cast<std::uint64_t>(cfg.cw) * 2;
  rep.saturated = saturated;
  if (rep.cycles > 0) {
    rep.throughput_tops = static_cast<double>(rep.ops) * cfg.clock_hz /
                          (static_cast<double>(rep.cycles) * 1e12);
    rep.utilization = static_cast<double>(active_total) /
                      (static_cast<double>(rep.cycles) * cfg.units);
  }
  if (rep.energy_pj > 0.0)
    rep.efficiency_tops_per_w = static_cast<double>(rep.ops) / rep.energy_pj;
  return res;
}

}  // namespace madlut::accel
