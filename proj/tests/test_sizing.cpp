#include <doctest.h>

#include "capfirm/dataset.hpp"
#include "capfirm/sizing.hpp"
#include "oracles/oracles.hpp"

using namespace capfirm;

namespace {

constexpr double kPc = 466.4;

AnnualFigures figures(double e_mwh, double revenue, double w = 0.0, double c = 0.0, double cycles = 0.0) {
  AnnualFigures f;
  f.export_mwh = e_mwh;
  f.revenue = revenue;
  f.withdraw_cost = w;
  f.penalty = c;
  f.cycles = cycles;
  return f;
}

const std::vector<DatasetDay>& days() {
  static const auto d = [] {
    SyntheticOptions o;
    o.days = 6;
    o.seed = 8;
    return generate_synthetic_dataset(o);
  }();
  return d;
}

}  // namespace

TEST_CASE("capital recovery factor") {
  CHECK(std::abs(crf(0.05, 20) - oracle::crf_by_summation(0.05, 20)) <= 1e-12);
  CHECK(crf(0.05, 20) == doctest::Approx(0.0802426).epsilon(1e-6));
  CHECK(crf(0.07, 1) == doctest::Approx(1.07).epsilon(1e-14));
  CHECK(crf(0.0, 20) == 0.05);
  CHECK(crf(1e-9, 20) == doctest::Approx(0.05).epsilon(1e-6));
  for (double i : {0.01, 0.03, 0.08, 0.12})
    for (int n : {1, 5, 10, 25, 40}) CHECK(std::abs(crf(i, n) - oracle::crf_by_summation(i, n)) <= 1e-12);
  CHECK_THROWS_AS(crf(0.05, 0), DomainError);
  CHECK_THROWS_AS(crf(-0.05, 10), DomainError);
  // the template also works on long double
  CHECK(static_cast<double>(crf<long double>(0.05L, 20)) == doctest::Approx(crf(0.05, 20)).epsilon(1e-15));
}

TEST_CASE("battery replacements") {
  const EconParams econ;
  CHECK(battery_count(200.0, 233.2, econ) == 2);
  CHECK(battery_count(150.0, 233.2, econ) == 1);
  CHECK(battery_count(150.000001, 233.2, econ) == 2);
  CHECK(battery_count(0.0, 233.2, econ) == 1);
  CHECK(battery_count(500.0, 0.0, econ) == 0);
  CHECK(investment(kPc, 233.2, 2, econ) == doctest::Approx(326480.0 + 2 * 300.0 * 233.2));
}

TEST_CASE("levelised cost and net revenue") {
  const EconParams econ;
  const auto f = figures(600.0, 60000.0);
  const double expected = (oracle::crf_by_summation(0.05, 20) * 326480.0 + 3264.8) / 600.0;
  CHECK(lcoe(f, econ, kPc, 0.0) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(lcoe(f, econ, kPc, 0.0) == doctest::Approx(49.10).epsilon(1e-3));
  CHECK(net(f, econ, kPc, 0.0) == doctest::Approx(100.0 - expected).epsilon(1e-12));
  CHECK(net(f, econ, kPc, 0.0) == doctest::Approx(50.90).epsilon(1e-3));
  // doubling exports halves the cost per MWh
  CHECK(lcoe(figures(1200.0, 0.0), econ, kPc, 0.0) == doctest::Approx(expected / 2).epsilon(1e-12));
  // break-even
  const auto even = figures(600.0, expected * 600.0);
  CHECK(net(even, econ, kPc, 0.0) == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
  // withdrawals and penalties enter as annual costs; cycles drive replacements
  const auto g = figures(600.0, 60000.0, 1200.0, 300.0, 200.0);
  const double I = 326480.0 + 2 * 300.0 * 233.2;
  CHECK(lcoe(g, econ, kPc, 233.2) == doctest::Approx((crf(0.05, 20) * I + 0.01 * I + 1500.0) / 600.0).epsilon(1e-12));
  CHECK_THROWS_AS(lcoe(figures(0.0, 0.0), econ, kPc, 0.0), DomainError);
}

TEST_CASE("with no withdrawal or penalty, net is affine increasing in the price") {
  const EconParams econ;
  double prev = -INFINITY, prev_slope = NAN;
  for (double price = 50.0; price <= 400.0; price += 50.0) {
    const double v = net(figures(500.0, price * 500.0, 0.0, 0.0, 120.0), econ, kPc, 233.2);
    CHECK(v > prev);
    if (prev > -INFINITY) {
      const double slope = (v - prev) / 50.0;
      if (!std::isnan(prev_slope)) CHECK(slope == doctest::Approx(prev_slope).epsilon(1e-12));
      prev_slope = slope;
    }
    prev = v;
  }
}

TEST_CASE("scaling every money flow scales net and keeps the ranking") {
  EconParams econ, scaled = econ;
  const double k = 3.5;
  scaled.capex_bess *= k;
  scaled.capex_pv *= k;
  const auto a = figures(500.0, 40000.0, 900.0, 120.0, 140.0);
  auto b = a;
  b.revenue *= k;
  b.withdraw_cost *= k;
  b.penalty *= k;
  CHECK(net(b, scaled, kPc, 233.2) == doctest::Approx(k * net(a, econ, kPc, 233.2)).epsilon(1e-12));

  SizingGrid g;
  g.prices = {100.0};
  g.ratios = {0.5, 1.0, 1.5};
  const double nets[] = {2.0, 5.0, 1.0};
  for (int r = 0; r < 3; ++r) {
    SizingCell c;
    c.price = 100.0;
    c.ratio = g.ratios[r];
    c.net = nets[r];
    c.valid = true;
    g.cells.push_back(c);
  }
  auto gs = g;
  for (auto& c : gs.cells) c.net *= k;
  CHECK(argmax_by_price(g)[0].ratio == argmax_by_price(gs)[0].ratio);
  CHECK(*argmax_by_price(g)[0].ratio == 1.0);
}

TEST_CASE("argmax breaks ties toward the smaller ratio and skips holes") {
  SizingGrid g;
  g.prices = {50.0, 100.0};
  g.ratios = {0.5, 1.0, 1.5};
  const double nets[2][3] = {{3.0, 3.0, 1.0}, {9.0, 4.0, 8.0}};
  for (int p = 0; p < 2; ++p)
    for (int r = 0; r < 3; ++r) {
      SizingCell c;
      c.price = g.prices[p];
      c.ratio = g.ratios[r];
      c.net = nets[p][r];
      c.valid = !(p == 1 && r == 0);
      g.cells.push_back(c);
    }
  const auto a = argmax_by_price(g);
  REQUIRE(a.size() == 2);
  CHECK(*a[0].ratio == 0.5);
  CHECK(*a[1].ratio == 1.5);
  CHECK(a[1].net == 8.0);
  for (auto& c : g.cells) c.valid = false;
  CHECK_FALSE(argmax_by_price(g)[0].ratio.has_value());
}

TEST_CASE("sizing rule") {
  const auto s = StorageSizingRule{}.system(kPc, 0.5);
  CHECK(s.bess_capacity == doctest::Approx(0.9 * 233.2));
  CHECK(s.bess_min == doctest::Approx(0.1 * 233.2));
  CHECK(s.soc_init == doctest::Approx(0.1 * 233.2));
  CHECK(s.soc_end == s.soc_init);
  CHECK(s.charge_power == doctest::Approx(233.2));
  CHECK(s.discharge_power == doctest::Approx(233.2));
  CHECK(s.eta_charge == 0.95);
  CHECK_THROWS_AS(StorageSizingRule{}.system(kPc, -1.0), ConfigError);
}

TEST_CASE("default grids span 56 cells") {
  CHECK(default_prices().size() == 8);
  CHECK(default_ratios().size() == 7);
  CHECK(default_prices().front() == 50.0);
  CHECK(default_prices().back() == 400.0);
  CHECK(default_ratios().front() == 0.5);
  CHECK(default_ratios().back() == 2.0);
}

TEST_CASE("single-cell grid equals a direct evaluation") {
  SizingSetup setup;
  setup.mode = PlanMode::Deterministic;
  const auto g = grid_search(days(), {150.0}, {1.0}, setup);
  REQUIRE(g.cells.size() == 1);
  const auto& c = g.at(0, 0);
  const auto direct = evaluate_cell(days(), 150.0, 1.0, setup);
  CHECK(c.net == direct.net);
  CHECK(c.valid);
  CHECK(c.net == doctest::Approx(net(c.figures, setup.econ, kPc, kPc)).epsilon(1e-12));
  CHECK(c.net == doctest::Approx(c.figures.revenue / c.figures.export_mwh - c.lcoe).epsilon(1e-12));
  CHECK(c.lcoe == doctest::Approx(lcoe(c.figures, setup.econ, kPc, kPc)).epsilon(1e-12));
  CHECK(c.battery_count >= 1);
  REQUIRE(g.argmax.size() == 1);
  CHECK(*g.argmax[0].ratio == 1.0);
}

TEST_CASE("small grid: decomposition identity on every cell and jobs-independence") {
  SizingSetup setup;
  setup.mode = PlanMode::Deterministic;
  const auto a = grid_search(days(), {50.0, 200.0}, {0.5, 1.5}, setup);
  setup.sim.jobs = 3;
  const auto b = grid_search(days(), {50.0, 200.0}, {0.5, 1.5}, setup);
  REQUIRE(a.cells.size() == 4);
  for (std::size_t k = 0; k < 4; ++k) {
    const auto& c = a.cells[k];
    const double nominal = c.ratio * kPc;
    CHECK(c.net == doctest::Approx(net(c.figures, setup.econ, kPc, nominal)).epsilon(1e-12));
    CHECK(c.battery_count == battery_count(c.figures.cycles, nominal, setup.econ));
    CHECK(c.net == b.cells[k].net);
  }
  CHECK(a.at(1, 0).price == 200.0);
  CHECK(a.at(1, 0).ratio == 0.5);
  CHECK(a.at(1, 0).net > a.at(0, 0).net);
}
