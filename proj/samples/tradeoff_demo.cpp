// Builds the optimal measurement for each bundled fixture and prints how close it gets to the bound.

#include <cstdio>
#include <numbers>

#include "qmetro/measurement.hpp"
#include "qmetro/radar.hpp"
#include "qmetro/states.hpp"

int main() {
  using namespace qmetro;
  const double pi = std::numbers::pi;

  std::printf("%-10s %3s %10s %10s %10s %9s\n", "state", "n", "bound", "achieved", "gap", "ancilla");
  auto row = [](const char* name, const OptimalMeasurement& om) {
    const TradeoffReport& r = om.report;
    std::printf("%-10s %3zu %10.6f %10.6f %10.2e %9zu\n", name, r.n, r.tight_bound, *r.achieved, *r.gap,
                om.ancilla_dim);
  };
  row("qubit", construct_optimal_measurement(qubit_fixture(0.0, pi / 4)));
  row("qutrit", construct_optimal_measurement(qutrit_fixture(0.0, pi / 4)));
  row("squeezed", construct_optimal_measurement(squeezed_fixture(0.0, 0.0, 0.3)));

  // Arrival time and frequency of a returned pulse: correlation with the idler relaxes the tradeoff.
  std::printf("\n%6s %10s %12s %12s\n", "kappa", "bound", "sig_t*sig_w", "refined");
  for (double kappa : {0.0, 0.2, 0.4, 0.6, 0.8}) {
    RadarModel m;
    m.source = RadarSource::BiPhoton;
    m.kappa = kappa;
    m.omega0 = 10.0;
    const auto om = optimal_radar_measurement(returned_state(m));
    std::printf("%6.2f %10.6f %12.6f %12.6f\n", kappa, om.report.tight_bound, uncertainty_product(om.cfim.matrix),
                refined_ak_bound(kappa));
  }
  return 0;
}
