#include <cstdio>
#include <cstdlib>

#include "morphouq/model/simulation.hpp"

int main(int argc, char** argv) {
  morphouq::RunConfig cfg;
  cfg.dx = cfg.dy = argc > 1 ? std::atof(argv[1]) : 0.2;
  cfg.time.t_end = argc > 2 ? std::atof(argv[2]) : 20.0;
  const auto grid = morphouq::grid_for(cfg);
  const auto r = morphouq::run_simulation(grid, cfg, cfg.params);
  std::printf("ok=%d %s steps=%llu wall=%.2fs water_err=%.3e sed_err=%.3e mindt=%.3e\n", r.ok,
              r.failure.c_str(), (unsigned long long)r.diagnostics.steps, r.wall_seconds,
              r.ledger.water_error(), r.ledger.sediment_error(cfg.params.porosity),
              r.diagnostics.min_dt);
  std::printf("%s\n", r.diagnostics.to_json().dump().c_str());
  double maxs = 0, maxd = 0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    double dz = r.zb_final[k] - grid.z_fixed[k] - grid.erodible0[k];
    if (dz < maxs) maxs = dz;
    if (dz > maxd) maxd = dz;
  }
  std::printf("max scour %.4f max deposit %.4f\n", maxs, maxd);
  return 0;
}
