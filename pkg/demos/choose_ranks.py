"""Pick the number of clusters per mode with BIC.

Every rank triple in a small grid is fitted and scored by
log(RSS) + (sum log d_k / prod d_k) * p_e; the smallest score wins.

Run: python3 demos/choose_ranks.py
"""
from tbm import FitConfig, SelectionGrid, SimConfig, cartesian_ranks, gen_data, select_ranks

sim = gen_data(SimConfig(dims=(30, 30, 30), ranks=(2, 3, 4), sigma=3.0, seed=5))
grid = SelectionGrid(rank_candidates=cartesian_ranks([range(2, 6)] * 3),
                     fit_config_template=FitConfig(ranks=(1, 1, 1), restarts=5))
best, rows = select_ranks(sim.y, grid)

print("truth (2, 3, 4), selected", best)
print("\nfive best candidates:")
for row in sorted(rows, key=lambda r: r.bic)[:5]:
    print(f"  {row.ranks}  bic={row.bic:.5f}  p_e={row.p_e:.1f}")
