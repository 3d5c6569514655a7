"""How the estimation error shrinks as the tensor grows.

For fixed ranks the mode sizes grow together; the RMSE of the fitted mean is
plotted (as text) against the rescaled sample size sqrt(d_2 d_3 / log R_1).

Run: python3 demos/rmse_scaling.py
"""
from tbm.harness import scaling_suite

rows = scaling_suite(3, d1_values=(20, 30, 40, 50), rank_sets=((2, 2, 2), (4, 4, 4)),
                     sigma=3.0, sims=3, seed=0)
for r in rows:
    if r["kind"] == "summary":
        bar = "#" * int(round(r["rmse"] * 200))
        print(f"R={r['ranks']} dims={r['dims']} N={r['N']:6.1f} rmse={r['rmse']:.4f} {bar}")
    elif r["kind"] == "slope":
        print(f"R={r['ranks']}: log-log slope {r['rmse']:.2f}")
