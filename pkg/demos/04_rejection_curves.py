"""Rejection-probability curves: the scenario harness end to end.

Runs the overdispersed-nuisance and heteroscedastic one-sample
scenarios at desk scale, prints the rates at conventional levels and
writes the full curves as CSV (one column per method), ready for any
plotting tool.
"""

from signflip import run_scenario, scenario_config, write_curve_csv

# negative-binomial counts fitted as Poisson; beta = 0 so every
# rejection is a type-I error
cfg = scenario_config("overdispersed-nuisance", n=100, reps=500, w=200, seed=3)
curve = run_scenario(cfg)
write_curve_csv(curve, "curve_overdispersed.csv")

print(f"scenario {curve.scenario}: n={cfg.n}, reps={curve.reps}")
print("alpha   " + "  ".join(f"{m:>10s}" for m in curve.rates))
for a in (0.01, 0.05, 0.1, 0.2):
    i = list(curve.alpha).index(a)
    row = "  ".join(f"{curve.rates[m][i]:10.3f}" for m in curve.rates)
    print(f"{a:5.2f}   {row}")
print("wrote curve_overdispersed.csv")

# severe heteroscedasticity (sd_i = exp(i)): the t-test's reference
# distribution is badly wrong, the flip test stays exact
cfg = scenario_config("hetero-t", n=10, reps=3000, seed=4)
curve = run_scenario(cfg)
write_curve_csv(curve, "curve_hetero_t.csv")

print(f"\nscenario {curve.scenario}: sigma_i = exp(i), mu = 0")
print("alpha   " + "  ".join(f"{m:>10s}" for m in curve.rates))
for a in (0.05, 0.25, 0.5, 0.75):
    i = list(curve.alpha).index(a)
    row = "  ".join(f"{curve.rates[m][i]:10.3f}" for m in curve.rates)
    print(f"{a:5.2f}   {row}")
print("wrote curve_hetero_t.csv")

print(
    "\nReading the tables: a well-calibrated test tracks the alpha column;\n"
    "the parametric tests wander far from it under misspecification."
)
