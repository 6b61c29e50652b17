"""Secret-key-rate demo: SKR against fibre distance.

At each distance the modulation variance is solved so the code operates at
a fixed efficiency beta = R / I_AB; the key rate then follows from the
Holevo bound, the finite-size penalty, and the measured (here: assumed)
frame error rate.  Equivalent CLI:
    sbrec skr-distance --config cfg   (with fer_override set)
"""

from sbrec import harness

cfg = harness.make_config(
    experiment="skr-distance", operating_beta=0.99, fer_override=0.87,
    distance_grid=(10.0, 50.0, 100.0, 140.0, 160.0, 180.0),
)
rows = harness.skr_distance(cfg)
print(f"{'km':>5} {'V_A':>10} {'chi_BE':>10} {'SKR':>12} {'DW':>10} {'PLOB':>10}")
for row in rows:
    flag = "  (below zero)" if row["below_zero"] else ""
    print(f"{row['distance_km']:5.0f} {row['v_a']:10.4f} {row['chi_be']:10.6f} "
          f"{row['skr']:12.3e} {row['dw']:10.3e} {row['plob']:10.3e}{flag}")
