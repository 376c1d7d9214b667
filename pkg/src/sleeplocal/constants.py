"""Constants pinned from calibration runs.

``calibration/calibrate.py`` in the repository root produced the measured
values recorded in ``calibration/results.json``; each constant is the
measured maximum rounded up.  Later runs must not exceed them.
"""

# Smallest integer a with final colour-reduction palette <= a * delta**2
# (checked for delta <= 256; the worst case is delta = 1, palette 9).
LINIAL_A = 9

# Pipeline: max awake <= A * (sqrt(log2 n) + 1) * (log* n + 1).  Measured 2.5.
PIPELINE_AWAKE_A = 3

# Colouring solver: max awake <= B * log2(2q) + C.  Measured exactly log2(2q) + 1.
SOLVER_AWAKE_B = 1
SOLVER_AWAKE_CONST = 1

# IDs in 1..n used as the distance-2 colouring: max round <= R * n^2 * sqrt(log2 n).
# Measured 12.04 (n = 512, two phases).
ROUND_REGIME_R = 13

# Distributed merge: max awake per node.  Measured 35, which is also the
# schedule's bound: 5 for the cluster summary plus 5 per virtual awake round
# of a 3 + 3 round convergecast and broadcast.
MERGE_AWAKE_MAX = 35
