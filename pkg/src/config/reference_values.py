"""
Published reference figures for the EDATA and Brain Core analyses.

EDATA values are in the publication's (unstated) 1e-5 volume scale and only
their ordering is meaningful here. Brain Core data is private; those numbers
document what a run on that cohort should reproduce.
"""

EDATA_FS = 173.61  # Hz
EDATA_SEGMENT_SECONDS = 23.6
EDATA_SERIES_PER_SET = 100
EDATA_EMBEDDING = {"m": 10, "lag": 1}

# smallest alpha maximising the pooled volume, per set
EDATA_OPTIMAL_ALPHA = {
    "A": 200.0,
    "E": 580.0,
}
EDATA_COMMON_ALPHA = 580.0

LORENZ_REFERENCE = {
    "s": 10.0,
    "r": 28.0,
    "b": 8.0 / 3.0,
    "dt": 0.005,
    "t_end": 75.0,
    "lag": 31,
}

PARABOLOID_REFERENCE = {
    "n": 2500,
    "alphas": [0.0, 0.5, 0.8, 2.0],
}

BRAIN_CORE_ALPHA = 300.0

BRAIN_CORE_POOLED_VOLUMES = {
    ("Auditory cortex", "Auditory task"): 7.8181,
    ("Visual cortex", "Rest"): 14.745,
}
