//! Frozen CSV headers. `docs/FORMATS.md` documents each column.

pub const SIMULATE: [&str; 6] = ["t", "mass", "wick_mass", "hs_norm_sq", "h_sigma_norm", "q_value"];

pub const QUASI: [&str; 9] = [
    "functional",
    "t",
    "samples",
    "overflowed",
    "mean_pushforward",
    "stderr_pushforward",
    "mean_density",
    "stderr_density",
    "z_paired",
];

pub const QUASI_OVERFLOW: [&str; 2] = ["sample_index", "log_f"];

pub const DENSITY_LP: [&str; 8] = ["n_trunc", "t", "p", "log_norm", "stderr", "samples", "z_vs_previous_n", "plateau"];

pub const DENSITY_LP_FIT: [&str; 7] = ["n_trunc", "p", "fitted_exponent", "exponent_stderr", "points", "growth_a", "below_growth_a"];

pub const TAU_TAIL: [&str; 5] = ["level", "m", "lambda", "survival", "stderr"];

pub const TAU_SAMPLES: [&str; 7] = ["sample_index", "weight", "tau", "m", "passed", "norm_l2", "norm_hs"];

/// Every CSV the commands write, with its header.
pub const ALL: [(&str, &[&str]); 7] = [
    ("simulate.csv", &SIMULATE),
    ("quasi.csv", &QUASI),
    ("quasi_overflow.csv", &QUASI_OVERFLOW),
    ("density_lp.csv", &DENSITY_LP),
    ("density_lp_fit.csv", &DENSITY_LP_FIT),
    ("tau_tail.csv", &TAU_TAIL),
    ("tau_samples.csv", &TAU_SAMPLES),
];
